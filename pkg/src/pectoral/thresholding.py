"""Global threshold selectors working on full-resolution histograms.

Both selectors split intensities into ``{v <= t}`` and ``{v > t}``, scan
every ``t`` in ``[lo, hi)`` of the occupied range, and break ties towards
the smallest ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateHistogramError
from .raster import GrayImage, check_same_shape, occupied_range


@dataclass(frozen=True)
class ThresholdResult:
    threshold: int
    objective: float


def _occupied(counts) -> tuple[np.ndarray, int, int]:
    counts = np.asarray(counts)
    if counts.ndim != 1:
        raise ValueError("histogram must be one-dimensional")
    if counts.size and counts.min() < 0:
        raise ValueError("histogram counts must be non-negative")
    lo, hi, n = occupied_range(counts)
    if n < 2:
        raise DegenerateHistogramError(f"histogram has {n} occupied bin(s); need at least 2")
    return counts, lo, hi


def _first_argmax(values: np.ndarray, rtol: float = 1e-12) -> int:
    """First index whose value is within ``rtol`` of the maximum, so that
    ties (up to rounding) go to the smallest threshold."""
    top = values.max()
    return int(np.flatnonzero(values >= top - rtol * abs(top))[0])


def otsu_threshold(counts) -> ThresholdResult:
    """Otsu's selector: maximize the between-class variance.

    Parameters
    ----------
    counts : array_like
        Histogram, one tally per intensity.

    Returns
    -------
    ThresholdResult
        ``objective`` is ``w0 * w1 * (mu0 - mu1)**2`` with class weights as
        fractions of the total population.
    """
    counts, lo, hi = _occupied(counts)
    c = counts[lo:hi + 1].astype(np.float64)
    # offsets from lo keep the objective exactly shift-invariant
    v = np.arange(hi - lo + 1, dtype=np.float64)
    total = c.sum()
    n0 = np.cumsum(c)[:-1]
    s0 = np.cumsum(c * v)[:-1]
    n1 = total - n0
    s1 = (c * v).sum() - s0
    # n0, n1 > 0 for every t in [lo, hi)
    between = (n0 / total) * (n1 / total) * (s0 / n0 - s1 / n1) ** 2
    top = between.max()
    near = np.flatnonzero(between >= top * (1.0 - 1e-9))
    k = int(near[0]) if near.size == 1 else _exact_otsu_best(counts[lo:hi + 1], near)
    return ThresholdResult(lo + k, float(between[k]))


def _exact_otsu_best(c: np.ndarray, candidates: np.ndarray) -> int:
    # between-class variance is proportional to (T*s0 - S*n0)**2 / (n0*n1);
    # compare candidates as exact integer fractions
    n0 = np.cumsum(c, dtype=np.int64)
    s0 = np.cumsum(c.astype(np.int64) * np.arange(c.size, dtype=np.int64))
    total, weighted = int(n0[-1]), int(s0[-1])
    best, best_num, best_den, prev = -1, 0, 1, None
    for k in (int(i) for i in candidates):
        a, s = int(n0[k]), int(s0[k])
        if a == prev:
            # empty bins in between: the same split as the previous candidate
            continue
        prev = a
        num = (total * s - weighted * a) ** 2
        den = a * (total - a)
        if best < 0 or num * best_den > best_num * den:
            best, best_num, best_den = k, num, den
    return best


def kapur_threshold(counts) -> ThresholdResult:
    """Maximum-entropy selector of Kapur, Sahoo and Wong.

    For each split the two classes are renormalized to probability
    distributions and their Shannon entropies (natural log) are summed;
    the split with the largest sum wins.
    """
    counts, lo, hi = _occupied(counts)
    c = counts[lo:hi + 1].astype(np.float64)
    p = c / c.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    cum_p = np.cumsum(p)[:-1]
    cum_plogp = np.cumsum(plogp)[:-1]
    tail_p = np.cumsum(p[::-1])[::-1][1:]
    tail_plogp = np.cumsum(plogp[::-1])[::-1][1:]
    # H = -sum (p/P) ln(p/P) = ln P - (sum p ln p) / P
    h_low = np.log(cum_p) - cum_plogp / cum_p
    h_high = np.log(tail_p) - tail_plogp / tail_p
    total = h_low + h_high
    k = _first_argmax(total)
    return ThresholdResult(lo + k, float(total[k]))


def apply_threshold(img: GrayImage, t: int, roi: np.ndarray | None = None) -> np.ndarray:
    """Foreground mask: pixels strictly brighter than ``t``, inside ``roi``."""
    if not 0 <= t <= img.max_value:
        raise ValueError(f"threshold {t} outside the {img.bit_depth}-bit range")
    mask = img.pixels > t
    if roi is not None:
        roi = np.asarray(roi, dtype=bool)
        check_same_shape(img.pixels, roi)
        mask &= roi
    return mask
