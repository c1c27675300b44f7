"""Slow, obviously-correct reference implementations used by the tests.

None of these share code with the package: thresholds are found by
exhaustive search with direct formulas, morphology by stamping the
footprint, reconstruction by dilating until nothing changes, and labeling
by breadth-first flood fill.
"""
from __future__ import annotations

import math
from collections import deque

import numpy as np


# Thresholds -----------------------------------------------------------------

def _occupied_span(counts):
    nz = [i for i, c in enumerate(counts) if c > 0]
    return nz[0], nz[-1]


def otsu_oracle(counts) -> int:
    """Argmax of the exact between-class variance over t in [lo, hi).

    For a split with ``n0`` pixels summing to ``s0`` out of ``N`` pixels
    summing to ``S``, ``N**3`` times the between-class variance equals
    ``(N*s0 - S*n0)**2 / (n0 * (N - n0))``; candidates are compared by
    cross-multiplying, in exact integers.
    """
    counts = [int(c) for c in counts]
    lo, hi = _occupied_span(counts)
    total = sum(counts)
    weighted = sum(v * c for v, c in enumerate(counts))
    best_t, best_num, best_den = None, 0, 1
    n0 = s0 = 0
    for t in range(hi):
        n0 += counts[t]
        s0 += t * counts[t]
        if t < lo:
            continue
        num = (total * s0 - weighted * n0) ** 2
        den = n0 * (total - n0)
        if best_t is None or num * best_den > best_num * den:
            best_t, best_num, best_den = t, num, den
    return best_t


def _entropy(p):
    """Shannon entropy (natural log) of ``p`` renormalized to sum to one."""
    p = p[p > 0]
    q = p / math.fsum(p.tolist())
    return float(-np.sum(q * np.log(q)))


def kapur_objective(counts, t) -> float:
    """Sum of the Shannon entropies of the two renormalized classes."""
    p = np.asarray(counts, dtype=np.float64)
    return _entropy(p[: t + 1]) + _entropy(p[t + 1:])


def kapur_oracle(counts, rtol=1e-12) -> int:
    """Smallest t in [lo, hi) whose entropy sum is maximal (up to rounding)."""
    lo, hi = _occupied_span(counts)
    values = [(t, kapur_objective(counts, t)) for t in range(lo, hi)]
    top = max(v for _, v in values)
    return next(t for t, v in values if v >= top - rtol * abs(top))


# Morphology -------------------------------------------------------------------

def disk_offsets(r):
    return [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1) if dy * dy + dx * dx <= r * r]


def dilate_oracle(m, r):
    m = np.asarray(m, dtype=bool)
    h, w = m.shape
    out = np.zeros_like(m)
    for y, x in zip(*np.nonzero(m)):
        for dy, dx in disk_offsets(r):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w:
                out[yy, xx] = True
    return out


def erode_oracle(m, r):
    """Pixels whose whole disk lies inside ``m``; off-raster counts as False."""
    m = np.asarray(m, dtype=bool)
    h, w = m.shape
    out = np.zeros_like(m)
    offs = disk_offsets(r)
    for y in range(h):
        for x in range(w):
            out[y, x] = all(0 <= y + dy < h and 0 <= x + dx < w and m[y + dy, x + dx] for dy, dx in offs)
    return out


def neighbours(conn):
    if conn == 4:
        return [(-1, 0), (1, 0), (0, -1), (0, 1)]
    return [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def reconstruct_oracle(marker, mask, conn=8):
    """Iterate ``J <- min(unit_dilate(J), mask)`` from ``min(marker, mask)``
    until nothing changes."""
    mask = np.asarray(mask, dtype=np.int64)
    J = np.minimum(np.asarray(marker, dtype=np.int64), mask)
    h, w = J.shape
    while True:
        padded = np.pad(J, 1, constant_values=0)
        dil = J.copy()
        for dy, dx in neighbours(conn):
            dil = np.maximum(dil, padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w])
        nxt = np.minimum(dil, mask)
        if np.array_equal(nxt, J):
            return J
        J = nxt


def label_oracle(m, conn=8):
    """Breadth-first flood fill; labels assigned in raster order of seeds."""
    m = np.asarray(m, dtype=bool)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int64)
    count = 0
    for y in range(h):
        for x in range(w):
            if m[y, x] and labels[y, x] == 0:
                count += 1
                labels[y, x] = count
                queue = deque([(y, x)])
                while queue:
                    cy, cx = queue.popleft()
                    for dy, dx in neighbours(conn):
                        ny, nx = cy + dy, cx + dx
                        if 0 <= ny < h and 0 <= nx < w and m[ny, nx] and labels[ny, nx] == 0:
                            labels[ny, nx] = count
                            queue.append((ny, nx))
    return labels, count


def same_partition(a, b):
    """True when two label images describe the same set of regions."""
    a, b = np.asarray(a), np.asarray(b)
    if not np.array_equal(a > 0, b > 0):
        return False
    pairs = set(zip(a[a > 0].tolist(), b[b > 0].tolist()))
    return len(pairs) == len({p[0] for p in pairs}) == len({p[1] for p in pairs})
