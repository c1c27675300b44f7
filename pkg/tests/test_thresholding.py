import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pectoral.errors import DegenerateHistogramError
from pectoral.raster import GrayImage
from pectoral.thresholding import apply_threshold, kapur_threshold, otsu_threshold

from oracles import kapur_objective, kapur_oracle, otsu_oracle

histograms = hnp.arrays(np.int64, st.integers(2, 40), elements=st.integers(0, 50)).filter(
    lambda h: np.count_nonzero(h) >= 2)


def test_otsu_two_spikes_splits_between():
    h = np.zeros(256, int)
    h[10] = 100
    h[200] = 100
    assert otsu_threshold(h).threshold == 10


def test_kapur_two_spikes_smallest_t_wins():
    # every t in [10, 200) gives two single-bin classes with zero entropy
    h = np.zeros(256, int)
    h[10] = 100
    h[200] = 100
    r = kapur_threshold(h)
    assert r.threshold == 10 and r.objective == 0.0


def test_kapur_uniform_block_split_in_half():
    h = np.zeros(256, int)
    h[0:4] = 1
    # entropies ln(k) + ln(4 - k) peak at k = 2, i.e. t = 1
    r = kapur_threshold(h)
    assert r.threshold == 1
    assert r.objective == pytest.approx(2 * math.log(2))


def test_symmetric_histogram_ties_go_low():
    assert otsu_threshold([1, 2, 1]).threshold == 0
    assert kapur_threshold([1, 2, 1]).threshold == 0


@pytest.mark.parametrize("selector", [otsu_threshold, kapur_threshold])
def test_degenerate_histograms(selector):
    with pytest.raises(DegenerateHistogramError):
        selector(np.zeros(256, int))
    single = np.zeros(256, int)
    single[17] = 5
    with pytest.raises(DegenerateHistogramError):
        selector(single)


@pytest.mark.parametrize("selector", [otsu_threshold, kapur_threshold])
def test_threshold_inside_occupied_range(selector):
    h = np.zeros(65536, int)
    h[[300, 301, 5000, 60000]] = [3, 1, 4, 1]
    t = selector(h).threshold
    assert 300 <= t < 60000


@given(histograms)
def test_otsu_matches_exhaustive_oracle(h):
    assert otsu_threshold(h).threshold == otsu_oracle(h)


@given(histograms)
def test_kapur_matches_exhaustive_oracle(h):
    r = kapur_threshold(h)
    assert r.threshold == kapur_oracle(h)
    assert r.objective == pytest.approx(kapur_objective(h, r.threshold), rel=1e-9, abs=1e-12)


@given(histograms, st.integers(0, 200))
def test_shift_covariance(h, k):
    shifted = np.concatenate([np.zeros(k, np.int64), h])
    assert otsu_threshold(shifted).threshold == otsu_threshold(h).threshold + k
    assert kapur_threshold(shifted).threshold == kapur_threshold(h).threshold + k


@given(histograms, st.integers(2, 9))
def test_count_scaling_invariance(h, m):
    assert otsu_threshold(h * m).threshold == otsu_threshold(h).threshold
    assert kapur_threshold(h * m).threshold == kapur_threshold(h).threshold


@given(hnp.arrays(np.uint16, (6, 7), elements=st.integers(0, 255)), st.integers(0, 254), st.integers(0, 254))
def test_apply_threshold_monotone(px, t1, t2):
    img = GrayImage(px, 8)
    lo, hi = sorted((t1, t2))
    assert np.all(apply_threshold(img, hi) <= apply_threshold(img, lo))
    assert np.array_equal(apply_threshold(img, lo), px > lo)


@given(hnp.arrays(np.uint16, (5, 5), elements=st.integers(0, 255)), hnp.arrays(bool, (5, 5)))
def test_apply_threshold_respects_roi(px, roi):
    img = GrayImage(px, 8)
    m = apply_threshold(img, 100, roi)
    assert not np.any(m & ~roi)
    assert np.array_equal(m, (px > 100) & roi)


def test_apply_threshold_out_of_range():
    img = GrayImage(np.zeros((2, 2), np.uint16), 8)
    with pytest.raises(ValueError):
        apply_threshold(img, 256)


@given(hnp.arrays(np.uint16, (8, 8), elements=st.integers(0, 65535)))
def test_selectors_on_16_bit_images(px):
    counts = np.bincount(px.ravel(), minlength=65536)
    assume(np.count_nonzero(counts) >= 2)
    lo, hi = int(px.min()), int(px.max())
    for selector in (otsu_threshold, kapur_threshold):
        t = selector(counts).threshold
        assert lo <= t < hi
        m = px > t
        assert m.any() and not m.all()
