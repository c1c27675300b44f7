import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pectoral.errors import InvalidSpecError
from pectoral.phantom import (Blob, ErrorClass, PhantomSpec, dice, evaluate, generate_phantom,
                              line_residual, preset_specs, spec_from_text, spec_to_text,
                              wedge_area)
from pectoral.raster import Orientation

FLAT = PhantomSpec(width=200, height=260, edge="straight", edge_angle=60.0, edge_top_width=0.3)


def test_wedge_area_matches_analytic_triangle():
    p = generate_phantom(FLAT)
    a = FLAT.edge_top_width * FLAT.width
    b = a * math.tan(math.radians(60.0))
    assert abs(int(p.truth_pectoral.sum()) - wedge_area(FLAT)) <= a + b + math.hypot(a, b)
    assert wedge_area(FLAT) == pytest.approx(0.5 * a * b)


def test_flat_phantom_levels():
    p = generate_phantom(FLAT)
    px = p.image.pixels
    assert np.all(px[p.truth_pectoral] == FLAT.pectoral_level)
    assert np.all(px[p.truth_breast & ~p.truth_pectoral] == FLAT.breast_level)
    assert np.all(px[~p.truth_breast] == FLAT.background_level)


def test_generation_is_deterministic():
    spec = dataclasses.replace(FLAT, noise_sigma=900.0, seed=11)
    a, b = generate_phantom(spec), generate_phantom(spec)
    assert a.image == b.image
    assert np.array_equal(a.truth_pectoral, b.truth_pectoral)
    c = generate_phantom(dataclasses.replace(spec, seed=12))
    assert c.image != a.image


def test_right_orientation_mirrors():
    left = generate_phantom(FLAT)
    right = generate_phantom(dataclasses.replace(FLAT, orientation=Orientation.RIGHT))
    assert np.array_equal(right.image.pixels, np.fliplr(left.image.pixels))
    assert np.array_equal(right.truth_pectoral, np.fliplr(left.truth_pectoral))


def test_wedge_touches_top_and_chest_wall():
    p = generate_phantom(FLAT)
    assert p.truth_pectoral[0].any() and p.truth_pectoral[:, 0].any()
    assert np.all(p.truth_pectoral <= p.truth_breast)


@pytest.mark.parametrize("bad", [
    dict(edge="curved", edge_c0=0.3, edge_c1=0.0, edge_c2=0.0),    # never reaches the chest wall
    dict(edge="curved", edge_c0=1.2, edge_c1=-2.0, edge_c2=0.0),   # starts beyond the far side
    dict(edge="straight", edge_angle=95.0),
    dict(pectoral_level=100, breast_level=200),
    dict(noise_sigma=-1.0),
    dict(blobs=(Blob(150.0, 200.0, 5.0, 10),)),
])
def test_invalid_specs(bad):
    with pytest.raises(InvalidSpecError):
        generate_phantom(dataclasses.replace(FLAT, **bad))


def test_blob_overlapping_muscle_rejected():
    with pytest.raises(InvalidSpecError):
        generate_phantom(dataclasses.replace(FLAT, blobs=(Blob(10.0, 10.0, 6.0, 30000),)))


def test_curved_presets_are_genuinely_curved():
    for spec in preset_specs("curved", 20, seed=5, width=256, height=320):
        p = generate_phantom(spec)
        assert line_residual(p.truth_pectoral, spec.orientation) > 2.0


def test_presets():
    mixed = preset_specs("mixed", 10, seed=1)
    assert [s.edge for s in mixed] == ["straight"] * 5 + ["curved"] * 5
    assert all((s.width, s.height) == (512, 640) for s in mixed)
    assert all(s.noise_sigma <= 0.05 * 65535 for s in mixed)
    assert all(len(s.blobs) <= 3 for s in mixed)
    assert preset_specs("mixed", 10, seed=1) == mixed
    assert preset_specs("mixed", 10, seed=2) != mixed
    quiet = preset_specs("noisefree-curved", 5, seed=1)
    assert all(s.noise_sigma == 0 and s.pectoral_ramp == 0 and s.breast_falloff == 0 for s in quiet)
    assert all(s.edge == "none" for s in preset_specs("none", 3))
    with pytest.raises(InvalidSpecError):
        preset_specs("bogus", 1)


def test_blobs_stay_inside_breast_and_clear_of_muscle():
    for spec in preset_specs("mixed", 12, seed=3, width=256, height=320):
        p = generate_phantom(spec)
        for b in spec.blobs:
            assert b.intensity >= spec.breast_level
        # generation would have raised on overlap; blob pixels are bright breast
        assert np.all(p.truth_pectoral <= p.truth_breast)


def test_spec_text_round_trip():
    spec = dataclasses.replace(preset_specs("curved", 1, seed=9)[0], orientation=Orientation.RIGHT)
    assert spec_from_text(spec_to_text(spec)) == spec
    assert spec_from_text("# comment only\nwidth = 64\n").width == 64
    with pytest.raises(InvalidSpecError):
        spec_from_text("colour = red\n")
    with pytest.raises(InvalidSpecError):
        spec_from_text("width = wide\n")
    with pytest.raises(InvalidSpecError):
        spec_from_text("width 64\n")


# Evaluation -------------------------------------------------------------------

def _square(shape=(40, 40), box=(0, 0, 20, 20)):
    m = np.zeros(shape, bool)
    y0, x0, y1, x1 = box
    m[y0:y1, x0:x1] = True
    return m


def test_evaluate_examples():
    t = _square()
    e = evaluate(t, t)
    assert e.dice == 1.0 and e.error_class is ErrorClass.CORRECT and e.boundary_mean_distance == 0.0
    assert evaluate(np.zeros_like(t), t).error_class is ErrorClass.NO_PECTORAL_FOUND
    both_empty = evaluate(np.zeros_like(t), np.zeros_like(t))
    assert both_empty.dice == 1.0 and both_empty.error_class is ErrorClass.CORRECT


def test_disjoint_blob_of_ten_percent():
    t = _square()
    pred = t.copy()
    pred[30:34, 30:40] = True  # 40 pixels = 10% of 400
    e = evaluate(pred, t)
    assert e.dice == pytest.approx(2 * 400 / (400 + 440))
    assert e.dice > 0.95
    assert e.error_class is ErrorClass.DENSE_AS_MUSCLE
    assert e.over_fraction == pytest.approx(0.1)


def test_under_and_both():
    t = _square()
    under = t.copy()
    under[14:20, :] = False
    assert evaluate(under, t).error_class is ErrorClass.MUSCLE_AS_BREAST
    both = under.copy()
    both[25:35, 25:35] = True
    assert evaluate(both, t).error_class is ErrorClass.BOTH


def test_evaluate_shape_mismatch():
    with pytest.raises(ValueError):
        evaluate(np.zeros((3, 3), bool), np.zeros((3, 4), bool))


masks = hnp.arrays(bool, (9, 11))


@given(masks, masks)
def test_dice_symmetric_and_bounded(a, b):
    d = dice(a, b)
    assert d == dice(b, a)
    assert 0.0 <= d <= 1.0
    assert evaluate(a, b).dice == evaluate(b, a).dice


@given(masks)
def test_dice_identity_and_empty(a):
    assert dice(a, a) == 1.0
    if a.any():
        assert dice(a, np.zeros_like(a)) == 0.0


@settings(max_examples=30)
@given(masks, masks)
def test_dice_one_only_for_identical(a, b):
    if dice(a, b) == 1.0:
        assert np.array_equal(a, b)
