import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conerft.ecdensity import DimensionError, StatisticSpec, chibar_tail
from conerft.geometry import arc_cone, orthant_cone, sphere_cone
from conerft.inference import (
    BRAIN_BALL, detect, effective_dof, expected_ec, p_value, table1, table1_statistics, threshold,
)
from conerft.lattice import LatticeField, SearchRegion, simulate_smooth_gaussian

ARC = arc_cone(1.06)
POINT = SearchRegion(np.array([1.0, 0.0, 0.0, 0.0]))

BUILTIN = [
    StatisticSpec.gaussian(), StatisticSpec.chi(3), StatisticSpec.t(110), StatisticSpec.f(2, 110),
    StatisticSpec.f(2, 110, sqrt_scale=True), StatisticSpec.chibar(ARC), StatisticSpec.chibar(orthant_cone(3)),
    StatisticSpec.tin(ARC, 110), StatisticSpec.tlr(ARC, 112),
]


@pytest.mark.parametrize("stat", BUILTIN, ids=lambda s: s.label())
def test_point_region_is_marginal_tail(stat):
    t = np.array([0.5, 2.0, 4.0])
    np.testing.assert_allclose(expected_ec(POINT, stat, t), stat.tail(t), rtol=1e-14)


def test_point_region_chibar_tail():
    assert expected_ec(POINT, StatisticSpec.chibar(ARC), 2.0) == pytest.approx(chibar_tail(2.0, ARC), rel=1e-14)


def test_brain_ball_t_near_alpha():
    assert expected_ec(BRAIN_BALL, StatisticSpec.t(110), 5.15) == pytest.approx(0.05, abs=0.01)


def test_expected_ec_unclamped_and_p_value_clamped():
    stat = StatisticSpec.gaussian()
    raw = expected_ec(BRAIN_BALL, stat, 1.0)
    assert raw > 1
    assert p_value(BRAIN_BALL, stat, 1.0) == 1.0
    assert expected_ec(BRAIN_BALL, stat, 0.3) < 0  # dips negative at low thresholds


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1e4), min_size=4, max_size=4), st.lists(st.floats(0, 1e4), min_size=4, max_size=4),
       st.floats(-2, 2), st.floats(1.0, 6.0))
def test_expected_ec_linear_in_lkc(a, b, c, t):
    stat = StatisticSpec.tin(ARC, 30)
    La, Lb = np.array(a), np.array(b)
    lhs = expected_ec(SearchRegion(La + c * Lb), stat, t)
    rhs = expected_ec(SearchRegion(La), stat, t) + c * expected_ec(SearchRegion(Lb), stat, t)
    scale = (np.abs(La).sum() + abs(c) * np.abs(Lb).sum() + 1)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12 * scale)


def test_expected_ec_continuous_in_t():
    t = np.linspace(1, 6, 2001)
    v = expected_ec(BRAIN_BALL, StatisticSpec.tin(ARC, 110), t)
    assert np.max(np.abs(np.diff(v))) < 0.05 * np.max(np.abs(v))


def test_dimension_violation():
    stat = StatisticSpec.tin(ARC, 2)  # bound 3
    with pytest.raises(DimensionError):
        expected_ec(BRAIN_BALL, stat, 3.0)
    res = threshold(BRAIN_BALL, stat, 0.05)
    assert res.validity == "dimension_violation" and not res.valid and math.isnan(res.threshold)
    with pytest.raises(DimensionError):
        threshold(BRAIN_BALL, stat, 0.05, strict=True)
    # a lower-dimensional region is valid for the same statistic
    assert threshold(SearchRegion(np.array([1.0, 5.0])), stat, 0.05).valid


def test_threshold_solution_accuracy():
    # either the residual is below 1e-9 alpha or alpha is bracketed within 1e-8
    for stat in BUILTIN:
        res = threshold(BRAIN_BALL, stat, 0.05)
        assert res.valid
        lo = expected_ec(BRAIN_BALL, stat, res.threshold - 5e-9)
        hi = expected_ec(BRAIN_BALL, stat, res.threshold + 5e-9)
        assert abs(res.expected_ec - 0.05) < 1e-9 * 0.05 or lo >= 0.05 >= hi


def test_threshold_is_last_crossing():
    stat = StatisticSpec.gaussian()
    res = threshold(BRAIN_BALL, stat, 0.05)
    t = np.linspace(res.threshold + 1e-6, 50, 5000)
    assert np.all(expected_ec(BRAIN_BALL, stat, t) < 0.05)


@pytest.mark.parametrize("stat", BUILTIN, ids=lambda s: s.label())
def test_threshold_monotone_in_alpha(stat):
    alphas = np.geomspace(0.001, 0.1, 12)
    ts = [threshold(BRAIN_BALL, stat, a).threshold for a in alphas]
    assert np.all(np.diff(ts) < 0)


def test_threshold_alpha_validation():
    for a in (0.0, 0.5, -0.1):
        with pytest.raises(ValueError):
            threshold(BRAIN_BALL, StatisticSpec.gaussian(), a)


def test_threshold_no_crossing():
    # heavy T(3) tails over a huge region stay above alpha up to t = 50
    huge = SearchRegion(np.array([1.0, 0.0, 0.0, 1e12]))
    with pytest.raises(ValueError):
        threshold(huge, StatisticSpec.t(3), 0.05)


def test_table_ordering():
    stats = table1_statistics()
    t = {k: threshold(BRAIN_BALL, s, 0.05).threshold for k, s in stats.items()}
    assert t["a"] < t["b"] < t["d"]
    assert t["a'"] < t["a"]


def test_table_rows_and_effective_dof():
    rows = {r.row: r for r in table1()}
    assert set(rows) == {"a", "a'", "b", "b'", "c", "d"}
    assert rows["c"].passed is None and rows["b'"].passed is None
    nu = effective_dof(rows["a"].threshold)
    assert nu == pytest.approx(110, abs=1e-3)


def test_sphere_cone_tin_threshold_is_f():
    # T_IN on a full 2D sphere cone is the sqrt(2F) statistic
    a = threshold(BRAIN_BALL, StatisticSpec.tin(sphere_cone(2), 110), 0.05).threshold
    b = threshold(BRAIN_BALL, StatisticSpec.f(2, 110, sqrt_scale=True), 0.05).threshold
    assert a == pytest.approx(b, abs=1e-9)


# ---- detection

def test_detect_empty():
    f = LatticeField(np.zeros((6, 6, 6)))
    det = detect(f, 1.0)
    assert det.count == 0 and det.volume == 0 and det.clusters == ()


def test_detect_single_blob():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((12, 12, 12))
    blob = [(5, 5, 5), (5, 5, 6), (5, 6, 5), (6, 5, 5), (5, 5, 4), (5, 4, 5), (4, 5, 5),
            (6, 6, 5), (6, 5, 6), (5, 6, 6)]
    for idx in blob:
        v[idx] += 10.0
    det = detect(LatticeField(v), 5.0, voxel_volume=2.0)
    assert len(det.clusters) == 1
    assert det.clusters[0].size == 10 and det.clusters[0].volume == 20.0
    assert det.clusters[0].peak_index in blob


def test_detect_face_connectivity_and_special_values():
    v = np.zeros((4, 4))
    v[0, 0] = v[1, 1] = np.inf  # diagonal neighbours: two clusters
    v[3, 3] = np.nan
    det = detect(LatticeField(v), 1.0)
    assert len(det.clusters) == 2 and det.count == 2


def test_detect_on_smooth_field_counts():
    f = simulate_smooth_gaussian((40, 40), 2, seed=3)
    det = detect(f, 1.0)
    assert det.count == int(np.sum(f.values >= 1.0))
    assert sum(c.size for c in det.clusters) == det.count
