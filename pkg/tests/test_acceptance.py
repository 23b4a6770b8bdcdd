"""Acceptance criteria, each at its stated tolerance.

Every test carries a ``criterion`` marker; the terminal summary prints one
pass/fail line per criterion, with the measured values underneath.
"""

import math
import time

import numpy as np
import pytest

from conerft.conefit import (
    DesignMatrix, Statistic, all_subsets_project, all_subsets_project_batch, kkt_tolerance, nnls,
    statistics_batch,
)
from conerft.ecdensity import (
    StatisticSpec, chi_ec_density, chibar_ec_density, f_ec_density, gaussian_ec_density, t_ec_density,
    tin_ec_density, tlr_ec_density,
)
from conerft.geometry import (
    Ball, arc_cone, detr, half_line, orthant_cone, polyhedral_cone, sphere_cone, sphere_intrinsic_volumes,
    tube_volume, unit_ball_volume, weights_monte_carlo,
)
from conerft.inference import BRAIN_BALL, TABLE1_REFERENCE, table1_statistics, threshold
from conerft.validation import fplus_threshold_mc, simulate_ec_curve

import oracles

ARC = arc_cone(1.06)
QUARTER = arc_cone(math.pi / 2)
BUILTIN_CONES = {
    "quarter": QUARTER, "arc1.06": ARC, "arc2.5": arc_cone(2.5), "half-line": half_line(),
    **{f"orthant{k}": orthant_cone(k) for k in (1, 2, 3, 4)},
    **{f"sphere{k}": sphere_cone(k) for k in (1, 2, 3)},
}


def _note(record_property, text):
    record_property("note", text)


# ---- 1. brain-ball threshold table

@pytest.mark.criterion(1, "threshold table rows a, b, d within 0.02, each under 1 s")
@pytest.mark.parametrize("row", ["a", "a'", "b", "d"])
def test_table_threshold(row, record_property):
    stat = table1_statistics(110, 1.06)[row]
    start = time.perf_counter()
    t = threshold(BRAIN_BALL, stat, 0.05).threshold
    elapsed = time.perf_counter() - start
    ref = TABLE1_REFERENCE[row]
    _note(record_property, f"row {row} {stat.label()}: {t:.4f} vs {ref} ({elapsed:.3f} s)")
    assert elapsed < 1.0
    assert abs(t - ref) <= 0.02


@pytest.mark.criterion(1, "threshold table rows a, b, d within 0.02, each under 1 s")
def test_table_fplus_diagnostic(record_property):
    # reported only: one-sided F by simulation under the masked definition
    check = fplus_threshold_mc(ARC, nu=110, reps=20, seed=0)
    _note(record_property, f"row c F_+ (Monte Carlo, 20 reps): {check.fplus:.3f} +- {check.fplus_se:.3f} "
                           f"vs {TABLE1_REFERENCE['c']} (informational)")
    assert np.isfinite(check.fplus)


# ---- 2. cone statistics nearly equal

@pytest.mark.criterion(2, "|t*(T_LR, n=112) - t*(T_IN, nu=110)| < 0.02")
def test_cone_statistics_near_equal(record_property):
    tlr = threshold(BRAIN_BALL, StatisticSpec.tlr(ARC, 112), 0.05).threshold
    tin = threshold(BRAIN_BALL, StatisticSpec.tin(ARC, 110), 0.05).threshold
    _note(record_property, f"T_LR {tlr:.4f}, T_IN {tin:.4f}, gap {abs(tlr - tin):.4f}")
    assert abs(tlr - tin) < 0.02


# ---- 3. mixture weights

def _random_cones(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 7))
        out.append(rng.standard_normal((m, n)))
    return out


def _z(diff, se):
    # zero SE demands exact agreement
    return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))


def _subset_weights(G, samples, seed):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((samples, G.shape[1]))
    _, dims = all_subsets_project_batch(G.T, Z)
    k = np.linalg.matrix_rank(G)
    w = np.bincount(dims, minlength=k + 1)[: k + 1] / samples
    return w, np.sqrt(w * (1 - w) / samples)


@pytest.mark.criterion(3, "mixture weights: quarter circle exact, Monte Carlo within 3 SE, under 30 s")
def test_quarter_circle_exact():
    np.testing.assert_array_equal(QUARTER.weights, [0.25, 0.5, 0.25])


@pytest.mark.criterion(3, "mixture weights: quarter circle exact, Monte Carlo within 3 SE, under 30 s")
def test_monte_carlo_weights(record_property):
    # the runtime bound covers the weight estimates, not the enumeration oracle
    spent = 0.0

    def estimate(G, seed):
        nonlocal spent
        start = time.perf_counter()
        out = weights_monte_carlo(G, 100_000, seed)
        spent += time.perf_counter() - start
        return out

    worst = 0.0
    named = [QUARTER, ARC] + [orthant_cone(k) for k in (1, 2, 3, 4)]
    for i, cone in enumerate(named):
        w, se = estimate(cone.generators, i)
        k = cone.span_dim
        worst = max(worst, float(_z(np.abs(w[: k + 1] - cone.weights[: k + 1]), se[: k + 1]).max()))
    start = time.perf_counter()
    for i, G in enumerate(_random_cones(20, seed=3)):
        w, se = estimate(G, 100 + i)
        ref, ref_se = _subset_weights(G, 100_000, seed=200 + i)
        worst = max(worst, float(_z(np.abs(w - ref), np.sqrt(se**2 + ref_se**2)).max()))
        pointed = polyhedral_cone(G, mc_samples=10_000)
        if pointed.exact:
            worst = max(worst, float(_z(np.abs(w - pointed.weights[: len(w)]), se).max()))
    oracle = time.perf_counter() - start - spent
    _note(record_property, f"largest |z| {worst:.2f} over all weights "
                           f"(estimates {spent:.1f} s, oracle {max(oracle, 0.0):.1f} s)")
    assert worst <= 3.0
    assert spent < 30.0


# ---- 4. two-form identities

@pytest.mark.criterion(4, "mixture and intrinsic-volume forms agree to 1e-10 relative")
@pytest.mark.parametrize("name", sorted(BUILTIN_CONES))
def test_two_forms(name):
    cone = BUILTIN_CONES[name]
    t = np.arange(0.5, 6.01, 0.5)
    for d in range(4):
        np.testing.assert_allclose(chibar_ec_density(d, t, cone, form="volumes"),
                                   chibar_ec_density(d, t, cone, form="mixture"), rtol=1e-10, atol=0)
        nu = 20
        np.testing.assert_allclose(tin_ec_density(d, t, cone, nu, form="volumes"),
                                   tin_ec_density(d, t, cone, nu, form="mixture"), rtol=1e-10, atol=0)


# ---- 5. derivative chain

CHAIN_KINDS = {
    "gaussian": lambda d, t: gaussian_ec_density(d, t),
    "chi": lambda d, t: chi_ec_density(d, t, 3),
    "t": lambda d, t: t_ec_density(d, t, 20),
    "f": lambda d, t: f_ec_density(d, t, 2, 20),
    "chibar": lambda d, t: chibar_ec_density(d, t, ARC),
    "tin": lambda d, t: tin_ec_density(d, t, ARC, 20),
    "tlr": lambda d, t: tlr_ec_density(d, t, ARC, 22),
}


@pytest.mark.criterion(5, "derivative chain rho_{d+1} = -(2 pi)^{-1/2} rho_d' (step 1e-4, 1e-5 relative)")
@pytest.mark.parametrize("kind", list(CHAIN_KINDS))
def test_derivative_chain(kind, record_property):
    rho = CHAIN_KINDS[kind]
    t = np.linspace(1.0, 6.0, 51)
    worst = 0.0
    for d in range(3):
        lhs = rho(d + 1, t)
        rhs = oracles.derivative_chain(lambda s: rho(d, s), t, h=1e-4)
        # near a zero crossing a relative error is meaningless; floor the scale
        scale = np.maximum(np.abs(lhs), 1e-3 * np.max(np.abs(lhs)))
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    _note(record_property, f"{kind}: largest relative error {worst:.2e}")
    assert worst <= 1e-5


# ---- 6. NNLS against enumeration

@pytest.mark.criterion(6, "NNLS matches all-subsets enumeration to 1e-8 on 1000 instances, KKT satisfied")
def test_nnls_oracle(record_property):
    rng = np.random.default_rng(2024)
    worst, kkt_bad = 0.0, 0
    for _ in range(1000):
        n, m = int(rng.integers(1, 11)), int(rng.integers(1, 7))
        X = rng.standard_normal((n, m))
        z = rng.standard_normal(n)
        a, b = all_subsets_project(X, z), nnls(X, z)
        worst = max(worst, abs(a.chibar - b.chibar) / max(a.chibar, 1e-300) if a.chibar > 0 else abs(b.chibar))
        kkt_bad += oracles.kkt_violation(X, z, b.beta) > kkt_tolerance(X, z)
    _note(record_property, f"largest relative chi-bar gap {worst:.1e}, KKT failures {kkt_bad}")
    assert worst <= 1e-8
    assert kkt_bad == 0


# ---- 7. expected EC on simulated fields

@pytest.mark.criterion(7, "simulated mean EC within 3 SE of the expected EC, under 5 min")
@pytest.mark.parametrize("kind", ["gaussian", "chibar"])
def test_expected_ec_monte_carlo(kind, record_property):
    start = time.perf_counter()
    cone = orthant_cone(2, 3) if kind == "chibar" else None  # quarter circle among 3 components
    res = simulate_ec_curve(kind, (128, 128), 4.0, 500, (2.0, 2.5, 3.0), seed=0, cone=cone)
    elapsed = time.perf_counter() - start
    zs = ", ".join(f"{z:+.2f}" for z in res.z_scores)
    _note(record_property, f"{kind}: z = {zs} ({elapsed:.1f} s)")
    assert np.all(res.within(3.0))
    assert elapsed < 300


# ---- 8. marginal laws

@pytest.mark.criterion(8, "empirical tails of chi-bar, T_IN, T_LR within 3 binomial SE")
def test_marginal_laws(record_property):
    k, nu = 2, 10
    n = k + nu
    X = np.zeros((n, k))
    X[:k] = ARC.design
    design = DesignMatrix(X, (0, 1))
    draws = 100_000
    Z = np.random.default_rng(8).standard_normal((draws, n))
    s = statistics_batch(design, Z, ["chibar", "tin", "tlr"])
    specs = {Statistic.CHIBAR: StatisticSpec.chibar(ARC), Statistic.TIN: StatisticSpec.tin(ARC, nu),
             Statistic.TLR: StatisticSpec.tlr(ARC, n)}
    worst = 0.0
    for kind, spec in specs.items():
        for t in (1.0, 2.0, 3.0):
            p = float(spec.tail(t))
            se = math.sqrt(p * (1 - p) / draws)
            worst = max(worst, abs(np.mean(s[kind] >= t) - p) / se)
    _note(record_property, f"largest |z| {worst:.2f}")
    assert worst <= 3.0


# ---- 9. geometry

def _sphere_closed(m, j):
    # L_j(S^m) = 2 C(m, j) s_{m+1} / s_{m+1-j} when m - j is even
    s = lambda i: 2 * math.pi ** (i / 2) / math.gamma(i / 2)  # noqa: E731
    return 2 * math.comb(m, j) * s(m + 1) / s(m + 1 - j) if (m - j) % 2 == 0 else 0.0


@pytest.mark.criterion(9, "geometry: sphere intrinsic volumes, ball tubes, detr")
@pytest.mark.parametrize("k", range(1, 7))
def test_sphere_intrinsic_volumes(k):
    ref = [_sphere_closed(k - 1, j) for j in range(k)]
    np.testing.assert_allclose(sphere_intrinsic_volumes(k), ref, rtol=1e-13, atol=1e-13)


@pytest.mark.criterion(9, "geometry: sphere intrinsic volumes, ball tubes, detr")
def test_ball_tube_exact():
    for D in range(1, 6):
        for R, r in [(1.0, 0.5), (12.5, 3.0), (0.2, 2.0)]:
            assert tube_volume(Ball(D, R), r) == pytest.approx(unit_ball_volume(D) * (R + r) ** D, rel=1e-12)


@pytest.mark.criterion(9, "geometry: sphere intrinsic volumes, ball tubes, detr")
def test_detr_minors():
    rng = np.random.default_rng(9)
    for _ in range(50):
        d = int(rng.integers(1, 6))
        M = rng.standard_normal((d, d))
        A = M + M.T
        for j in range(d + 1):
            assert detr(A, j) == pytest.approx(oracles.detr_bruteforce(A, j), rel=1e-10, abs=1e-10)
