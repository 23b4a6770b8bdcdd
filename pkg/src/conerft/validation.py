"""Monte Carlo checks of the expected-EC approximation on simulated fields."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conefit import all_subsets_project_batch, nnls_batch
from .ecdensity import StatisticSpec
from .geometry import ConeSpec, orthant_cone
from .inference import expected_ec
from .lattice import box_lkc_approx, excursion_ec_array, lkc_top_estimate, smooth_gaussian_array


@dataclass(frozen=True)
class ECCheck:
    """Mean excursion EC against the expected EC at each threshold."""

    thresholds: np.ndarray
    mean_ec: np.ndarray
    se: np.ndarray
    expected_ec: np.ndarray
    lkc: np.ndarray
    reps: int

    @property
    def z_scores(self) -> np.ndarray:
        return (self.mean_ec - self.expected_ec) / self.se

    def within(self, n_se: float = 3.0) -> np.ndarray:
        return np.abs(self.z_scores) <= n_se

    def rows(self):
        return [(t, m, s, e) for t, m, s, e in zip(self.thresholds, self.mean_ec, self.se, self.expected_ec)]


def chibar_values(cone: ConeSpec, Z: np.ndarray) -> np.ndarray:
    """Chi-bar of each row of ``Z`` (rows live in the cone's ambient space)."""
    X = cone.design
    if X.shape[1] <= 4:
        return all_subsets_project_batch(X, Z)[0]
    B = nnls_batch(X, Z)
    return np.linalg.norm(B @ X.T, axis=1)


def simulate_ec_curve(kind: str = "gaussian", shape=(128, 128), kernel_sd: float = 4.0,
                      reps: int = 500, thresholds=(2.0, 2.5, 3.0), seed: int = 0,
                      cone: ConeSpec | None = None, chunk: int = 100) -> ECCheck:
    """Compare the mean excursion EC of simulated fields with its expectation.

    ``kind="gaussian"`` uses single smooth Gaussian fields; ``"chibar"``
    builds a chi-bar field from ``n`` independent component fields and a
    cone in R^n (default: quarter circle in R^3). Replication ``i`` uses
    ``default_rng(seed + i)``.

    The top LKC is estimated from normalised component fields, chunk by
    chunk, and the lower LKCs come from a box of extents ``shape - 1``
    scaled to that estimate.
    """
    if kind not in ("gaussian", "chibar"):
        raise ValueError("kind must be 'gaussian' or 'chibar'")
    if kind == "chibar" and cone is None:
        cone = orthant_cone(2, 3)
    n_comp = 1 if kind == "gaussian" else cone.ambient_dim
    shape = tuple(int(s) for s in shape)
    thresholds = np.asarray(thresholds, dtype=float)
    dim = len(shape)

    ecs = np.zeros((reps, thresholds.size))
    lkc_parts, lkc_weights = [], []
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        comps = np.stack([smooth_gaussian_array(shape, kernel_sd, np.random.default_rng(seed + i),
                                                count=n_comp) for i in range(start, stop)])
        # comps: (reps_in_chunk, n_comp, *shape)
        if kind == "gaussian":
            values = comps[:, 0]
        else:
            Z = np.moveaxis(comps, 1, -1).reshape(-1, n_comp)
            values = chibar_values(cone, Z).reshape((stop - start,) + shape)
        for j, t in enumerate(thresholds):
            ecs[start:stop, j] = excursion_ec_array(values, t, dim=dim)
        # all components share the same smoothness: pool them as one residual vector
        E = np.moveaxis(comps.reshape((-1,) + shape), 0, -1)
        lkc_parts.append(lkc_top_estimate(E))
        lkc_weights.append(E.shape[-1])

    top = float(np.average(lkc_parts, weights=lkc_weights))
    region = box_lkc_approx(top, np.asarray(shape, dtype=float) - 1)
    stat = StatisticSpec.gaussian() if kind == "gaussian" else StatisticSpec.chibar(cone)
    expected = np.asarray(expected_ec(region, stat, thresholds))
    se = ecs.std(axis=0, ddof=1) / math.sqrt(reps)
    return ECCheck(thresholds, ecs.mean(axis=0), se, expected, region.lkc, reps)


def matched_kernel_sd(shape, top_lkc: float) -> float:
    """Kernel sd giving a box lattice of ``shape`` the continuum top LKC ``top_lkc``."""
    vol = float(np.prod(np.asarray(shape, dtype=float) - 1))
    lam = (top_lkc / vol) ** (2.0 / len(shape))  # gradient variance 1 / (2 sd^2)
    return 1.0 / math.sqrt(2.0 * lam)


@dataclass(frozen=True)
class FPlusCheck:
    """Monte Carlo P=alpha thresholds of max F_+ and max F on the sqrt(kF) scale."""

    fplus: float
    f: float
    fplus_se: float
    f_se: float
    reps: int
    kernel_sd: float


def _quantile_se(x, q):
    """Bootstrap-free order-statistic standard error of a sample quantile."""
    n = x.size
    s = np.sort(x)
    half = 1.96 * math.sqrt(q * (1 - q) / n)
    lo = s[max(int(math.floor((q - half) * n)), 0)]
    hi = s[min(int(math.ceil((q + half) * n)), n - 1)]
    return (hi - lo) / (2 * 1.96)


def fplus_threshold_mc(cone: ConeSpec, nu: int = 110, top_lkc: float = 8086.0,
                       shape=(48, 48, 48), reps: int = 200, alpha: float = 0.05,
                       seed: int = 0) -> FPlusCheck:
    """Monte Carlo threshold of the one-sided F field ``F * 1{chibar > 0}``.

    Simulates ``k + nu`` smooth fields per replication on a lattice whose
    continuum top LKC matches ``top_lkc`` and records the maxima of F and
    F_+. Expensive: this is a diagnostic, not a density.
    """
    k = cone.span_dim
    G = cone.generators[:, :k]  # arc, orthant and sphere cones live on leading axes
    sd = matched_kernel_sd(shape, top_lkc)
    max_f = np.empty(reps)
    max_fp = np.empty(reps)
    for i in range(reps):
        rng = np.random.default_rng(seed + i)
        top = smooth_gaussian_array(shape, sd, rng, count=k)
        denom = np.zeros(shape)
        for _ in range(nu):
            denom += smooth_gaussian_array(shape, sd, rng) ** 2
        num = np.einsum("k...,k...->...", top, top)
        f = (num / k) / (denom / nu)
        inner = np.tensordot(G, top, axes=(1, 0))  # generator inner products
        positive = inner.max(axis=0) > 0
        max_f[i] = f.max()
        max_fp[i] = np.where(positive, f, 0.0).max()
    q = 1 - alpha
    to_scale = lambda x: math.sqrt(k * x)  # noqa: E731
    fp, ff = np.quantile(max_fp, q), np.quantile(max_f, q)
    return FPlusCheck(to_scale(fp), to_scale(ff),
                      _quantile_se(max_fp, q) * k / (2 * to_scale(fp)),
                      _quantile_se(max_f, q) * k / (2 * to_scale(ff)), reps, sd)
