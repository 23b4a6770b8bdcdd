"""Expected-EC P-values, threshold solving and activation reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, optimize

from .ecdensity import DimensionError, StatisticSpec
from .geometry import arc_cone
from .lattice import LatticeField, SearchRegion

# Ball surrogate of a 3D brain search region: top LKC 8086 and radius 12.5
BRAIN_BALL_RADIUS = 12.5
BRAIN_BALL_LKC3 = 8086.0
BRAIN_BALL = SearchRegion(
    np.array([1.0, 4 * np.pi * BRAIN_BALL_RADIUS, 2 * np.pi * BRAIN_BALL_RADIUS**2, BRAIN_BALL_LKC3]),
    provenance="brain ball r=12.5",
)

T_MAX = 50.0
SCAN_STEP = 0.1


def check_dimension(region: SearchRegion, stat: StatisticSpec):
    if region.dim >= stat.validity_bound:
        raise DimensionError(
            f"{stat.label()} densities need D < {stat.validity_bound}, region has D = {region.dim}")


def expected_ec(region: SearchRegion, stat: StatisticSpec, t):
    """``sum_d L_d rho_d(t)``, the expected EC of the excursion set above ``t``.

    Raises :class:`DimensionError` when the region dimension is outside the
    statistic's validity range. The value is not clamped.
    """
    check_dimension(region, stat)
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for d, L in enumerate(region.lkc):
        if L != 0.0:
            total = total + L * np.asarray(stat.ec_density(d, t))
    return float(total) if total.ndim == 0 else total


def p_value(region: SearchRegion, stat: StatisticSpec, t):
    """Expected EC clamped to ``[0, 1]`` for reporting."""
    return np.clip(expected_ec(region, stat, t), 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class ThresholdResult:
    statistic: StatisticSpec
    alpha: float
    threshold: float
    expected_ec: float
    validity: str  # "valid" or "dimension_violation"

    @property
    def valid(self) -> bool:
        return self.validity == "valid"


def threshold(region: SearchRegion, stat: StatisticSpec, alpha: float = 0.05,
              strict: bool = False) -> ThresholdResult:
    """Smallest upper-tail ``t`` where the expected EC falls to ``alpha``.

    The expected EC can dip and oscillate at low thresholds, so a grid scan
    with step 0.1 up to 50 first locates the last crossing, which is then
    refined by Brent's method. A dimension violation returns a result
    flagged ``"dimension_violation"`` (or raises when ``strict``).
    """
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    try:
        check_dimension(region, stat)
    except DimensionError:
        if strict:
            raise
        return ThresholdResult(stat, alpha, math.nan, math.nan, "dimension_violation")

    grid = np.arange(0.0, T_MAX + SCAN_STEP / 2, SCAN_STEP)
    values = expected_ec(region, stat, grid)
    above = np.nonzero(values >= alpha)[0]
    if above.size == 0 or above[-1] == grid.size - 1:
        raise ValueError(f"no crossing of alpha={alpha} in [0, {T_MAX}] for {stat.label()}")
    i = above[-1]
    f = lambda t: expected_ec(region, stat, t) - alpha  # noqa: E731
    t_star = optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps)
    return ThresholdResult(stat, alpha, float(t_star), float(expected_ec(region, stat, t_star)), "valid")


# --------------------------------------------------------------------------
# detection


@dataclass(frozen=True)
class Cluster:
    size: int
    volume: float
    peak: float
    peak_index: tuple


@dataclass(frozen=True)
class Detection:
    threshold: float
    count: int
    volume: float
    clusters: tuple


def detect(field: LatticeField, t: float, voxel_volume: float = 1.0) -> Detection:
    """Face-connected clusters of ``{field >= t}``, largest first.

    ``+inf`` voxels count as detected; nan and masked voxels never do.
    """
    inside = (field.values >= t) & field.support()
    labels, n = ndimage.label(inside)
    clusters = []
    for idx in range(1, n + 1):
        where = labels == idx
        size = int(where.sum())
        vals = np.where(where, field.values, -np.inf)
        peak_index = np.unravel_index(int(np.argmax(vals)), vals.shape)
        clusters.append(Cluster(size, size * voxel_volume, float(vals[peak_index]),
                                tuple(int(i) for i in peak_index)))
    clusters.sort(key=lambda c: (-c.size, c.peak_index))
    count = int(inside.sum())
    return Detection(float(t), count, count * voxel_volume, tuple(clusters))


# --------------------------------------------------------------------------
# brain-region threshold table


@dataclass(frozen=True)
class TableRow:
    row: str
    label: str
    threshold: float | None
    reference: float | None
    tolerance: float | None

    @property
    def passed(self) -> bool | None:
        if self.reference is None or self.tolerance is None or self.threshold is None:
            return None
        return abs(self.threshold - self.reference) <= self.tolerance


def table1_statistics(nu: int = 110, alpha_cone: float = 1.06):
    """Statistics of the four-row comparison: T, cone T_IN / T_LR and sqrt(2F)."""
    cone = arc_cone(alpha_cone, n=2)
    return {
        "a": StatisticSpec.t(nu),
        "a'": StatisticSpec.t(nu + 1),
        "b": StatisticSpec.tin(cone, nu),
        "b'": StatisticSpec.tlr(cone, nu + 2),
        "d": StatisticSpec.f(2, nu, sqrt_scale=True),
    }


TABLE1_REFERENCE = {"a": 5.15, "a'": 5.15, "b": 5.44, "c": 5.63, "d": 5.80}


def table1(region: SearchRegion = BRAIN_BALL, alpha: float = 0.05, nu: int = 110,
           alpha_cone: float = 1.06, tolerance: float = 0.02, fplus: float | None = None):
    """Thresholds for the brain-ball comparison table.

    Rows ``a``/``a'`` are T with ``nu`` and ``nu + 1`` df, ``b`` is T_IN on
    the arc cone, ``b'`` is T_LR with ``n = nu + 2`` (informational),
    ``c`` is the one-sided F (only by Monte Carlo, passed in as ``fplus``),
    and ``d`` is F(2, nu) on the sqrt(2F) scale.
    """
    stats = table1_statistics(nu, alpha_cone)
    rows = []
    for key in ("a", "a'", "b", "b'", "c", "d"):
        if key == "c":
            rows.append(TableRow("c", "F_+ (Monte Carlo)", fplus, TABLE1_REFERENCE["c"], None))
            continue
        stat = stats[key]
        t = threshold(region, stat, alpha, strict=True).threshold
        ref = TABLE1_REFERENCE.get(key)
        rows.append(TableRow(key, stat.label(), t, ref, tolerance if ref is not None else None))
    return rows


def effective_dof(target: float, region: SearchRegion = BRAIN_BALL, alpha: float = 0.05,
                  make=StatisticSpec.t, bracket=(20.0, 2000.0)) -> float:
    """Real-valued df at which the threshold of ``make(nu)`` equals ``target``.

    The densities accept non-integer df, so the root is found on a
    continuous scale.
    """
    f = lambda nu: threshold(region, make(nu), alpha).threshold - target  # noqa: E731
    return float(optimize.brentq(f, *bracket, xtol=1e-6))
