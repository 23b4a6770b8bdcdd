"""Intrinsic volumes, tube formulae and convex cone descriptions.

Cones are described by their *generator set* ``U`` on the unit sphere;
the quantities that matter downstream are the intrinsic volumes
``L_0(U), ..., L_{k-1}(U)`` and the chi-bar mixture weights
``p_0(U), ..., p_k(U)``. The two are linked by

    L_i(U) = sum_j p_j(U) L_i(S^{j-1}),

which is inverted in closed form by :func:`weights_from_intrinsic_volumes`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, spatial


def unit_ball_volume(d: int) -> float:
    """Lebesgue measure ``omega_d`` of the unit ball in R^d."""
    return math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0))


def sphere_area(d: int) -> float:
    """Surface measure ``a_d`` of the unit (d-1)-sphere in R^d."""
    return 2.0 * math.exp(0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d))


def sphere_intrinsic_volumes(k: int) -> np.ndarray:
    """Intrinsic volumes ``L_0..L_{k-1}`` of the unit sphere S^{k-1}.

    ``L_d = 2 C(k-1, d) a_k / a_{k-d}`` when ``k-1-d`` is even, else 0.

    >>> sphere_intrinsic_volumes(3)
    array([ 2.        ,  0.        , 12.56637061])
    """
    if k < 1:
        raise ValueError(f"sphere dimension k must be >= 1, got {k}")
    out = np.zeros(k)
    for d in range(k):
        if (k - 1 - d) % 2 == 0:
            out[d] = 2.0 * math.comb(k - 1, d) * sphere_area(k) / sphere_area(k - d)
    return out


def elementary_symmetric(values) -> np.ndarray:
    """Elementary symmetric polynomials ``e_0..e_n`` of ``values``."""
    e = np.zeros(len(values) + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e


# --------------------------------------------------------------------------
# shapes and tubes


@dataclass(frozen=True)
class Ball:
    dim: int
    radius: float

    def __post_init__(self):
        if self.dim < 1 or not self.radius > 0:
            raise ValueError("Ball needs dim >= 1 and radius > 0")


@dataclass(frozen=True)
class Box:
    sides: tuple

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        if not self.sides or min(self.sides) <= 0:
            raise ValueError("Box side lengths must be positive")

    @property
    def dim(self) -> int:
        return len(self.sides)


@dataclass(frozen=True)
class SphereSurface:
    """Unit sphere S^{k-1} embedded in R^k."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("SphereSurface needs k >= 1")

    @property
    def dim(self) -> int:
        return self.k


def intrinsic_volumes(shape) -> np.ndarray:
    """Intrinsic volumes ``L_0..L_D`` of a ball, box or sphere surface.

    For the sphere surface the top entry ``L_k`` is zero (the set has
    no k-dimensional volume).
    """
    if isinstance(shape, Ball):
        D, R = shape.dim, shape.radius
        return np.array([
            math.comb(D, d) * unit_ball_volume(D) / unit_ball_volume(D - d) * R**d
            for d in range(D + 1)
        ])
    if isinstance(shape, Box):
        return elementary_symmetric(shape.sides)
    if isinstance(shape, SphereSurface):
        return np.append(sphere_intrinsic_volumes(shape.k), 0.0)
    raise TypeError(f"unsupported shape {shape!r}")


def tube_volume(shape, r: float) -> float:
    """Volume of the radius-``r`` tube around ``shape`` (Steiner-Weyl).

    Exact for convex shapes at any ``r >= 0``; for a sphere surface it is
    exact while ``r < 1``.
    """
    if r < 0:
        raise ValueError("tube radius must be nonnegative")
    if isinstance(shape, SphereSurface) and r >= 1:
        raise ValueError("tube about the unit sphere self-intersects for r >= 1")
    L = intrinsic_volumes(shape)
    D = shape.dim
    return float(sum(unit_ball_volume(D - d) * r ** (D - d) * L[d] for d in range(D + 1)))


def detr(A, j: int) -> float:
    """Sum of the determinants of all ``j x j`` principal minors of ``A``.

    ``A`` must be symmetric; the value is the j-th elementary symmetric
    polynomial of its eigenvalues.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d):
        raise ValueError("detr needs a square matrix")
    if not 0 <= j <= d:
        raise ValueError(f"j must lie in [0, {d}]")
    return float(elementary_symmetric(np.linalg.eigvalsh(A))[j])


# --------------------------------------------------------------------------
# cones


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """A convex cone ``Cone(U)`` with its chi-bar geometry.

    Attributes
    ----------
    provenance : str
        One of ``"arc"``, ``"orthant"``, ``"sphere"``, ``"polyhedral"``.
    params : dict
        Parameters of the provenance (``alpha``, ``k``, ...).
    span_dim : int
        Dimension ``k`` of the linear span of the cone.
    linear_dim : int
        Dimension ``l(U)`` of the largest linear subspace in the cone.
    intrinsic_volumes : ndarray, shape (k,)
        ``L_0(U)..L_{k-1}(U)``.
    weights : ndarray, shape (k+1,)
        Mixture weights ``p_0(U)..p_k(U)``.
    generators : ndarray, shape (m, n), optional
        One generator per row.
    weights_se : ndarray, optional
        Standard errors when the weights were estimated by simulation.
    """

    provenance: str
    params: dict
    span_dim: int
    linear_dim: int
    intrinsic_volumes: np.ndarray
    weights: np.ndarray
    generators: np.ndarray | None = None
    weights_se: np.ndarray | None = None
    convex: bool = True

    def __post_init__(self):
        p = np.asarray(self.weights, dtype=float)
        if p.shape != (self.span_dim + 1,):
            raise ValueError("weights must have length span_dim + 1")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-12 * max(1, self.span_dim):
            raise ValueError(f"weights must be a probability vector, got {p}")
        if len(self.intrinsic_volumes) != self.span_dim:
            raise ValueError("intrinsic_volumes must have length span_dim")

    @property
    def ambient_dim(self) -> int:
        if self.generators is None:
            return self.span_dim
        return self.generators.shape[1]

    @property
    def design(self) -> np.ndarray:
        """Generators as design-matrix columns, shape (n, m)."""
        if self.generators is None:
            raise ValueError(f"{self.provenance} cone has no generator set")
        return self.generators.T

    @property
    def exact(self) -> bool:
        return self.weights_se is None

    def label(self) -> str:
        if self.provenance == "arc":
            return f"arc:{self.params['alpha']:g}"
        if self.provenance in ("orthant", "sphere"):
            return f"{self.provenance}:{self.params['k']}"
        return f"polyhedral(m={self.generators.shape[0]}, k={self.span_dim})"


def _orthant_weights(k: int) -> np.ndarray:
    return np.array([math.comb(k, j) for j in range(k + 1)], dtype=float) / 2.0**k


def intrinsic_volumes_from_weights(p) -> np.ndarray:
    """Map weights ``p_0..p_k`` to intrinsic volumes ``L_0..L_{k-1}``."""
    p = np.asarray(p, dtype=float)
    k = len(p) - 1
    L = np.zeros(k)
    for j in range(1, k + 1):
        if p[j] != 0.0:
            L[:j] += p[j] * sphere_intrinsic_volumes(j)
    return L


def weights_from_intrinsic_volumes(L, n: int | None = None) -> np.ndarray:
    """Invert intrinsic volumes ``L_0..L_{k-1}`` to weights ``p_0..p_k``.

    Uses

        p_j = sum_m (-1)^m (j-1+2m)! L_{j-1+2m} / ((4 pi)^m m!)
              / (2^j pi^{(j-1)/2} Gamma((j+1)/2)),

    for ``j >= 1`` and fixes ``p_0`` by complementation. Passing ``n``
    pads the result with zero weights up to ``p_n``.

    Raises
    ------
    ValueError
        If any resulting weight is negative, i.e. ``L`` is not the
        intrinsic-volume sequence of a convex cone generator.
    """
    L = np.asarray(L, dtype=float)
    k = len(L)
    size = k if n is None else max(n, k)
    p = np.zeros(size + 1)
    for j in range(1, k + 1):
        total = 0.0
        for m in range((k - j) // 2 + 1):
            i = j - 1 + 2 * m
            log_c = math.lgamma(i + 1) - m * math.log(4 * math.pi) - math.lgamma(m + 1)
            total += (-1) ** m * math.exp(log_c) * L[i]
        log_pre = j * math.log(2) + 0.5 * (j - 1) * math.log(math.pi) + math.lgamma(0.5 * (j + 1))
        p[j] = total * math.exp(-log_pre)
    p[0] = 1.0 - p[1:].sum()
    tol = 1e-10 * max(1.0, float(np.abs(p).max()))
    if np.any(p < -tol):
        raise ValueError(f"intrinsic volumes {L} give negative weights {p}")
    p[p < 0] = 0.0
    return p


def arc_cone(alpha: float, n: int = 2, axes: tuple = (0, 1)) -> ConeSpec:
    """Two-generator cone whose generators meet at angle ``alpha``.

    The generators are ``e_a`` and ``cos(alpha) e_a + sin(alpha) e_b`` for
    ``axes = (a, b)`` in R^n.
    """
    if not 0 < alpha < math.pi:
        raise ValueError(f"arc angle must lie in (0, pi), got {alpha}")
    a, b = axes
    if n < 2 or a == b or not (0 <= a < n and 0 <= b < n):
        raise ValueError("arc cone needs two distinct axes inside R^n")
    G = np.zeros((2, n))
    G[0, a] = 1.0
    G[1, a] = math.cos(alpha)
    G[1, b] = math.sin(alpha)
    p = np.array([(math.pi - alpha) / (2 * math.pi), 0.5, alpha / (2 * math.pi)])
    return ConeSpec("arc", {"alpha": float(alpha), "n": n, "axes": [a, b]}, 2, 0,
                    np.array([1.0, float(alpha)]), p, G)


def orthant_cone(k: int, n: int | None = None) -> ConeSpec:
    """Positive orthant of the first ``k`` coordinates of R^n."""
    n = k if n is None else n
    if k < 1 or n < k:
        raise ValueError("orthant needs 1 <= k <= n")
    p = _orthant_weights(k)
    G = np.eye(k, n)
    return ConeSpec("orthant", {"k": k, "n": n}, k, 0,
                    intrinsic_volumes_from_weights(p), p, G)


def half_line(n: int = 1) -> ConeSpec:
    return orthant_cone(1, n)


def sphere_cone(k: int, n: int | None = None) -> ConeSpec:
    """The whole k-dimensional coordinate subspace (``U = S^{k-1}``)."""
    n = k if n is None else n
    if k < 1 or n < k:
        raise ValueError("sphere cone needs 1 <= k <= n")
    p = np.zeros(k + 1)
    p[k] = 1.0
    G = np.vstack([np.eye(k, n), -np.eye(k, n)])
    return ConeSpec("sphere", {"k": k, "n": n}, k, k, sphere_intrinsic_volumes(k), p, G)


def cone_angle(x1, x2) -> float:
    """Angle in radians between two nonzero vectors."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n1, n2 = np.linalg.norm(x1), np.linalg.norm(x2)
    if n1 == 0 or n2 == 0:
        raise ValueError("cone_angle is undefined for a zero vector")
    return float(np.arccos(np.clip(x1 @ x2 / (n1 * n2), -1.0, 1.0)))


# ---- polyhedral cones


def _in_cone(Y, v, tol=1e-8) -> bool:
    from .conefit import nnls

    fit = nnls(Y.T, v)
    return fit.residual_norm <= tol * max(1.0, np.linalg.norm(v))


def _wedge_weights(Y) -> np.ndarray:
    # pointed planar cone: angle = 2 pi minus the widest empty gap
    theta = np.sort(np.arctan2(Y[:, 1], Y[:, 0]))
    gaps = np.diff(np.append(theta, theta[0] + 2 * math.pi))
    alpha = 2 * math.pi - gaps.max()
    return np.array([(math.pi - alpha) / (2 * math.pi), 0.5, alpha / (2 * math.pi)])


def _spherical_polygon_weights(Y) -> np.ndarray:
    """Exact weights of a pointed cone in R^3 from its spherical polygon."""
    U = Y / np.linalg.norm(Y, axis=1, keepdims=True)
    # interior direction c with c.u_i >= s > 0 for all generators
    m = U.shape[0]
    res = optimize.linprog(
        c=np.r_[0, 0, 0, -1.0],
        A_ub=np.c_[-U, np.ones(m)],
        b_ub=np.zeros(m),
        bounds=[(-1, 1)] * 3 + [(None, 1)],
    )
    c = res.x[:3] / np.linalg.norm(res.x[:3])
    e1 = np.linalg.svd(c[None, :])[2][1]
    e2 = np.cross(c, e1)
    P = U / (U @ c)[:, None]
    hull = spatial.ConvexHull(np.c_[P @ e1, P @ e2])
    V = U[hull.vertices]
    N = len(V)
    sides = np.empty(N)
    corners = np.empty(N)
    for i in range(N):
        v, prev, nxt = V[i], V[i - 1], V[(i + 1) % N]
        sides[i] = math.acos(np.clip(v @ nxt, -1, 1))
        tp = prev - (prev @ v) * v
        tn = nxt - (nxt @ v) * v
        corners[i] = math.acos(np.clip(tp @ tn / (np.linalg.norm(tp) * np.linalg.norm(tn)), -1, 1))
    solid = corners.sum() - (N - 2) * math.pi
    four_pi = 4 * math.pi
    return np.array([
        (2 * math.pi - sides.sum()) / four_pi,
        (N * math.pi - corners.sum()) / four_pi,
        sides.sum() / four_pi,
        solid / four_pi,
    ])


def polyhedral_cone(generators, mc_samples: int = 200_000, seed: int = 0) -> ConeSpec:
    """Cone spanned by the rows of ``generators`` (possibly dependent).

    The lineality space is split off first. Pointed parts of dimension up
    to 3 get exact weights (half-line, wedge angle, spherical polygon);
    higher-dimensional pointed parts fall back to seeded Monte Carlo and
    record standard errors in ``weights_se``.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    G = G[np.linalg.norm(G, axis=1) > 0]
    if G.shape[0] == 0:
        raise ValueError("cone needs at least one nonzero generator")
    _, s, Vt = np.linalg.svd(G, full_matrices=False)
    k = int(np.sum(s > 1e-10 * s[0]))
    Y = G @ Vt[:k].T

    lin = [i for i in range(len(Y)) if _in_cone(Y, -Y[i])]
    l = 0
    if lin:
        Yl = Y[lin]
        ul, sl, Vl = np.linalg.svd(Yl, full_matrices=False)
        l = int(np.sum(sl > 1e-10 * sl[0]))
        B = Vl[:l]
        Yp = Y - (Y @ B.T) @ B
        keep = np.linalg.norm(Yp, axis=1) > 1e-10 * np.abs(Y).max()
        Yp = Yp[keep]
    else:
        Yp = Y
    kp = k - l
    se = None
    if kp == 0:
        q = np.array([1.0])
    else:
        # coordinates of the pointed part in its own span
        _, sp, Vp = np.linalg.svd(Yp, full_matrices=False)
        Yc = Yp @ Vp[:kp].T
        if kp == 1:
            q = np.array([0.5, 0.5])
        elif kp == 2:
            q = _wedge_weights(Yc)
        elif kp == 3:
            q = _spherical_polygon_weights(Yc)
        else:
            q, qse = weights_monte_carlo(Yc, mc_samples, seed)
            se = np.r_[np.zeros(l), qse]
    p = np.r_[np.zeros(l), q]
    p = np.clip(p, 0, None)
    p /= p.sum()
    return ConeSpec("polyhedral", {"seed": seed} if se is not None else {}, k, l,
                    intrinsic_volumes_from_weights(p), p, G, se)


def weights_monte_carlo(generators, samples: int, seed: int):
    """Estimate ``p_0..p_k`` by counting positive NNLS coefficients.

    Returns ``(weights, standard_errors)`` with binomial standard errors.
    """
    from .conefit import nnls_batch

    if samples < 10_000:
        raise ValueError("weights_monte_carlo needs at least 1e4 samples")
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    k = np.linalg.matrix_rank(G)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((samples, G.shape[1]))
    beta = nnls_batch(G.T, Z)
    counts = np.bincount((beta > 0).sum(axis=1), minlength=k + 1)[: k + 1]
    w = counts / samples
    return w, np.sqrt(w * (1 - w) / samples)
