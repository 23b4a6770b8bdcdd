"""Euler characteristic densities of Gaussian-derived random fields.

``rho_d(t)`` is the coefficient of the d-th Lipschitz-Killing curvature
in the expected Euler characteristic of the excursion set above ``t``.
``rho_0`` is always the exact upper tail probability; higher orders use
closed forms. All functions accept scalar or array ``t``.

Set ``CONERFT_DEBUG=1`` (or ``ecdensity.DEBUG = True``) to have the cone
densities evaluate both of their equivalent forms and assert agreement.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import special

from .geometry import ConeSpec, sphere_intrinsic_volumes

MAX_ORDER = 10
DEBUG = os.environ.get("CONERFT_DEBUG", "") not in ("", "0")
_DEBUG_RTOL = 1e-10


class DimensionError(ValueError):
    """The requested order lies outside the range where the density is valid."""


def _check_order(d):
    if int(d) != d or d < 0:
        raise ValueError(f"order d must be a nonnegative integer, got {d}")
    if d > MAX_ORDER:
        raise ValueError(f"order d capped at {MAX_ORDER}, got {d}")
    return int(d)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def hermite_he(n: int, t):
    """Probabilists' Hermite polynomial He_n(t) by three-term recurrence."""
    t = np.asarray(t, dtype=float)
    if n < 0:
        raise ValueError("Hermite degree must be >= 0")
    prev, cur = np.ones_like(t), t.copy()
    if n == 0:
        return prev
    for i in range(1, n):
        prev, cur = cur, t * cur - i * prev
    return cur


def _gauss(d, t):
    t = np.asarray(t, dtype=float)
    if d == 0:
        return special.ndtr(-t)
    return (2 * np.pi) ** (-(d + 1) / 2) * hermite_he(d - 1, t) * np.exp(-0.5 * t * t)


def gaussian_ec_density(d: int, t):
    """EC density of a unit Gaussian random field.

    ``rho_0(t) = P(Z >= t)`` and, for d >= 1,
    ``rho_d(t) = (2 pi)^{-(d+1)/2} He_{d-1}(t) exp(-t^2/2)``.
    """
    return _out(_gauss(_check_order(d), t))


def _chi(d, t, j):
    t = np.asarray(t, dtype=float)
    if d == 0:
        return special.gammaincc(0.5 * j, 0.5 * np.maximum(t, 0.0) ** 2) * (t >= 0) + (t < 0)
    L = sphere_intrinsic_volumes(j)
    return sum(L[i] * _gauss(d + i, t) for i in range(j) if L[i] != 0.0)


def chi_ec_density(d: int, t, j: int):
    """EC density of the chi field with ``j`` degrees of freedom.

    d = 0 is the chi_j upper tail; for d >= 1 the density is the
    sphere-weighted sum ``sum_i L_i(S^{j-1}) rho^G_{d+i}(t)``, defined
    for ``t >= 0`` (``t = 0`` as the limit from above).
    """
    d = _check_order(d)
    if j < 1:
        raise ValueError("chi degrees of freedom must be >= 1")
    if d >= 1 and np.any(np.asarray(t) < 0):
        raise ValueError("chi EC density for d >= 1 needs t >= 0")
    return _out(_chi(d, t, j))


def _student(d, t, nu):
    t = np.asarray(t, dtype=float)
    if d == 0:
        return special.stdtr(nu, -t)
    x = t / math.sqrt(nu)
    log1p = np.log1p(x * x)
    total = np.zeros_like(t)
    for l in range((d - 1) // 2 + 1):
        log_c = (math.lgamma(d) + math.lgamma(0.5 * (d - 1 - 2 * l + nu)) - math.lgamma(0.5 * nu)
                 - 0.5 * (d + 1) * math.log(math.pi) - (2 * l + 1) * math.log(2)
                 - math.lgamma(d - 2 * l) - math.lgamma(l + 1))
        total = total + (-1) ** l * math.exp(log_c) * x ** (d - 1 - 2 * l) * np.exp(
            -0.5 * (nu - 1 - 2 * l) * log1p)
    return total


def t_ec_density(d: int, t, nu: int):
    """EC density of the Student T field with ``nu`` degrees of freedom.

    Single-sum closed form with gamma ratios in log space, stable for
    ``nu`` up to 1e4 and beyond. The odd powers of ``t/sqrt(nu)`` keep
    their sign, so negative ``t`` is also handled.
    """
    d = _check_order(d)
    if nu < 1:
        raise ValueError("nu must be >= 1")
    return _out(_student(d, t, nu))


def _f(d, t, k, nu):
    t = np.asarray(t, dtype=float)
    if d == 0:
        return special.betainc(0.5 * nu, 0.5 * k, nu / (nu + k * t))
    L = sphere_intrinsic_volumes(k)
    s = np.sqrt(k * t)
    shrink = 1.0 + k * t / nu
    return sum(L[j] * _student(d + j, s, nu) * shrink ** (-0.5 * j) for j in range(k) if L[j] != 0.0)


def f_ec_density(d: int, t, k: int, nu: int):
    """EC density of the F field with ``k, nu`` degrees of freedom.

    ``rho_d(t) = sum_j L_j(S^{k-1}) rho^T_{d+j}(sqrt(k t); nu)
    (1 + k t / nu)^{-j/2}``; ``d = 0`` is the exact F upper tail from the
    regularised incomplete beta function.
    """
    d = _check_order(d)
    if k < 1 or nu < 1:
        raise ValueError("F degrees of freedom must be >= 1")
    if np.any(np.asarray(t) < 0):
        raise ValueError("F threshold must be nonnegative")
    return _out(_f(d, t, k, nu))


# --------------------------------------------------------------------------
# cone statistics


def _check_cone(cone: ConeSpec):
    if not cone.convex:
        raise ValueError("EC densities are only available for convex cones")


def _mixture_js(cone):
    return [j for j in range(1, cone.span_dim + 1) if cone.weights[j] > 0]


def _agree(a, b, what):
    a = np.asarray(a)
    b = np.asarray(b)
    if not np.allclose(a, b, rtol=_DEBUG_RTOL, atol=0):
        raise AssertionError(f"{what}: mixture and intrinsic-volume forms disagree")


def chibar_tail(t, cone: ConeSpec, form: str = "mixture"):
    """``P(chibar > t) = sum_{j>=1} p_j P(chi_j >= t)``.

    ``form="volumes"`` evaluates ``sum_j L_j(U) rho^G_j(t)`` instead; the
    two agree for ``t >= 0``.
    """
    return chibar_ec_density(0, t, cone, form=form)


def chibar_ec_density(d: int, t, cone: ConeSpec, form: str = "volumes"):
    """EC density of the chi-bar field of a convex cone.

    ``form`` selects ``"volumes"`` (``sum_j L_j(U) rho^G_{d+j}``) or
    ``"mixture"`` (``sum_j p_j rho^chi_d(t; j)``).
    """
    d = _check_order(d)
    _check_cone(cone)
    if np.any(np.asarray(t) < 0):
        raise ValueError("chi-bar threshold must be nonnegative")

    def volumes():
        L = cone.intrinsic_volumes
        return sum(L[j] * _gauss(d + j, t) for j in range(cone.span_dim) if L[j] != 0.0)

    def mixture():
        return sum(cone.weights[j] * _chi(d, t, j) for j in _mixture_js(cone))

    return _out(_dual(form, volumes, mixture, "chibar"))


def _dual(form, volumes, mixture, what):
    if form not in ("volumes", "mixture"):
        raise ValueError(f"form must be 'volumes' or 'mixture', got {form!r}")
    first = volumes() if form == "volumes" else mixture()
    if DEBUG:
        _agree(first, mixture() if form == "volumes" else volumes(), what)
    return first


def tin_ec_density(d: int, t, cone: ConeSpec, nu: int, form: str = "volumes"):
    """EC density of the independently normalised cone statistic T_IN.

    Valid for ``d < nu + max(l(U), 1)``; ``DimensionError`` otherwise.
    """
    d = _check_order(d)
    _check_cone(cone)
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if d >= nu + max(cone.linear_dim, 1):
        raise DimensionError(f"T_IN density needs d < nu + max(l, 1) = {nu + max(cone.linear_dim, 1)}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("T_IN threshold must be nonnegative")

    def volumes():
        L = cone.intrinsic_volumes
        shrink = 1.0 + t * t / nu
        return sum(L[j] * _student(d + j, t, nu) * shrink ** (-0.5 * j)
                   for j in range(cone.span_dim) if L[j] != 0.0)

    def mixture():
        return sum(cone.weights[j] * _f(d, t * t / j, j, nu) for j in _mixture_js(cone))

    return _out(_dual(form, volumes, mixture, "T_IN"))


def tlr_ec_density(d: int, t, cone: ConeSpec, n: int):
    """EC density of the likelihood-ratio cone statistic T_LR.

    ``sum_j p_j rho^F_d(t^2 (n-j) / (j n); j, n-j)`` over ``j < n`` with
    ``p_j > 0``. Valid for ``d < n`` and requires ``n > k``.
    """
    d = _check_order(d)
    _check_cone(cone)
    if n <= cone.span_dim:
        raise ValueError(f"T_LR needs n > k = {cone.span_dim}")
    if d >= n:
        raise DimensionError(f"T_LR density needs d < n = {n}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("T_LR threshold must be nonnegative")
    total = sum(cone.weights[j] * _f(d, t * t * (n - j) / (j * n), j, n - j)
                for j in _mixture_js(cone) if j < n)
    return _out(total)


# --------------------------------------------------------------------------
# statistic descriptions


@dataclass(frozen=True, eq=False)
class StatisticSpec:
    """Tagged description of a statistic random field.

    ``kind`` is one of ``gaussian, chi, t, f, chibar, tin, tlr``. For F
    fields, ``scale="sqrt_kf"`` reports thresholds on the ``sqrt(k F)``
    scale (the densities are unchanged by the monotone reparametrisation).
    """

    kind: str
    dof: int | None = None  # j for chi, nu for t / f / tin
    k: int | None = None  # numerator dof for f
    n: int | None = None  # total dof for tlr
    cone: ConeSpec | None = None
    scale: str = "native"

    def __post_init__(self):
        need = {
            "gaussian": (), "chi": ("dof",), "t": ("dof",), "f": ("k", "dof"),
            "chibar": ("cone",), "tin": ("cone", "dof"), "tlr": ("cone", "n"),
        }
        if self.kind not in need:
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        for attr in need[self.kind]:
            if getattr(self, attr) is None:
                raise ValueError(f"{self.kind} statistic needs {attr}")
        if self.kind == "tlr" and self.n <= self.cone.span_dim:
            raise ValueError("T_LR needs n > k")
        if self.scale not in ("native", "sqrt_kf") or (self.scale == "sqrt_kf" and self.kind != "f"):
            raise ValueError("scale 'sqrt_kf' applies to F statistics only")

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def chi(cls, j):
        return cls("chi", dof=j)

    @classmethod
    def t(cls, nu):
        return cls("t", dof=nu)

    @classmethod
    def f(cls, k, nu, sqrt_scale=False):
        return cls("f", dof=nu, k=k, scale="sqrt_kf" if sqrt_scale else "native")

    @classmethod
    def chibar(cls, cone):
        return cls("chibar", cone=cone)

    @classmethod
    def tin(cls, cone, nu):
        return cls("tin", dof=nu, cone=cone)

    @classmethod
    def tlr(cls, cone, n):
        return cls("tlr", n=n, cone=cone)

    @property
    def validity_bound(self) -> float:
        """Orders ``d`` below this bound have a well-defined density."""
        if self.kind in ("gaussian", "chi", "chibar"):
            return math.inf
        if self.kind == "t":
            return self.dof + 1
        if self.kind == "f":
            return self.k + self.dof
        if self.kind == "tlr":
            return self.n
        return self.dof + max(self.cone.linear_dim, 1)

    @property
    def nonnegative(self) -> bool:
        return self.kind not in ("gaussian", "t")

    def ec_density(self, d: int, t):
        kind = self.kind
        if kind == "gaussian":
            return gaussian_ec_density(d, t)
        if kind == "chi":
            return chi_ec_density(d, t, self.dof)
        if kind == "t":
            return t_ec_density(d, t, self.dof)
        if kind == "f":
            if self.scale == "sqrt_kf":
                t = np.asarray(t, dtype=float) ** 2 / self.k
            return f_ec_density(d, t, self.k, self.dof)
        if kind == "chibar":
            return chibar_ec_density(d, t, self.cone)
        if kind == "tin":
            return tin_ec_density(d, t, self.cone, self.dof)
        return tlr_ec_density(d, t, self.cone, self.n)

    def tail(self, t):
        return self.ec_density(0, t)

    def label(self) -> str:
        if self.kind == "gaussian":
            return "Z"
        if self.kind == "chi":
            return f"chi({self.dof})"
        if self.kind == "t":
            return f"T({self.dof})"
        if self.kind == "f":
            base = f"F({self.k},{self.dof})"
            return f"sqrt({self.k}F)[{base}]" if self.scale == "sqrt_kf" else base
        if self.kind == "chibar":
            return f"chibar[{self.cone.label()}]"
        if self.kind == "tin":
            return f"T_IN({self.dof})[{self.cone.label()}]"
        return f"T_LR(n={self.n})[{self.cone.label()}]"
