"""Cone projection by non-negative least squares and cone test statistics.

A cone alternative is written as a linear model ``mu = X beta`` with
``beta >= 0``; projecting the data onto the cone is then an NNLS fit.
Nuisance regressors are removed first by working in an orthonormal basis
of their orthogonal complement.
"""

from __future__ import annotations

import enum
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import _nnls


class NNLSConvergenceError(RuntimeError):
    """Raised when the active-set iteration cap is hit; carries the iterate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class Statistic(str, enum.Enum):
    CHIBAR = "chibar"
    TLR = "tlr"
    TIN = "tin"
    F = "f"
    FPLUS = "fplus"
    TMIDDLE = "t"


@dataclass(frozen=True, eq=False)
class FitResult:
    beta: np.ndarray
    fitted: np.ndarray
    chibar: float
    active_dim: int
    residual_norm: float
    kkt_violation: float = 0.0


def _fit_result(X, z, beta):
    fitted = X @ beta
    active = beta > 0
    dim = int(np.linalg.matrix_rank(X[:, active])) if active.any() else 0
    grad = X.T @ (z - fitted)
    viol = max(float(np.max(grad[~active], initial=0.0)),
               float(np.max(np.abs(grad[active]), initial=0.0)))
    return FitResult(beta, fitted, float(np.linalg.norm(fitted)), dim,
                     float(np.linalg.norm(z - fitted)), viol)


def kkt_tolerance(X, z) -> float:
    return 1e-10 * float(np.max(np.abs(X.T @ z), initial=0.0))


def nnls(X, z, passive=None) -> FitResult:
    """Project ``z`` onto the cone generated by the columns of ``X``.

    Lawson-Hanson active set method. ``passive`` optionally seeds the
    active set (a warm start); the KKT conditions are checked on exit
    regardless of the seed.

    Examples
    --------
    >>> nnls(np.eye(2), [3.0, -1.0]).beta
    array([3., 0.])
    """
    X = np.ascontiguousarray(X, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    if X.ndim != 2 or z.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: X {X.shape}, z {z.shape}")
    m = X.shape[1]
    seed = np.zeros(m, dtype=bool) if passive is None else np.asarray(passive, dtype=bool).copy()
    beta, _, _, status = _nnls.lawson_hanson(X, z, seed, 10 * m)
    fit = _fit_result(X, z, beta)
    if status != _nnls.CONVERGED:
        raise NNLSConvergenceError(f"NNLS exceeded {10 * m} outer iterations", fit)
    return fit


def nnls_batch(X, Z, warm: bool = True, chunk: int = 4096) -> np.ndarray:
    """Coefficients for each row of ``Z``, shape (N, m)."""
    X = np.ascontiguousarray(X, dtype=float)
    Z = np.ascontiguousarray(np.atleast_2d(Z), dtype=float)
    B, status = _nnls.lawson_hanson_batch(X, Z, warm, chunk)
    if status.any():
        bad = int(np.flatnonzero(status)[0])
        raise NNLSConvergenceError(f"NNLS failed on row {bad}", _fit_result(X, Z[bad], B[bad]))
    return B


def all_subsets_project(X, z) -> FitResult:
    """Brute-force cone projection over all column subsets (m <= 12).

    Every subset is fit by unconstrained least squares; fits with a
    negative coefficient are discarded and the longest surviving fitted
    vector wins (ties go to the smaller subset).
    """
    X = np.asarray(X, dtype=float)
    z = np.asarray(z, dtype=float)
    m = X.shape[1]
    if m > 12:
        raise ValueError(f"all-subsets enumeration limited to m <= 12, got {m}")
    best = np.zeros(m)
    best_sq = 0.0
    tie = 1e-12 * float(z @ z)
    for size in range(1, m + 1):
        for S in itertools.combinations(range(m), size):
            coef = np.linalg.lstsq(X[:, S], z, rcond=None)[0]
            if np.any(coef < 0):
                continue
            fitted = X[:, S] @ coef
            sq = float(fitted @ fitted)
            if sq > best_sq + tie:
                best_sq = sq
                best = np.zeros(m)
                best[list(S)] = coef
    return _fit_result(X, z, best)


def all_subsets_project_batch(X, Z):
    """Vectorised all-subsets projection of each row of ``Z``.

    Returns ``(chibar, active_dim)``; ``active_dim`` is the rank of the
    winning subset.
    """
    X = np.asarray(X, dtype=float)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    m = X.shape[1]
    if m > 12:
        raise ValueError("all-subsets enumeration limited to m <= 12")
    best_sq = np.zeros(len(Z))
    best_dim = np.zeros(len(Z), dtype=int)
    tie = 1e-12 * np.einsum("ij,ij->i", Z, Z)
    for size in range(1, m + 1):
        for S in itertools.combinations(range(m), size):
            XS = X[:, S]
            pinv = np.linalg.pinv(XS)
            coef = Z @ pinv.T
            ok = np.all(coef >= 0, axis=1)
            fitted = coef @ XS.T
            sq = np.einsum("ij,ij->i", fitted, fitted)
            better = ok & (sq > best_sq + tie)
            best_sq = np.where(better, sq, best_sq)
            best_dim = np.where(better, np.linalg.matrix_rank(XS), best_dim)
    return np.sqrt(best_sq), best_dim


# --------------------------------------------------------------------------
# designs and statistics


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Regressors ``columns`` (n x p); ``cone_columns`` index the generators.

    The remaining columns are unconstrained nuisance regressors. An optional
    ``whitening`` matrix (n x n) premultiplies data and columns.
    """

    columns: np.ndarray
    cone_columns: tuple
    whitening: np.ndarray | None = None

    def __post_init__(self):
        cols = np.atleast_2d(np.asarray(self.columns, dtype=float))
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "cone_columns", tuple(int(c) for c in self.cone_columns))
        if not self.cone_columns:
            raise ValueError("design needs at least one cone column")
        if np.any(np.linalg.norm(cols[:, list(self.cone_columns)], axis=0) == 0):
            raise ValueError("cone columns must be nonzero")
        if np.linalg.matrix_rank(cols) >= cols.shape[0]:
            raise ValueError("design rank must be below the number of observations")

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def nuisance_columns(self) -> tuple:
        return tuple(i for i in range(self.columns.shape[1]) if i not in self.cone_columns)

    def reduce(self) -> "ReducedDesign":
        return ReducedDesign.from_design(self)


def _orth_complement(A, n):
    if A.shape[1] == 0:
        return np.eye(n)
    U, s, _ = np.linalg.svd(A, full_matrices=True)
    r = int(np.sum(s > 1e-10 * s[0])) if s.size else 0
    return U[:, r:]


@dataclass(frozen=True, eq=False)
class ReducedDesign:
    """Design expressed in the orthogonal complement of the nuisance span.

    ``basis`` (n x n_eff) maps data ``z`` to reduced coordinates
    ``basis.T @ z``; ``cone`` holds the reduced generators and ``span`` an
    orthonormal basis of their span (rank ``k``).
    """

    basis: np.ndarray
    cone: np.ndarray
    span: np.ndarray
    middle: np.ndarray
    whitening: np.ndarray | None

    @classmethod
    def from_design(cls, design: DesignMatrix):
        X = design.columns
        if design.whitening is not None:
            X = design.whitening @ X
        W = _orth_complement(X[:, list(design.nuisance_columns)], design.n)
        C = W.T @ X[:, list(design.cone_columns)]
        U, s, _ = np.linalg.svd(C, full_matrices=False)
        k = int(np.sum(s > 1e-10 * s[0]))
        # middle of the cone: sum of unit-normalised generators
        u = (C / np.linalg.norm(C, axis=0)).sum(axis=1)
        nu = np.linalg.norm(u)
        u = u / nu if nu > 0 else U[:, 0]
        return cls(W, np.ascontiguousarray(C), U[:, :k], u, design.whitening)

    @property
    def n_eff(self) -> int:
        return self.basis.shape[1]

    @property
    def k(self) -> int:
        return self.span.shape[1]

    @property
    def nu(self) -> int:
        return self.n_eff - self.k

    def transform(self, Z):
        Z = np.asarray(Z, dtype=float)
        if self.whitening is not None:
            Z = Z @ self.whitening.T
        return Z @ self.basis


def _ratio(num, den):
    """num/den with +inf for x/0 (x > 0) and nan for 0/0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    zero = den == 0
    out = np.where(zero & (num > 0), np.inf, out)
    out = np.where(zero & (num < 0), -np.inf, out)
    out = np.where(zero & (num == 0), np.nan, out)
    return out


def statistics_batch(design: DesignMatrix | ReducedDesign, Z, kinds, warm: bool = True) -> dict:
    """Evaluate several statistics on each row of ``Z`` (shape (N, n)).

    Returns a dict mapping each :class:`Statistic` to an array of length N.
    ``+inf`` marks x/0 and ``nan`` marks the undefined 0/0.
    """
    red = design.reduce() if isinstance(design, DesignMatrix) else design
    kinds = [Statistic(k) for k in kinds]
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    Zr = red.transform(Z)
    n_eff, k, nu = red.n_eff, red.k, red.nu
    # squared norms below roundoff of the raw data count as exact zeros
    raw = Z if red.whitening is None else Z @ red.whitening.T
    scale = 1e-24 * np.einsum("ij,ij->i", raw, raw)
    clean = lambda sq: np.where(sq <= scale, 0.0, sq)  # noqa: E731

    out = {}
    need_cone = {Statistic.CHIBAR, Statistic.TLR, Statistic.TIN, Statistic.FPLUS} & set(kinds)
    if need_cone:
        B = nnls_batch(red.cone, Zr, warm=warm)
        fitted = B @ red.cone.T
        chibar = np.sqrt(clean(np.einsum("ij,ij->i", fitted, fitted)))
        resid_sq = clean(np.einsum("ij,ij->i", Zr - fitted, Zr - fitted))
    top = Zr @ red.span
    top_sq = clean(np.einsum("ij,ij->i", top, top))
    perp = Zr - top @ red.span.T
    perp_sq = clean(np.einsum("ij,ij->i", perp, perp))
    middle = Zr @ red.middle
    middle = np.where(middle**2 <= scale, 0.0, middle)

    for kind in kinds:
        if kind is Statistic.CHIBAR:
            out[kind] = chibar
        elif kind is Statistic.TLR:
            if n_eff <= k:
                raise ValueError("T_LR needs n > k")
            out[kind] = _ratio(chibar, np.sqrt(resid_sq / n_eff))
        elif kind is Statistic.TIN:
            if nu <= 0:
                raise ValueError("T_IN needs nu = n - k > 0")
            out[kind] = _ratio(chibar, np.sqrt(perp_sq / nu))
        elif kind is Statistic.F:
            if nu <= 0:
                raise ValueError("F needs nu = n - k > 0")
            out[kind] = _ratio(top_sq / k, perp_sq / nu)
        elif kind is Statistic.FPLUS:
            if nu <= 0:
                raise ValueError("F_+ needs nu = n - k > 0")
            f = _ratio(top_sq / k, perp_sq / nu)
            out[kind] = np.where(chibar > 0, f, 0.0)
        elif kind is Statistic.TMIDDLE:
            if nu <= 0:
                raise ValueError("T needs nu = n - k > 0")
            out[kind] = _ratio(middle, np.sqrt(perp_sq / nu))
    return out


def statistic(design: DesignMatrix, z, kind) -> float:
    """One cone test statistic for a single data vector ``z``.

    >>> d = DesignMatrix(np.eye(3)[:, :2], (0, 1))
    >>> statistic(d, [3.0, 0.0, 4.0], "tin")
    0.75
    """
    return float(statistics_batch(design, np.asarray(z, dtype=float)[None, :], [kind])[Statistic(kind)][0])


def fit_field(dataset, kind, warm: bool = True):
    """Evaluate ``kind`` voxelwise on a :class:`~conerft.lattice.Dataset`.

    Undefined voxels (0/0) are set to nan and flagged False in the
    returned field's ``mask``.
    """
    from .lattice import LatticeField

    kind = Statistic(kind)
    shape = dataset.shape
    Z = dataset.data.reshape(-1, dataset.n)
    values = statistics_batch(dataset.design, Z, [kind], warm=warm)[kind].reshape(shape)
    valid = ~np.isnan(values)
    if not valid.all():
        warnings.warn(f"{int((~valid).sum())} voxels undefined (0/0) for {kind.value}")
    meta = dict(dataset.meta)
    meta["statistic"] = kind.value
    return LatticeField(values, spacing=dataset.spacing, meta=meta, mask=valid)
