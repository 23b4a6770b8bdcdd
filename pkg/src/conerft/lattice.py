"""Lattice fields: smooth Gaussian simulation, excursion Euler
characteristics on cubical complexes, and Lipschitz-Killing curvature
estimates from residuals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import Ball, elementary_symmetric, intrinsic_volumes, unit_ball_volume


@dataclass(eq=False)
class LatticeField:
    """Scalar field on a regular lattice of dimension 1 to 3.

    ``mask`` marks voxels that belong to the search region and carry a
    defined value; ``meta`` records provenance such as seed and kernel sd.
    """

    values: np.ndarray
    spacing: tuple | None = None
    meta: dict = field(default_factory=dict)
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not 1 <= self.values.ndim <= 3:
            raise ValueError("lattice fields must be 1, 2 or 3 dimensional")
        if self.spacing is None:
            self.spacing = (1.0,) * self.values.ndim
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != self.values.ndim or min(self.spacing) <= 0:
            raise ValueError("spacing must be positive with one entry per axis")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.values.shape:
                raise ValueError("mask shape must match values")

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def dim(self) -> int:
        return self.values.ndim

    def support(self) -> np.ndarray:
        """Voxels inside the mask with non-nan values."""
        ok = ~np.isnan(self.values)
        return ok if self.mask is None else ok & self.mask


@dataclass(eq=False)
class Dataset:
    """Lattice of n-vectors: ``data`` has shape ``(*shape, n)``."""

    data: np.ndarray
    design: object  # conefit.DesignMatrix
    spacing: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim < 2:
            raise ValueError("dataset needs shape (*lattice, n)")
        if not 1 <= self.data.ndim - 1 <= 3:
            raise ValueError("lattice must be 1, 2 or 3 dimensional")
        if self.design is not None and self.design.n != self.n:
            raise ValueError(f"design has {self.design.n} rows but series have length {self.n}")
        if self.spacing is None:
            self.spacing = (1.0,) * len(self.shape)
        self.spacing = tuple(float(s) for s in self.spacing)

    @property
    def shape(self) -> tuple:
        return self.data.shape[:-1]

    @property
    def n(self) -> int:
        return self.data.shape[-1]


@dataclass(frozen=True, eq=False)
class SearchRegion:
    """Lipschitz-Killing curvatures ``L_0..L_D`` plus voxel volume."""

    lkc: np.ndarray
    voxel_volume: float = 1.0
    provenance: str = ""

    def __post_init__(self):
        L = np.asarray(self.lkc, dtype=float)
        if L.ndim != 1 or L.size == 0 or not np.all(np.isfinite(L)):
            raise ValueError("lkc must be a nonempty finite vector")
        if self.voxel_volume <= 0:
            raise ValueError("voxel volume must be positive")
        object.__setattr__(self, "lkc", L)

    @property
    def dim(self) -> int:
        return self.lkc.size - 1


# --------------------------------------------------------------------------
# simulation


def gaussian_kernel(kernel_sd: float) -> np.ndarray:
    """Unnormalised 1D Gaussian kernel truncated at four sd."""
    half = int(math.ceil(4 * kernel_sd))
    x = np.arange(-half, half + 1)
    return np.exp(-0.5 * (x / kernel_sd) ** 2)


def smooth_white_noise(noise: np.ndarray, kernel_sd: float, axes=None) -> np.ndarray:
    """Correlate padded white noise with the separable kernel and crop.

    ``noise`` carries a pad of ``ceil(4 kernel_sd)`` on every smoothed axis.
    The output has unit marginal variance: the separable kernel is scaled
    by its exact discrete norm.
    """
    w = gaussian_kernel(kernel_sd)
    half = (w.size - 1) // 2
    axes = range(noise.ndim) if axes is None else axes
    out = noise
    crop = [slice(None)] * noise.ndim
    for ax in axes:
        out = ndimage.correlate1d(out, w, axis=ax, mode="constant")
        crop[ax] = slice(half, noise.shape[ax] - half)
    return out[tuple(crop)] / np.sqrt(np.sum(w * w)) ** len(list(axes))


def smooth_gaussian_array(shape, kernel_sd: float, rng, count: int | None = None) -> np.ndarray:
    """Raw array version of :func:`simulate_smooth_gaussian`.

    With ``count`` set, returns ``count`` independent fields stacked on a
    leading axis.
    """
    if kernel_sd < 1:
        raise ValueError("kernel_sd must be at least one voxel")
    shape = tuple(int(s) for s in shape)
    half = int(math.ceil(4 * kernel_sd))
    padded = tuple(s + 2 * half for s in shape)
    if count is None:
        return smooth_white_noise(rng.standard_normal(padded), kernel_sd)
    noise = rng.standard_normal((count,) + padded)
    return smooth_white_noise(noise, kernel_sd, axes=range(1, len(shape) + 1))


def simulate_smooth_gaussian(shape, kernel_sd: float, seed) -> LatticeField:
    """Unit-variance smooth Gaussian field from white noise and a Gaussian kernel."""
    rng = np.random.default_rng(seed)
    values = smooth_gaussian_array(shape, kernel_sd, rng)
    return LatticeField(values, meta={"seed": seed, "kernel_sd": float(kernel_sd)})


def ugrf_lkc(shape, kernel_sd: float) -> np.ndarray:
    """Continuum LKCs of the box spanned by ``shape`` for a Gaussian kernel.

    A kernel with sd ``s`` gives gradient variance ``1 / (2 s^2)`` per axis;
    the box has extents ``shape - 1`` in voxel units.
    """
    scale = 1.0 / math.sqrt(2.0) / kernel_sd
    return elementary_symmetric((np.asarray(shape, dtype=float) - 1) * scale)


# --------------------------------------------------------------------------
# Euler characteristic


def excursion_ec_array(values: np.ndarray, t: float, dim: int | None = None, support=None) -> np.ndarray:
    """Euler characteristic of ``{values >= t}`` on the cubical complex.

    The last ``dim`` axes are the lattice (default: all axes); leading axes
    are a batch. Voxels outside ``support`` or with nan values are excluded.
    """
    values = np.asarray(values)
    dim = values.ndim if dim is None else dim
    inside = values >= t
    if support is not None:
        inside = inside & support
    lead = values.ndim - dim
    total = np.zeros(values.shape[:lead], dtype=np.int64)
    lattice_axes = range(lead, values.ndim)
    for r in range(dim + 1):
        for axes in itertools.combinations(lattice_axes, r):
            cells = inside
            for ax in axes:
                lo = [slice(None)] * cells.ndim
                hi = [slice(None)] * cells.ndim
                lo[ax] = slice(None, -1)
                hi[ax] = slice(1, None)
                cells = cells[tuple(lo)] & cells[tuple(hi)]
            count = cells.reshape(cells.shape[:lead] + (-1,)).sum(axis=-1)
            total += (-1) ** r * count
    return total


def excursion_ec(field: LatticeField, t: float) -> int:
    """EC of the excursion set ``{field >= t}`` (``+inf`` counts as above)."""
    return int(excursion_ec_array(field.values, t, support=field.support()))


def ec_curve(field: LatticeField, thresholds) -> np.ndarray:
    """Excursion EC at each threshold."""
    return np.array([excursion_ec(field, t) for t in thresholds], dtype=np.int64)


# --------------------------------------------------------------------------
# Lipschitz-Killing curvatures


def ols_residuals(dataset: Dataset) -> np.ndarray:
    """Least-squares residuals of every voxel series on all design columns."""
    X = dataset.design.columns
    if dataset.design.whitening is not None:
        X = dataset.design.whitening @ X
        Y = dataset.data @ dataset.design.whitening.T
    else:
        Y = dataset.data
    Q, _ = np.linalg.qr(X)
    return Y - (Y @ Q) @ Q.T


def lkc_top_estimate(residuals, mask=None) -> float:
    """Top-order LKC from normalised residuals.

    ``residuals`` is a :class:`Dataset` (its OLS residuals are used) or an
    array of shape ``(*shape, n)``. Each voxel with a ``+1`` neighbour in the
    mask along every axis contributes ``sqrt(det(Q'Q))`` where column ``d``
    of ``Q`` is the forward difference of ``E / ||E||`` along axis ``d``.
    """
    E = ols_residuals(residuals) if isinstance(residuals, Dataset) else np.asarray(residuals, dtype=float)
    dim = E.ndim - 1
    if E.shape[-1] < dim + 1:
        raise ValueError("need at least D + 1 residual components per voxel")
    mask = np.ones(E.shape[:-1], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    norm = np.linalg.norm(E, axis=-1, keepdims=True)
    N = np.divide(E, norm, out=np.zeros_like(E), where=norm > 0)

    core = tuple(slice(0, s - 1) for s in mask.shape)
    ok = mask[core].copy()
    diffs = []
    for ax in range(dim):
        nxt = tuple(slice(1, s) if a == ax else slice(0, s - 1) for a, s in enumerate(mask.shape))
        ok &= mask[nxt]
        diffs.append(N[nxt] - N[core])
    Q = np.stack(diffs, axis=-1)[ok]  # (voxels, n, D)
    gram = np.einsum("vni,vnj->vij", Q, Q)
    det = np.linalg.det(gram)
    return float(np.sqrt(np.clip(det, 0.0, None)).sum())


def ball_lkc_approx(top_lkc: float, dim: int = 3, convention: str = "fmri",
                    radius: float | None = None, voxel_volume: float = 1.0) -> SearchRegion:
    """LKCs of a ball whose top LKC equals ``top_lkc``.

    The radius solves ``omega_D r^D = top_lkc`` unless given. With
    ``convention="fmri"`` and ``dim=3`` the lower LKCs are
    ``(1, 4 pi r, 2 pi r^2)``, the surrogate customary in brain imaging;
    ``"euclidean"`` (and every other ``dim``) uses the exact ball
    intrinsic volumes ``(1, 4 r, 2 pi r^2)`` in 3D.
    """
    if not top_lkc > 0:
        raise ValueError("top LKC must be positive")
    if convention not in ("fmri", "euclidean"):
        raise ValueError("convention must be 'fmri' or 'euclidean'")
    r = (top_lkc / unit_ball_volume(dim)) ** (1.0 / dim) if radius is None else float(radius)
    if convention == "fmri" and dim == 3:
        L = np.array([1.0, 4 * np.pi * r, 2 * np.pi * r * r, top_lkc])
    else:
        L = intrinsic_volumes(Ball(dim, r))
        L[-1] = top_lkc
    return SearchRegion(L, voxel_volume=voxel_volume, provenance=f"ball[{convention}] r={r:.6g}")


def box_lkc_approx(top_lkc: float, extents, voxel_volume: float = 1.0) -> SearchRegion:
    """LKCs of a box with the given aspect, isotropically scaled to ``top_lkc``."""
    e = np.asarray(extents, dtype=float)
    if not top_lkc > 0 or np.any(e <= 0):
        raise ValueError("top LKC and extents must be positive")
    s = (top_lkc / np.prod(e)) ** (1.0 / e.size)
    return SearchRegion(elementary_symmetric(e * s), voxel_volume=voxel_volume,
                        provenance=f"box scale={s:.6g}")
