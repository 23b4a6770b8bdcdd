"""Block-design regressors with an uncertain response delay.

The haemodynamic response ``h`` is a difference of two gamma densities.
A delay ``delta`` shifts it to ``h(t - delta) ~ h(t) - delta h'(t)``, so
delays in ``[D1, D2]`` span the cone generated by
``x_j = (h - D_j h') * g`` for the stimulus ``g``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .conefit import DesignMatrix, ReducedDesign
from .geometry import cone_angle
from .lattice import Dataset, smooth_gaussian_array

FINE_DT = 0.1  # seconds; grid on which convolutions are evaluated


@dataclass(frozen=True)
class HrfParams:
    """Gamma-difference response; ``peak``/``fwhm`` in seconds.

    ``dispersion=False`` collapses the response to a unit impulse at
    ``peak`` so regressors become shifted copies of the stimulus.
    """

    peak: float = 5.5
    fwhm: float = 5.2
    undershoot_peak: float = 10.8
    undershoot_fwhm: float = 7.35
    dip: float = 0.35
    dispersion: bool = True


@dataclass(frozen=True)
class Stimulus:
    """Repeating block: ``on`` s of the effect of interest, ``off`` s rest,
    then (if ``neutral``) ``on`` s of a neutral condition and ``off`` s rest."""

    on: float = 9.0
    off: float = 9.0
    cycles: int = 10
    neutral: bool = True

    @property
    def period(self) -> float:
        return (self.on + self.off) * (2 if self.neutral else 1)

    @property
    def duration(self) -> float:
        return self.period * self.cycles


@dataclass
class AnalysisConfig:
    """Settings for building a design, synthesising data and fitting."""

    dataset: str | None = None
    hrf: HrfParams = field(default_factory=HrfParams)
    stimulus: Stimulus = field(default_factory=Stimulus)
    tr: float = 3.0
    delay_range: tuple = (-2.0, 2.0)
    drift_order: int = 3
    statistic: str = "tin"
    alpha: float = 0.05
    output: str = "out"
    seed: int = 0

    def __post_init__(self):
        self.delay_range = tuple(float(d) for d in self.delay_range)
        if len(self.delay_range) != 2 or self.delay_range[0] > self.delay_range[1]:
            raise ValueError("delay_range must be (D1, D2) with D1 <= D2")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if not self.tr > 0:
            raise ValueError("sampling interval must be positive")
        if self.drift_order < 0:
            raise ValueError("drift_order must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        d = dict(d)
        if "hrf" in d:
            d["hrf"] = HrfParams(**d["hrf"])
        if "stimulus" in d:
            d["stimulus"] = Stimulus(**d["stimulus"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "AnalysisConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def _gamma_shape(t, peak, fwhm):
    a = (peak / fwhm) ** 2 * 8 * math.log(2)
    b = fwhm**2 / (peak * 8 * math.log(2))
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(a * np.log(t[pos] / peak) - (t[pos] - peak) / b)
    return out


def hrf(t, params: HrfParams = HrfParams()):
    """Gamma-difference response (main lobe peaks at 1) and its derivative."""
    t = np.asarray(t, dtype=float)
    h = _gamma_shape(t, params.peak, params.fwhm) - params.dip * _gamma_shape(
        t, params.undershoot_peak, params.undershoot_fwhm)
    return h, np.gradient(h, t)


def stimulus_waveform(times, stim: Stimulus):
    """Indicators of the effect-of-interest and neutral blocks at ``times``."""
    phase = np.mod(times, stim.period)
    active = (phase < stim.on).astype(float)
    neutral = np.zeros_like(active)
    if stim.neutral:
        start = stim.on + stim.off
        neutral = ((phase >= start) & (phase < start + stim.on)).astype(float)
    return active, neutral


def frame_times(config: AnalysisConfig) -> np.ndarray:
    return np.arange(0.0, config.stimulus.duration, config.tr)


def _convolve(kernel, signal):
    return np.convolve(signal, kernel)[: signal.size] * FINE_DT


def _response_kernels(params: HrfParams):
    t = np.arange(0.0, 32.0, FINE_DT)
    return t, hrf(t, params)


def _shifted_response(config: AnalysisConfig, waveform, delay):
    """``(h(. - delay) * waveform)`` sampled at frame times."""
    fine = np.arange(0.0, config.stimulus.duration, FINE_DT)
    times = frame_times(config)
    if not config.hrf.dispersion:
        shifted = np.interp(times - config.hrf.peak - delay, fine, waveform, left=0.0)
        return shifted
    t, _ = _response_kernels(config.hrf)
    h, _ = hrf(t - delay, config.hrf)
    return np.interp(times, fine, _convolve(h, waveform))


def cone_regressors(config: AnalysisConfig) -> np.ndarray:
    """Generators ``(h - D_j h') * g`` (n x 2; n x 1 when D1 == D2).

    Without dispersion the response is an impulse and the generators are
    the exactly shifted stimulus.
    """
    fine = np.arange(0.0, config.stimulus.duration, FINE_DT)
    active, _ = stimulus_waveform(fine, config.stimulus)
    delays = sorted(set(config.delay_range))
    times = frame_times(config)
    cols = []
    for delay in delays:
        if not config.hrf.dispersion:
            cols.append(_shifted_response(config, active, delay))
            continue
        t, (h, dh) = _response_kernels(config.hrf)
        cols.append(np.interp(times, fine, _convolve(h - delay * dh, active)))
    return np.column_stack(cols)


def nuisance_regressors(config: AnalysisConfig) -> np.ndarray:
    """Polynomial drift up to ``drift_order`` plus the neutral-block response."""
    times = frame_times(config)
    u = 2 * times / times[-1] - 1
    cols = [np.polynomial.legendre.legval(u, np.eye(config.drift_order + 1)[i])
            for i in range(config.drift_order + 1)]
    if config.stimulus.neutral:
        fine = np.arange(0.0, config.stimulus.duration, FINE_DT)
        _, neutral = stimulus_waveform(fine, config.stimulus)
        cols.append(_shifted_response(config, neutral, 0.0))
    return np.column_stack(cols)


def build_design(config: AnalysisConfig):
    """Design matrix (cone columns first) and the residualised cone angle.

    Returns ``(design, alpha)``; ``alpha`` is 0 when the delay range is a
    single point and the cone is a half-line.
    """
    cone = cone_regressors(config)
    X = np.column_stack([cone, nuisance_regressors(config)])
    design = DesignMatrix(X, tuple(range(cone.shape[1])))
    if cone.shape[1] == 1:
        return design, 0.0
    red = ReducedDesign.from_design(design)
    alpha = cone_angle(red.cone[:, 0], red.cone[:, 1])
    if alpha < 1e-8 or alpha > math.pi - 1e-8:
        raise ValueError(f"degenerate cone: angle {alpha:.3g}")
    return design, alpha


def synth_data(config: AnalysisConfig, activation: dict, shape, sigma: float = 1.0,
               kernel_sd: float | None = None, design: DesignMatrix | None = None) -> Dataset:
    """Synthetic lattice of series: shifted responses plus Gaussian noise.

    ``activation`` maps voxel index tuples to ``(beta, delta)``; each delay
    must lie inside the configured range. Noise is iid over time and, if
    ``kernel_sd`` is given, spatially smooth with unit variance.
    """
    d1, d2 = config.delay_range
    for vox, (_, delta) in activation.items():
        if not d1 <= delta <= d2:
            raise ValueError(f"delay {delta} at {vox} outside [{d1}, {d2}]")
    if design is None:
        design, _ = build_design(config)
    shape = tuple(int(s) for s in shape)
    rng = np.random.default_rng(config.seed)
    n = design.n
    if kernel_sd is None:
        data = rng.standard_normal(shape + (n,))
    else:
        data = np.moveaxis(smooth_gaussian_array(shape, kernel_sd, rng, count=n), 0, -1).copy()
    data *= sigma
    fine = np.arange(0.0, config.stimulus.duration, FINE_DT)
    active, _ = stimulus_waveform(fine, config.stimulus)
    for vox, (beta, delta) in activation.items():
        data[tuple(vox)] += beta * _shifted_response(config, active, delta)
    meta = {"seed": config.seed, "kernel_sd": kernel_sd, "sigma": sigma}
    return Dataset(data, design, meta=meta)
