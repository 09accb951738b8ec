"""Peak widths, the B0 sweep and least-squares fits of width curves and Gaussians."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from .atom import CESIUM, AtomModel
from .geometry import FieldConfig
from .raman import BeamConfig
from .spectrum import PulseConfig, Spectrum, pulse_lineshape, synthesize

__all__ = [
    "AmbiguousPeakError",
    "FitError",
    "FitParams",
    "GaussianParams",
    "SweepResult",
    "measure_fwhm",
    "peak_centroid",
    "width_model",
    "fit_curve",
    "fit_width_curve",
    "fit_gaussian",
    "fit_line_comb",
    "CombFit",
    "sweep_b0",
    "spectral_lightshift_broadening",
    "calibrate_kappa_spectral",
]


class AmbiguousPeakError(ValueError):
    """The spectrum has no single dominant peak to measure."""

    def __init__(self, msg, B0=None):
        super().__init__(msg if B0 is None else f"{msg} (B0 = {B0:g} mG)")
        self.B0 = B0


class FitError(RuntimeError):
    """Least squares did not converge; ``best`` holds the last parameters."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class FitParams:
    """``F(B0) = A / (B0 + b) + C * B0`` with B0 in mG, F in kHz."""

    A: float
    b: float
    C: float
    residual_rms: float = 0.0

    def __call__(self, B0):
        return width_model(np.asarray(B0, dtype=float), self.A, self.b, self.C)

    @property
    def argmin(self) -> float:
        """Minimizing B0, ``sqrt(A/C) - b``, clipped at 0."""
        if self.C <= 0:
            return float("inf")
        return max(float(np.sqrt(self.A / self.C) - self.b), 0.0)


@dataclass(frozen=True)
class GaussianParams:
    amplitude: float
    center: float
    sigma: float
    residual_rms: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((x - self.center) / self.sigma) ** 2)

    @property
    def fwhm(self) -> float:
        return 2 * np.sqrt(2 * np.log(2)) * abs(self.sigma)


@dataclass
class SweepResult:
    points: list  # (B0 mG, fwhm kHz)
    fit: FitParams | None
    argmin_B0: float | None
    spectra: list | None = None
    ambiguous: list = field(default_factory=list)  # B0 values skipped as ambiguous

    @property
    def B0(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def fwhm(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def _xy(spec):
    if isinstance(spec, Spectrum):
        return spec.detuning_axis, spec.transfer
    x, y = spec
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def _crossing(x0, x1, y0, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def measure_fwhm(spec, merge_gap: float = 0.0) -> float:
    """Full width at half maximum above the spectrum minimum.

    The crossings are located by linear interpolation. Parts of the curve above
    half maximum that are separated by less than ``merge_gap`` (same units as
    the axis) count as one peak, which lets a partly resolved comb of lines be
    measured by its envelope. Anything else raises AmbiguousPeakError.

    ``spec`` is a :class:`Spectrum` or an ``(x, y)`` pair.
    """
    x, y = _xy(spec)
    if x.size < 3:
        raise ValueError("need at least three samples")
    y = y - y.min()
    i_max = int(np.argmax(y))
    if i_max == 0 or i_max == y.size - 1 or y[i_max] <= 0:
        raise ValueError("global maximum is not strictly inside the axis")
    half = y[i_max] / 2
    above = y >= half
    idx = np.flatnonzero(above)
    # contiguous runs of points above half max
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    stops = np.r_[idx[breaks], idx[-1]]
    if len(starts) > 1:
        gaps = x[starts[1:]] - x[stops[:-1]]
        if np.any(gaps > merge_gap):
            raise AmbiguousPeakError("more than one peak rises above half maximum")
    lo, hi = starts[0], stops[-1]
    if lo == 0 or hi == y.size - 1:
        raise ValueError("half-maximum level not reached inside the axis")
    left = _crossing(x[lo - 1], x[lo], y[lo - 1], y[lo], half)
    right = _crossing(x[hi], x[hi + 1], y[hi], y[hi + 1], half)
    return float(right - left)


def peak_centroid(spec, fraction: float = 0.5) -> float:
    """Intensity-weighted mean position of the part above ``fraction`` of max."""
    x, y = _xy(spec)
    y = y - y.min()
    w = np.where(y >= fraction * y.max(), y, 0.0)
    return float(np.sum(w * x) / np.sum(w))


def width_model(B0, A, b, C):
    return A / (B0 + b) + C * B0


def _finish_fit(res, n_params):
    if not res.success:
        raise FitError(f"least squares did not converge: {res.message}", best=tuple(res.x))
    rms = float(np.sqrt(np.mean(res.fun**2)))
    return tuple(float(v) for v in res.x[:n_params]), rms


def fit_width_curve(B0, fwhm, guess=None, max_nfev: int = 2000) -> FitParams:
    """Damped least-squares fit of ``A/(B0+b) + C B0``.

    Default start: ``b`` = smallest B0, ``C`` = slope of the last two points,
    ``A`` = (F(B0_min) - C B0_min)(B0_min + b).
    """
    B0 = np.asarray(B0, dtype=float)
    fwhm = np.asarray(fwhm, dtype=float)
    if B0.size < 4:
        raise ValueError("need at least 4 points to fit the width curve")
    order = np.argsort(B0)
    B0, fwhm = B0[order], fwhm[order]
    if guess is None:
        b0 = max(B0[0], 1e-3)
        c0 = max((fwhm[-1] - fwhm[-2]) / (B0[-1] - B0[-2]), 1e-6)
        a0 = max((fwhm[0] - c0 * B0[0]) * (B0[0] + b0), 1e-6)
        guess = (a0, b0, c0)
    res = least_squares(
        lambda p: width_model(B0, *p) - fwhm,
        x0=np.asarray(guess, dtype=float),
        bounds=([0.0, 1e-9, 0.0], [np.inf, np.inf, np.inf]),
        method="trf",
        x_scale="jac",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    (A, b, C), rms = _finish_fit(res, 3)
    return FitParams(A, b, C, rms)


def fit_gaussian(x, y, guess=None, max_nfev: int = 2000) -> GaussianParams:
    """Least-squares Gaussian ``a exp(-(x-c)^2 / 2 s^2)`` (no offset)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 points to fit a Gaussian")
    if guess is None:
        i = int(np.argmax(y))
        try:
            s0 = measure_fwhm((x, y), merge_gap=np.inf) / 2.3548
        except ValueError:
            s0 = (x.max() - x.min()) / 4
        guess = (y[i], x[i], s0)
    res = least_squares(
        lambda p: p[0] * np.exp(-0.5 * ((x - p[1]) / p[2]) ** 2) - y,
        x0=np.asarray(guess, dtype=float),
        method="lm",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    (a, c, s), rms = _finish_fit(res, 3)
    return GaussianParams(a, c, abs(s), rms)


@dataclass(frozen=True)
class CombFit:
    """Per-line centers (kHz), heights above ``baseline`` and width factors."""

    centers: np.ndarray
    heights: np.ndarray
    broadening: np.ndarray
    baseline: float
    residual_rms: float

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.centers)


def fit_line_comb(spec, guess_centers, pulse: PulseConfig, window: float = 3.0,
                  max_broadening: float = 10.0, max_nfev: int = 5000) -> CombFit:
    """Simultaneous fit of a comb of partly overlapping lines on a flat baseline.

    Each line is the pulse response with its own center, height and width
    factor ``s`` (the response of a pulse ``s`` times shorter). Fitting all
    lines together keeps a weak line from being pulled by the tails and
    sidelobes of its strong neighbours, which biases a plain argmax. Centers
    are bounded to ``guess +- window``.
    """
    x, y = _xy(spec)
    c0 = np.sort(np.asarray(guess_centers, dtype=float))
    n = c0.size
    base = y.min()
    a0 = np.array([max(y[np.argmin(np.abs(x - c))] - base, 1e-3) for c in c0])

    def model(p):
        c, a, s = p[:n], p[n:2 * n], p[2 * n:3 * n]
        return p[-1] + sum(a[i] * pulse_lineshape(x - c[i], replace(pulse, duration_T=pulse.duration_T / s[i]))
                           for i in range(n))

    span = max(np.ptp(y), 1e-12)
    lo = np.r_[c0 - window, np.zeros(n), np.full(n, 0.2), base - span]
    hi = np.r_[c0 + window, np.full(n, 2 * span), np.full(n, max_broadening), base + span]
    p0 = np.clip(np.r_[c0, a0, np.ones(n), base], lo, hi)
    res = least_squares(lambda p: model(p) - y, p0, bounds=(lo, hi), xtol=1e-12, ftol=1e-12,
                        max_nfev=max_nfev)
    if not res.success:
        raise FitError(f"comb fit did not converge: {res.message}", best=tuple(res.x))
    return CombFit(res.x[:n], res.x[n:2 * n], res.x[2 * n:3 * n], float(res.x[-1]),
                   float(np.sqrt(np.mean(res.fun**2))))


def fit_curve(model: str, x, y, **kw):
    """Fit ``"eq3"`` (width vs DC field) or ``"gaussian"`` to points."""
    if model == "eq3":
        return fit_width_curve(x, y, **kw)
    if model == "gaussian":
        return fit_gaussian(x, y, **kw)
    raise ValueError(f"unknown model {model!r}")


def sweep_b0(cfg: FieldConfig, B0_list_mG, beams: BeamConfig, pulse: PulseConfig,
             n_samples: int = 1000, seed: int = 0, populations=None, grid=None,
             merge_gap: float = 2.0, keep_spectra: bool = False,
             atom: AtomModel = CESIUM, skip_ambiguous: bool = False) -> SweepResult:
    """Collapsed-spectrum FWHM as a function of the DC field.

    Each point reuses ``seed`` so the whole curve shares one set of random
    draws. The width-curve fit needs at least four distinct fields; with
    fewer, ``fit`` and ``argmin_B0`` are None. With ``skip_ambiguous`` a field
    whose spectrum has no single peak is listed in ``ambiguous`` instead of
    raising.
    """
    B0s = sorted({float(b) for b in B0_list_mG})
    if not B0s:
        raise ValueError("empty B0 list")
    if any(b < 0 for b in B0s):
        raise ValueError("B0 values must be >= 0")
    points, spectra, ambiguous = [], [], []
    for B0 in B0s:
        spec = synthesize(replace(cfg, B0_magnitude=B0 * 1e-3), beams, pulse, populations,
                          n_samples, seed, grid, atom)
        try:
            w = measure_fwhm(spec, merge_gap=merge_gap)
        except AmbiguousPeakError as exc:
            if skip_ambiguous:
                ambiguous.append(B0)
                continue
            raise AmbiguousPeakError(str(exc), B0=B0) from exc
        points.append((B0, w))
        if keep_spectra:
            spectra.append(spec)
    fit = argmin = None
    if len(points) >= 4:
        fit = fit_width_curve([p[0] for p in points], [p[1] for p in points])
        argmin = fit.argmin
    return SweepResult(points, fit, argmin, spectra if keep_spectra else None, ambiguous)


def spectral_lightshift_broadening(kappa: float, cfg: FieldConfig, beams: BeamConfig,
                                   pulse: PulseConfig, n_samples: int = 1000, seed: int = 0,
                                   grid=None, populations=None, atom: AtomModel = CESIUM) -> float:
    """Width (kHz) the light shift adds, in quadrature, to the spectrum of ``cfg``."""
    w0 = measure_fwhm(synthesize(cfg, beams.with_kappa(0.0), pulse, populations, n_samples,
                                 seed, grid, atom), merge_gap=np.inf)
    w = measure_fwhm(synthesize(cfg, beams.with_kappa(kappa), pulse, populations, n_samples,
                                seed, grid, atom), merge_gap=np.inf)
    return float(np.sqrt(max(w * w - w0 * w0, 0.0)))


def calibrate_kappa_spectral(beams: BeamConfig, target_khz: float, cfg: FieldConfig,
                             pulse: PulseConfig, n_samples: int = 1000, seed: int = 0,
                             grid=None, populations=None, atom: AtomModel = CESIUM,
                             kappa_start: float = 1e3, xtol: float = 1.0) -> float:
    """``kappa`` for which the light shift broadens the spectrum of ``cfg`` by ``target_khz``.

    The broadening is the quadrature excess of the Monte-Carlo FWHM over the
    same ensemble with light shifts switched off. Common random numbers make
    the excess a deterministic, non-decreasing function of ``kappa``, which is
    bracketed by doubling and then solved with Brent's method.
    """
    from scipy.optimize import brentq

    if target_khz < 0:
        raise ValueError("target broadening must be >= 0")
    if target_khz == 0:
        return 0.0

    def excess(k):
        return spectral_lightshift_broadening(k, cfg, beams, pulse, n_samples, seed, grid,
                                              populations, atom) - target_khz

    lo, hi = 0.0, kappa_start
    for _ in range(40):
        if excess(hi) > 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ValueError("target broadening not reached")
    return float(brentq(excess, lo, hi, xtol=xtol))
