"""Monte-Carlo synthesis of copropagating Raman spectra."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .atom import CESIUM, AtomModel
from .geometry import FieldConfig, as_generator, sample_fields
from .raman import BeamConfig, line_arrays

__all__ = [
    "PulseConfig",
    "Spectrum",
    "default_grid",
    "pulse_lineshape",
    "lay_down_lines",
    "synthesize",
    "lightshift_broadening",
    "calibrate_kappa",
]


@dataclass(frozen=True)
class PulseConfig:
    """Raman pulse. ``duration_T`` in seconds.

    ``shape`` is ``"square"`` (Rabi response of a square pi pulse) or
    ``"gaussian"`` (Gaussian kernel with the same half-width as the square pulse).
    """

    duration_T: float = 500e-6
    shape: str = "square"

    def __post_init__(self):
        if not (self.duration_T > 0 and np.isfinite(self.duration_T)):
            raise ValueError("pulse duration must be positive")
        if self.shape not in ("square", "gaussian"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")


# FWHM of the square pi-pulse Rabi response, in units of 1/T
_SQUARE_FWHM_T = 0.7988


@dataclass
class Spectrum:
    detuning_axis: np.ndarray  # kHz
    transfer: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detuning_axis = np.asarray(self.detuning_axis, dtype=float)
        self.transfer = np.asarray(self.transfer, dtype=float)
        if self.detuning_axis.shape != self.transfer.shape:
            raise ValueError("axis and transfer lengths differ")
        if np.any(np.diff(self.detuning_axis) <= 0):
            raise ValueError("detuning axis must be strictly increasing")


def default_grid(lo: float = -80.0, hi: float = 80.0, step: float = 0.1) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def pulse_lineshape(delta_khz, pulse: PulseConfig):
    """Transfer probability of a resonant-area pi pulse at detuning ``delta_khz``."""
    delta = np.asarray(delta_khz, dtype=float)
    T = pulse.duration_T
    if pulse.shape == "gaussian":
        sigma = _SQUARE_FWHM_T / T / 1e3 / (2 * np.sqrt(2 * np.log(2)))
        return np.exp(-0.5 * (delta / sigma) ** 2)
    omega = np.pi / T
    d = 2 * np.pi * 1e3 * delta
    w2 = omega**2 + d**2
    return omega**2 / w2 * np.sin(np.sqrt(w2) * T / 2) ** 2


def lay_down_lines(grid, positions, intensities, pulse: PulseConfig, chunk: int = 64):
    """Sum over lines (and average over samples) of intensity x lineshape.

    ``positions``/``intensities`` have shape (n_samples, n_lines); lines whose
    intensity is zero are skipped. Returns the sample mean on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    positions = np.atleast_2d(positions)
    intensities = np.atleast_2d(intensities)
    n = positions.shape[0]
    keep = np.any(intensities > 0, axis=0)
    positions, intensities = positions[:, keep], intensities[:, keep]
    acc = np.zeros_like(grid)
    for s in range(0, n, chunk):
        pos = positions[s:s + chunk].ravel()
        amp = intensities[s:s + chunk].ravel()
        acc += amp @ pulse_lineshape(grid[None, :] - pos[:, None], pulse)
    return acc / n


def _check_finite(**kw):
    for k, v in kw.items():
        if not np.all(np.isfinite(np.asarray(v, dtype=float))):
            raise ValueError(f"non-finite parameter {k}")


def synthesize(cfg: FieldConfig, beams: BeamConfig, pulse: PulseConfig, populations=None,
               n_samples: int = 1000, seed: int = 0, grid=None,
               atom: AtomModel = CESIUM, normalize: bool = True) -> Spectrum:
    """Average ``n_samples`` randomized copropagating spectra.

    Each realization draws a field (DC + isotropic Gaussian fluctuation) and
    two Gaussian beam intensities, builds the line table and lays every line
    down with the pulse response. With ``normalize`` the averaged curve is
    scaled so that a fully transferred line would read 1, keeping ``transfer``
    inside [0, 1].
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    _check_finite(B0=cfg.B0_magnitude, dB=cfg.dB_effective, kappa=beams.lightshift_scale_kappa,
                  I0=beams.mean_intensity_I0, T=pulse.duration_T, grid=grid)
    rng = as_generator(seed)
    samples = sample_fields(cfg, n_samples, rng, beams.mean_intensity_I0, beams.intensity_rms)
    pos, inten = line_arrays(samples, beams, populations, atom)
    y = lay_down_lines(grid, pos, inten, pulse)
    if normalize:
        peak_line = inten.max()
        if peak_line > 0:
            y = y / max(peak_line, y.max())
    meta = {
        "field": asdict(cfg),
        "beams": asdict(beams),
        "pulse": asdict(pulse),
        "populations": None if populations is None else [float(p) for p in populations],
        "n_samples": int(n_samples),
        "seed": seed if isinstance(seed, (int, type(None))) else "generator",
    }
    return Spectrum(grid, y, meta)


def lightshift_broadening(beams: BeamConfig, theta0: float, n_samples: int = 4000,
                          seed: int = 12345, populations=None,
                          atom: AtomModel = CESIUM) -> float:
    """Rms line-center displacement (kHz) caused by intensity noise alone.

    The field is held fixed (no fluctuation, direction ``theta0``); for each
    line the displacement from its noiseless position is taken and the rms is
    weighted by line strength.
    """
    cfg = FieldConfig(B0_magnitude=1e-3, theta0=theta0)
    noisy = sample_fields(cfg, n_samples, seed, beams.mean_intensity_I0, beams.intensity_rms)
    quiet = sample_fields(cfg, 1, 0, beams.mean_intensity_I0, 0.0)
    pos, inten = line_arrays(noisy, beams, populations, atom)
    pos0, inten0 = line_arrays(quiet, beams, populations, atom)
    w = inten0[0]
    d2 = np.mean((pos - pos0) ** 2, axis=0)
    return float(np.sqrt(np.sum(w * d2) / np.sum(w)))


def calibrate_kappa(beams: BeamConfig, target_khz: float, theta0: float, **kw) -> float:
    """``kappa`` giving ``target_khz`` of intensity-noise light-shift broadening.

    Light shifts are linear in ``kappa`` so a single probe evaluation fixes it.
    """
    if target_khz < 0:
        raise ValueError("target broadening must be >= 0")
    if target_khz == 0:
        return 0.0
    probe = lightshift_broadening(beams.with_kappa(1.0), theta0, **kw)
    if probe <= 0:
        raise ValueError("intensity noise produces no differential light shift at this geometry")
    return target_khz / probe
