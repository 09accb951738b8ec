"""Counter-propagating (velocity-selective) spectra and time-of-flight-free thermometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import k as k_B
from scipy.integrate import trapezoid
from scipy.optimize import least_squares

from .atom import CESIUM, AtomModel
from .spectrum import PulseConfig, Spectrum, pulse_lineshape

__all__ = [
    "VelocityDistribution",
    "counterprop_detuning",
    "velocity_spectrum",
    "temperature_from_fwhm",
    "fwhm_from_temperature",
    "fit_temperature",
    "default_velocity_grid",
]

_FWHM_PER_SIGMA = 2 * np.sqrt(2 * np.log(2))


@dataclass(frozen=True)
class VelocityDistribution:
    """1-D Maxwell-Boltzmann distribution along the beam axis, temperature in uK."""

    temperature_uK: float
    mean_velocity: float = 0.0  # m/s
    kind: str = "maxwell-boltzmann-1d"

    def __post_init__(self):
        if not self.temperature_uK > 0:
            raise ValueError("temperature must be positive")
        if self.kind != "maxwell-boltzmann-1d":
            raise ValueError(f"unsupported distribution {self.kind!r}")

    def sigma_v(self, atom: AtomModel = CESIUM) -> float:
        return float(np.sqrt(k_B * self.temperature_uK * 1e-6 / atom.mass))

    def pdf(self, v, atom: AtomModel = CESIUM):
        s = self.sigma_v(atom)
        v = np.asarray(v, dtype=float)
        return np.exp(-0.5 * ((v - self.mean_velocity) / s) ** 2) / (s * np.sqrt(2 * np.pi))


def counterprop_detuning(v, delta_R, atom: AtomModel = CESIUM):
    """Detuning (kHz) seen by an atom of velocity ``v`` (m/s): ``delta_R + 2k(v + v_r)``."""
    return np.asarray(delta_R, dtype=float) + atom.doppler_per_velocity() * (np.asarray(v, dtype=float) + atom.recoil_velocity)


def default_velocity_grid(lo: float = -300.0, hi: float = 300.0, step: float = 0.5) -> np.ndarray:
    return lo + step * np.arange(int(round((hi - lo) / step)) + 1)


def velocity_spectrum(dist: VelocityDistribution, pulse: PulseConfig, atom: AtomModel = CESIUM,
                      grid=None, n_nodes: int = 2001) -> Spectrum:
    """Transferred fraction vs Raman detuning for a thermal cloud.

    ``transfer(d) = integral f(v) P(d + 2k(v + v_r)) dv``, evaluated with the
    trapezoid rule on a velocity mesh spanning +-8 sigma_v and fine enough to
    resolve both the distribution and the pulse response.
    """
    grid = default_velocity_grid() if grid is None else np.asarray(grid, dtype=float)
    s = dist.sigma_v(atom)
    D = atom.doppler_per_velocity()
    pulse_width_v = 0.8 / pulse.duration_T / 1e3 / D
    dv = min(s, pulse_width_v) / 20
    n = max(n_nodes, int(np.ceil(16 * s / dv)) + 1)
    v = dist.mean_velocity + np.linspace(-8 * s, 8 * s, n)
    w = dist.pdf(v, atom)
    P = pulse_lineshape(counterprop_detuning(v[None, :], grid[:, None], atom), pulse)
    transfer = trapezoid(w[None, :] * P, v, axis=1)
    meta = {
        "temperature_uK": dist.temperature_uK,
        "mean_velocity": dist.mean_velocity,
        "pulse_duration_s": pulse.duration_T,
        "pulse_shape": pulse.shape,
    }
    return Spectrum(grid, np.clip(transfer, 0.0, 1.0), meta)


def temperature_from_fwhm(fwhm_khz: float, atom: AtomModel = CESIUM) -> float:
    """Temperature (uK) of a Gaussian velocity profile with this spectral FWHM.

    Pulse broadening is not removed; see :func:`fit_temperature` for that.
    """
    if not fwhm_khz > 0:
        raise ValueError("FWHM must be positive")
    fwhm_v = fwhm_khz / atom.doppler_per_velocity()
    return float(atom.mass * fwhm_v**2 / (8 * np.log(2) * k_B) * 1e6)


def fwhm_from_temperature(temperature_uK: float, atom: AtomModel = CESIUM) -> float:
    """Doppler FWHM (kHz) of a thermal cloud, no pulse broadening."""
    sigma = VelocityDistribution(temperature_uK).sigma_v(atom)
    return float(_FWHM_PER_SIGMA * sigma * atom.doppler_per_velocity())


def fit_temperature(spec: Spectrum, pulse: PulseConfig, atom: AtomModel = CESIUM,
                    guess_uK: float | None = None) -> dict:
    """Deconvolving thermometry: fit the full forward model to a spectrum.

    Free parameters are temperature, mean velocity and an amplitude scale.
    Returns a dict with ``temperature_uK``, ``mean_velocity`` and ``scale``.
    """
    x, y = spec.detuning_axis, spec.transfer
    if guess_uK is None:
        from .analysis import fit_gaussian

        g = fit_gaussian(x, y)
        guess_uK = max(temperature_from_fwhm(g.fwhm, atom) / 2, 1e-3)
        v0 = -g.center / atom.doppler_per_velocity() - atom.recoil_velocity
    else:
        v0 = 0.0

    def model(p):
        T, v_mean, scale = np.exp(p[0]), p[1], p[2]
        sp = velocity_spectrum(VelocityDistribution(T, v_mean), pulse, atom, x)
        return scale * sp.transfer

    res = least_squares(lambda p: model(p) - y, x0=[np.log(guess_uK), v0, 1.0],
                        x_scale=[1.0, 1e-3, 1.0], xtol=1e-12, ftol=1e-12)
    return {
        "temperature_uK": float(np.exp(res.x[0])),
        "mean_velocity": float(res.x[1]),
        "scale": float(res.x[2]),
        "residual_rms": float(np.sqrt(np.mean(res.fun**2))),
    }
