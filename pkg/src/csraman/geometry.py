"""Field composition, quantization-axis angle and beam polarization components.

The laser wavevector ``k`` is the laboratory ``z`` axis. The DC field sits in
the ``x-z`` plane at angle ``theta0`` from ``k``; the quantization axis of each
Monte-Carlo draw follows the total field, so only the angle between the total
field and ``k`` enters the polarization decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FieldConfig",
    "FieldSample",
    "FieldSamples",
    "PolarizationComponents",
    "decompose_polarization",
    "polarization_array",
    "cartesian_polarization",
    "sample_field",
    "sample_fields",
    "draw_intensities",
    "as_generator",
]


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class FieldConfig:
    """DC field plus Gaussian fluctuation, all magnitudes in gauss.

    ``dB_stray_rms`` is field-independent; ``dB_relative`` is the rms
    fluctuation of the DC field expressed as a fraction of ``B0_magnitude``.
    The two add in quadrature.
    """

    B0_magnitude: float
    theta0: float = 0.0
    dB_stray_rms: float = 0.0
    dB_relative: float = 0.0

    def __post_init__(self):
        for name in ("B0_magnitude", "dB_stray_rms", "dB_relative"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not 0.0 <= self.theta0 <= np.pi:
            raise ValueError(f"theta0 must lie in [0, pi], got {self.theta0}")

    @property
    def dB_effective(self) -> float:
        return float(np.hypot(self.dB_stray_rms, self.dB_relative * self.B0_magnitude))

    @property
    def B0_vector(self) -> np.ndarray:
        return self.B0_magnitude * np.array([np.sin(self.theta0), 0.0, np.cos(self.theta0)])


@dataclass(frozen=True)
class FieldSample:
    B_vector: np.ndarray
    B_magnitude: float
    theta: float
    I1: float = 1.0
    I2: float = 1.0


@dataclass
class FieldSamples:
    """A batch of draws, one row per Monte-Carlo realization."""

    B_vector: np.ndarray  # (n, 3)
    B_magnitude: np.ndarray  # (n,)
    theta: np.ndarray  # (n,)
    I1: np.ndarray = field(default=None)
    I2: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.theta)
        if self.I1 is None:
            self.I1 = np.ones(n)
        if self.I2 is None:
            self.I2 = np.ones(n)

    def __len__(self):
        return len(self.theta)

    def __getitem__(self, i) -> FieldSample:
        return FieldSample(
            self.B_vector[i].copy(),
            float(self.B_magnitude[i]),
            float(self.theta[i]),
            float(self.I1[i]),
            float(self.I2[i]),
        )

    @classmethod
    def from_samples(cls, samples) -> "FieldSamples":
        samples = list(samples)
        return cls(
            np.array([s.B_vector for s in samples], dtype=float).reshape(-1, 3),
            np.array([s.B_magnitude for s in samples], dtype=float),
            np.array([s.theta for s in samples], dtype=float),
            np.array([s.I1 for s in samples], dtype=float),
            np.array([s.I2 for s in samples], dtype=float),
        )


@dataclass(frozen=True)
class PolarizationComponents:
    eps_minus: complex
    eps_zero: complex
    eps_plus: complex

    def as_array(self) -> np.ndarray:
        """Components ordered p = -1, 0, +1."""
        return np.array([self.eps_minus, self.eps_zero, self.eps_plus], dtype=complex)


def polarization_array(theta, phi=0.0, beam: int = 1) -> np.ndarray:
    """Spherical components (p = -1, 0, +1) along the last axis.

    Beam 2 is polarized orthogonally to beam 1, i.e. its polarization angle
    is ``phi + pi/2``.
    """
    if beam not in (1, 2):
        raise ValueError("beam must be 1 or 2")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if beam == 2:
        phi = phi + np.pi / 2
    c, s = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty(np.broadcast(theta, phi).shape + (3,), dtype=complex)
    out[..., 0] = (-c * ct + 1j * s) / np.sqrt(2)
    out[..., 1] = c * st
    out[..., 2] = (c * ct + 1j * s) / np.sqrt(2)
    return out


def decompose_polarization(theta: float, phi: float = 0.0, beam: int = 1) -> PolarizationComponents:
    """Irreducible components of a beam polarization w.r.t. the field axis.

    ``theta`` is the angle between the field and the wavevector, ``phi`` the
    angle of beam 1's polarization out of the plane containing both.
    """
    e = polarization_array(theta, phi, beam)
    return PolarizationComponents(complex(e[0]), complex(e[1]), complex(e[2]))


def cartesian_polarization(eps) -> np.ndarray:
    """Cartesian (x, y, z) vector of spherical components ordered (-1, 0, +1)."""
    eps = np.asarray(eps, dtype=complex)
    em, e0, ep = eps[..., 0], eps[..., 1], eps[..., 2]
    return np.stack([(em - ep) / np.sqrt(2), 1j * (em + ep) / np.sqrt(2), e0], axis=-1)


def _field_angles(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mag = np.sqrt(np.einsum("...i,...i->...", B, B))
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_t = np.where(mag > 0, B[..., 2] / np.where(mag > 0, mag, 1.0), 1.0)
    theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
    return mag, theta


def draw_intensities(rng: np.random.Generator, n: int, mean: float, rms: float) -> np.ndarray:
    """Gaussian intensities, negative draws redrawn."""
    if rms == 0:
        return np.full(n, float(mean))
    out = rng.normal(mean, rms, n)
    bad = out < 0
    while bad.any():
        out[bad] = rng.normal(mean, rms, int(bad.sum()))
        bad = out < 0
    return out


def sample_fields(cfg: FieldConfig, n: int, seed=None, intensity_mean: float = 1.0,
                  intensity_rms: float = 0.0) -> FieldSamples:
    """Draw ``n`` field realizations (and beam intensities) at once.

    The fluctuation is an isotropic Gaussian vector whose rms modulus is
    ``cfg.dB_effective`` (per-component sigma = dB_effective / sqrt(3)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    sigma = cfg.dB_effective / np.sqrt(3.0)
    dB = rng.normal(0.0, 1.0, (n, 3)) * sigma
    B = cfg.B0_vector[None, :] + dB
    mag, theta = _field_angles(B)
    if sigma == 0.0:
        mag = np.full(n, cfg.B0_magnitude)
        theta = np.full(n, cfg.theta0)
    I1 = draw_intensities(rng, n, intensity_mean, intensity_rms)
    I2 = draw_intensities(rng, n, intensity_mean, intensity_rms)
    return FieldSamples(B, mag, theta, I1, I2)


def sample_field(cfg: FieldConfig, seed=None, intensity_mean: float = 1.0,
                 intensity_rms: float = 0.0) -> FieldSample:
    return sample_fields(cfg, 1, seed, intensity_mean, intensity_rms)[0]
