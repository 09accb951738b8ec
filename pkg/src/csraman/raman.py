"""Light shifts and two-photon Raman amplitudes between the Cs ground levels.

All dipole matrix elements are written with the Wigner-Eckart theorem in the
hyperfine basis; the electronic reduced element and the field amplitudes are
folded into one calibration constant ``kappa``. The optical detuning is a
single number shared by every excited sublevel.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from math import sqrt

import numpy as np

from .angular import HalfInt, wigner3j, wigner6j
from .atom import CESIUM, AtomModel, ZeemanSublevel, allowed_pairs
from .geometry import FieldSample, FieldSamples, PolarizationComponents, polarization_array

__all__ = [
    "BeamConfig",
    "LightShiftTable",
    "LineTable",
    "dipole_element",
    "light_shift",
    "light_shift_table",
    "light_shifts",
    "raman_amplitude",
    "raman_amplitude_reduced",
    "raman_amplitudes",
    "build_line_table",
    "line_arrays",
    "PAIR_MASK",
]

POLS = (-1, 0, 1)


@dataclass(frozen=True)
class BeamConfig:
    """Raman beam parameters.

    ``kappa`` converts (intensity / detuning in GHz) into a light shift in kHz
    after the angular factors are applied; it has no absolute calibration and
    is normally fixed with :func:`csraman.spectrum.calibrate_kappa`.
    """

    mean_intensity_I0: float = 1.0
    intensity_rms_fraction: float = 0.0
    optical_detuning_ghz: float = 200.0
    lightshift_scale_kappa: float = 1.0

    def __post_init__(self):
        if not self.optical_detuning_ghz > 1.0:
            raise ValueError("optical detuning must exceed 1 GHz")
        if self.lightshift_scale_kappa < 0 or not np.isfinite(self.lightshift_scale_kappa):
            raise ValueError("kappa must be finite and >= 0")
        if self.mean_intensity_I0 < 0 or self.intensity_rms_fraction < 0:
            raise ValueError("intensities must be non-negative")

    @property
    def intensity_rms(self) -> float:
        return self.intensity_rms_fraction * self.mean_intensity_I0

    def with_kappa(self, kappa: float) -> "BeamConfig":
        return replace(self, lightshift_scale_kappa=kappa)


@dataclass(frozen=True)
class LightShiftTable:
    """Total light shift (kHz) per ground sublevel, keyed by (F, m)."""

    shift: dict

    def __getitem__(self, key):
        return self.shift[key]

    def values(self) -> np.ndarray:
        return np.array(list(self.shift.values()))


@dataclass(frozen=True)
class Line:
    m: int
    m_prime: int
    label: int
    position_khz: float
    relative_intensity: float


@dataclass(frozen=True)
class LineTable:
    lines: tuple

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    @property
    def positions(self) -> np.ndarray:
        return np.array([l.position_khz for l in self.lines])

    @property
    def intensities(self) -> np.ndarray:
        return np.array([l.relative_intensity for l in self.lines])

    @property
    def labels(self) -> np.ndarray:
        return np.array([l.label for l in self.lines])


def _phase(twice_exponent: int) -> int:
    if twice_exponent % 2:
        raise ValueError("non-integer phase exponent")
    return -1 if (twice_exponent // 2) % 2 else 1


@lru_cache(maxsize=None)
def dipole_element(Fa: int, ma: int, Fb: int, mb: int, p: int,
                   Ja: HalfInt, Jb: HalfInt, I: HalfInt) -> float:
    """``<Ja I Fa ma | r_p | Jb I Fb mb>`` in units of ``<Ja||r||Jb>``."""
    w3 = wigner3j(Fa, 1, Fb, -ma, p, mb)
    if w3 == 0.0:
        return 0.0
    w6 = wigner6j(Ja, Jb, 1, Fb, Fa, I)
    ph = _phase(2 * (Fa - ma)) * _phase(2 * Fb + Ja.twice_value + 2 + I.twice_value)
    return ph * sqrt((2 * Fa + 1) * (2 * Fb + 1)) * w6 * w3


@lru_cache(maxsize=None)
def _lightshift_coeffs(F: int, atom: AtomModel) -> np.ndarray:
    """c[m, F', p] = sqrt(2F'+1) {1/2 J 1; F' F I} (F' 1 F; m-p p -m)."""
    J, I, Jg = atom.excited_J, atom.nuclear_I, atom.ground_J
    Fps = atom.excited_F_range(F)
    out = np.zeros((2 * F + 1, len(Fps), 3))
    for i, m in enumerate(range(-F, F + 1)):
        for k, Fp in enumerate(Fps):
            w6 = wigner6j(Jg, J, 1, Fp, F, I)
            for j, p in enumerate(POLS):
                out[i, k, j] = sqrt(2 * Fp + 1) * w6 * wigner3j(Fp, 1, F, m - p, p, -m)
    out.setflags(write=False)
    return out


def _lightshift_prefactor(F: int, atom: AtomModel) -> float:
    return sqrt(2.0) * (2 * F + 1) * (atom.excited_J.twice_value + 1)


def light_shifts(F: int, eps: np.ndarray, intensity, beams: BeamConfig,
                 atom: AtomModel = CESIUM) -> np.ndarray:
    """Light shift of every ``m`` of level ``F`` from one beam, in kHz.

    ``eps`` has shape (..., 3); ``intensity`` broadcasts against ``eps[..., 0]``.
    Returns shape (..., 2F+1).
    """
    c = _lightshift_coeffs(F, atom)
    amp = np.einsum("...p,mfp->...mf", eps, c)
    s = np.sum(np.abs(amp) ** 2, axis=-1)
    scale = beams.lightshift_scale_kappa * _lightshift_prefactor(F, atom) / beams.optical_detuning_ghz
    return scale * np.asarray(intensity, dtype=float)[..., None] * s


def light_shift(level: ZeemanSublevel, pol: PolarizationComponents, intensity: float,
                beams: BeamConfig, atom: AtomModel = CESIUM) -> float:
    """Light shift of one sublevel from one beam, in kHz."""
    vals = light_shifts(level.F, pol.as_array(), intensity, beams, atom)
    return float(vals[level.m + level.F])


def light_shift_table(sample: FieldSample, beams: BeamConfig, atom: AtomModel = CESIUM,
                      phi: float = 0.0) -> LightShiftTable:
    """Summed two-beam light shift for all 16 ground sublevels."""
    e1 = polarization_array(sample.theta, phi, 1)
    e2 = polarization_array(sample.theta, phi, 2)
    shift = {}
    for F in (atom.lower_F, atom.upper_F):
        tot = light_shifts(F, e1, sample.I1, beams, atom) + light_shifts(F, e2, sample.I2, beams, atom)
        for i, m in enumerate(range(-F, F + 1)):
            shift[(F, m)] = float(tot[i])
    return LightShiftTable(shift)


@lru_cache(maxsize=None)
def _amplitude_tensor(atom: AtomModel) -> np.ndarray:
    """G[m1, m2, p, p'] summing both dipole legs over all excited F'.

    First leg ``<F1 m1| r_p |F' m1-p>``, second ``<F' m1-p| r_p' |F2 m1-p-p'>``.
    """
    F1, F2 = atom.lower_F, atom.upper_F
    Jg, Je, I = atom.ground_J, atom.excited_J, atom.nuclear_I
    Fps = sorted(set(atom.excited_F_range(F1)) & set(atom.excited_F_range(F2)))
    G = np.zeros((2 * F1 + 1, 2 * F2 + 1, 3, 3))
    for a, m1 in enumerate(range(-F1, F1 + 1)):
        for i, p in enumerate(POLS):
            mi = m1 - p
            for j, pp in enumerate(POLS):
                m2 = mi - pp
                if abs(m2) > F2:
                    continue
                acc = 0.0
                for Fp in Fps:
                    if abs(mi) > Fp:
                        continue
                    acc += (dipole_element(F1, m1, Fp, mi, p, Jg, Je, I)
                            * dipole_element(Fp, mi, F2, m2, pp, Je, Jg, I))
                G[a, m2 + F2, i, j] = acc
    G.setflags(write=False)
    return G


def raman_amplitudes(eps1: np.ndarray, eps2: np.ndarray, atom: AtomModel = CESIUM) -> np.ndarray:
    """Complex amplitudes A[..., m1+3, m2+4] for every F=3 -> F=4 pair."""
    G = _amplitude_tensor(atom)
    return np.einsum("...p,...q,abpq->...ab", eps1, eps2, G)


def raman_amplitude(initial: ZeemanSublevel, final: ZeemanSublevel,
                    pol1: PolarizationComponents, pol2: PolarizationComponents,
                    atom: AtomModel = CESIUM) -> complex:
    """Two-photon amplitude (3, m1) -> (4, m2), reduced element set to 1.

    Pairs beyond the two-photon selection rule give 0.
    """
    if initial.F != atom.lower_F or final.F != atom.upper_F:
        raise ValueError("amplitude is defined from the lower to the upper level")
    A = raman_amplitudes(pol1.as_array(), pol2.as_array(), atom)
    return complex(A[initial.m + initial.F, final.m + final.F])


def raman_amplitude_reduced(initial: ZeemanSublevel, final: ZeemanSublevel,
                            pol1: PolarizationComponents, pol2: PolarizationComponents,
                            atom: AtomModel = CESIUM) -> complex:
    """Closed-form amplitude with both legs reduced to 6j products.

    Equal to :func:`raman_amplitude` up to a constant factor. The phase of each
    term carries ``(-1)^p`` of the first leg's spherical index.
    """
    F1, F2, m1, m2 = initial.F, final.F, initial.m, final.m
    Jg, J, I = atom.ground_J, atom.excited_J, atom.nuclear_I
    e1, e2 = pol1.as_array(), pol2.as_array()
    Fps = sorted(set(atom.excited_F_range(F1)) & set(atom.excited_F_range(F2)))
    pref = sqrt(2 * (2 * F1 + 1) * (2 * F2 + 1) * (J.twice_value + 1)) * wigner6j(0, 1, 1, J, Jg, Jg) ** 2
    total = 0j
    for i, p in enumerate(POLS):
        for j, pp in enumerate(POLS):
            if m1 - p - pp != m2:
                continue
            ph = _phase(2 * F1 + 2 * F2 - 2 * p - J.twice_value + 1)
            inner = 0.0
            for Fp in Fps:
                inner += ((2 * Fp + 1) * wigner6j(Jg, J, 1, Fp, F1, I) * wigner6j(J, Jg, 1, F2, Fp, I)
                          * wigner3j(Fp, 1, F1, m1 - p, p, -m1)
                          * wigner3j(F2, 1, Fp, m1 - p - pp, pp, -(m1 - p)))
            total += ph * e1[i] * e2[j] * inner
    return pref * total


_pairs = allowed_pairs(CESIUM)
PAIR_MASK = np.zeros((7, 9), dtype=bool)
for _m, _mp in _pairs:
    PAIR_MASK[_m + 3, _mp + 4] = True
_M = np.arange(-3, 4)[:, None] * np.ones((1, 9), dtype=int)
_MP = np.ones((7, 1), dtype=int) * np.arange(-4, 5)[None, :]


def line_arrays(samples: FieldSamples, beams: BeamConfig, populations=None,
                atom: AtomModel = CESIUM, phi: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized line positions and intensities for a batch of samples.

    Returns ``(positions, intensities)`` of shape (n, n_lines), lines ordered
    as :func:`csraman.atom.allowed_pairs`.
    """
    pops = _normalize_populations(populations, atom)
    e1 = polarization_array(samples.theta, phi, 1)
    e2 = polarization_array(samples.theta, phi, 2)
    F3, F4 = atom.lower_F, atom.upper_F
    L3 = light_shifts(F3, e1, samples.I1, beams, atom) + light_shifts(F3, e2, samples.I2, beams, atom)
    L4 = light_shifts(F4, e1, samples.I1, beams, atom) + light_shifts(F4, e2, samples.I2, beams, atom)
    zeeman = (atom.zeeman_coeff_F3 * _M - atom.zeeman_coeff_F4 * _MP)[None] * samples.B_magnitude[:, None, None]
    pos = zeeman + L4[:, None, :] - L3[:, :, None]
    A = raman_amplitudes(e1, e2, atom)
    inten = pops[None, :, None] * np.abs(A) ** 2
    return pos[:, PAIR_MASK], inten[:, PAIR_MASK]


def _normalize_populations(populations, atom: AtomModel) -> np.ndarray:
    n = 2 * atom.lower_F + 1
    if populations is None:
        return np.full(n, 1.0 / n)
    p = np.asarray(populations, dtype=float)
    if p.shape != (n,) or np.any(p < 0) or not np.isfinite(p).all() or p.sum() <= 0:
        raise ValueError(f"populations must be {n} non-negative weights")
    return p / p.sum()


def build_line_table(sample: FieldSample, beams: BeamConfig, populations=None,
                     atom: AtomModel = CESIUM, phi: float = 0.0) -> LineTable:
    """Positions (Zeeman + differential light shift) and strengths of every line."""
    batch = FieldSamples.from_samples([sample])
    pos, inten = line_arrays(batch, beams, populations, atom, phi)
    lines = tuple(
        Line(m, mp, m + mp, float(pos[0, k]), float(inten[0, k]))
        for k, (m, mp) in enumerate(allowed_pairs(atom))
    )
    return LineTable(lines)
