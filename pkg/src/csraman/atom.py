"""Cesium ground-state constants and the linear Zeeman model."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import pi

from .angular import HalfInt

__all__ = [
    "AtomModel",
    "CESIUM",
    "ZeemanSublevel",
    "zeeman_shift",
    "line_position",
    "allowed_pairs",
    "SelectionRuleError",
]


class SelectionRuleError(ValueError):
    """Raised for a (m, m') pair a two-photon transition cannot connect."""


@dataclass(frozen=True)
class AtomModel:
    """Constants of an alkali ground state driven on its D2 line.

    Frequencies are in kHz unless the field name says otherwise;
    Zeeman coefficients are in kHz/G.
    """

    name: str = "Cs133"
    hyperfine_splitting_ghz: float = 9.192631770
    zeeman_coeff_F3: float = 350.0
    zeeman_coeff_F4: float = -351.0
    recoil_velocity: float = 3.5e-3  # m/s
    recoil_doppler: float = 8.4  # kHz, 2 k v_r / 2pi
    wavelength: float = 852e-9  # m
    excited_linewidth: float = 2 * pi * 5.3e6  # rad/s
    excited_J: HalfInt = HalfInt(3)
    ground_J: HalfInt = HalfInt(1)
    nuclear_I: HalfInt = HalfInt(7)
    mass: float = 2.20695e-25  # kg

    def __post_init__(self):
        if not (self.zeeman_coeff_F3 > 0 > self.zeeman_coeff_F4):
            raise ValueError("expected Z3 > 0 > Z4")
        if self.recoil_velocity <= 0 or self.wavelength <= 0 or self.mass <= 0:
            raise ValueError("recoil velocity, wavelength and mass must be positive")

    @property
    def lower_F(self) -> int:
        return int(Fraction(self.nuclear_I.twice_value - self.ground_J.twice_value, 2))

    @property
    def upper_F(self) -> int:
        return int(Fraction(self.nuclear_I.twice_value + self.ground_J.twice_value, 2))

    def zeeman_coeff(self, F: int) -> float:
        if F == self.lower_F:
            return self.zeeman_coeff_F3
        if F == self.upper_F:
            return self.zeeman_coeff_F4
        raise ValueError(f"F={F} is not a ground hyperfine level of {self.name}")

    @property
    def wavenumber(self) -> float:
        return 2 * pi / self.wavelength

    def doppler_per_velocity(self) -> float:
        """Two-photon Doppler shift per unit velocity, kHz per (m/s)."""
        return self.recoil_doppler / self.recoil_velocity

    def excited_F_range(self, F: int) -> tuple[int, ...]:
        """Excited hyperfine levels reachable by one dipole photon from F."""
        lo = abs(self.nuclear_I.twice_value - self.excited_J.twice_value) // 2
        hi = (self.nuclear_I.twice_value + self.excited_J.twice_value) // 2
        return tuple(Fp for Fp in range(lo, hi + 1) if abs(Fp - F) <= 1)


CESIUM = AtomModel()


@dataclass(frozen=True)
class ZeemanSublevel:
    F: int
    m: int

    def __post_init__(self):
        if self.F not in (3, 4):
            raise ValueError(f"F must be 3 or 4, got {self.F}")
        if abs(self.m) > self.F:
            raise ValueError(f"|m|={abs(self.m)} exceeds F={self.F}")


def zeeman_shift(level: ZeemanSublevel, B: float, atom: AtomModel = CESIUM) -> float:
    """Linear Zeeman shift ``Z_F * B * m`` in kHz, ``B`` in gauss."""
    if B < 0:
        raise ValueError("field magnitude must be non-negative")
    return atom.zeeman_coeff(level.F) * B * level.m


def line_position(m: int, m_prime: int, B, atom: AtomModel = CESIUM):
    """Position in kHz of the (3, m) -> (4, m') Raman line relative to line center.

    Uses the displayed-spectrum sign convention ``[350 (m+m') + m'] B``,
    which equals ``Z3 m B - Z4 m' B``. ``B`` (gauss) may be an array.
    """
    if abs(m) > atom.lower_F or abs(m_prime) > atom.upper_F:
        raise ValueError(f"sublevel out of range: m={m}, m'={m_prime}")
    if abs(m - m_prime) > 2:
        raise SelectionRuleError(f"|m - m'| = {abs(m - m_prime)} > 2")
    return (atom.zeeman_coeff_F3 * m - atom.zeeman_coeff_F4 * m_prime) * B


def allowed_pairs(atom: AtomModel = CESIUM) -> list[tuple[int, int]]:
    """All (m, m') with |m - m'| <= 2, ordered by m then m'."""
    lo, hi = atom.lower_F, atom.upper_F
    return [
        (m, mp)
        for m in range(-lo, lo + 1)
        for mp in range(-hi, hi + 1)
        if abs(m - mp) <= 2
    ]
