"""Wigner 3j and 6j symbols with exact integer arithmetic.

Angular momenta are carried as doubled integers (``HalfInt``) so that
triangle and parity tests are exact. The Racah sums are accumulated as
``fractions.Fraction`` and converted to float once, at the very end, which
keeps the alternating sums free of cancellation error.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt
from numbers import Real

__all__ = [
    "HalfInt",
    "half",
    "triangle",
    "wigner3j",
    "wigner6j",
    "wigner3j_exact",
    "wigner6j_exact",
]


@dataclass(frozen=True, order=True)
class HalfInt:
    """An integer or half-integer stored as ``2 * value``."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int):
            raise TypeError("twice_value must be an int")

    @classmethod
    def of(cls, x) -> "HalfInt":
        return cls(_twice(x))

    @property
    def value(self) -> float:
        return self.twice_value / 2

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __neg__(self):
        return HalfInt(-self.twice_value)

    def __add__(self, other):
        return HalfInt(self.twice_value + _twice(other))

    __radd__ = __add__

    def __sub__(self, other):
        return HalfInt(self.twice_value - _twice(other))

    def __rsub__(self, other):
        return HalfInt(_twice(other) - self.twice_value)

    def __float__(self):
        return self.value

    def __repr__(self):
        if self.is_integer:
            return f"HalfInt({self.twice_value // 2})"
        return f"HalfInt({self.twice_value}/2)"


def _twice(x) -> int:
    if isinstance(x, HalfInt):
        return x.twice_value
    if isinstance(x, bool):
        raise TypeError("bool is not an angular momentum")
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, Fraction):
        t = 2 * x
        if t.denominator != 1:
            raise ValueError(f"{x} is not a multiple of 1/2")
        return int(t)
    if isinstance(x, Real):
        t = 2 * float(x)
        if t != round(t):
            raise ValueError(f"{x} is not a multiple of 1/2")
        return int(round(t))
    raise TypeError(f"cannot interpret {x!r} as a half-integer")


def half(x) -> HalfInt:
    """Coerce ``x`` (int, Fraction, float or HalfInt) to a HalfInt."""
    return HalfInt(_twice(x))


def _triangle2(a: int, b: int, c: int) -> bool:
    # doubled arguments
    if a < 0 or b < 0 or c < 0:
        return False
    if (a + b + c) % 2:
        return False
    return abs(a - b) <= c <= a + b


def triangle(a, b, c) -> bool:
    """True if (a, b, c) can couple: |a-b| <= c <= a+b with integer sum."""
    return _triangle2(_twice(a), _twice(b), _twice(c))


def _delta2(a: int, b: int, c: int) -> Fraction:
    # triangle coefficient from doubled arguments
    return Fraction(
        factorial((a + b - c) // 2) * factorial((a - b + c) // 2) * factorial((-a + b + c) // 2),
        factorial((a + b + c) // 2 + 1),
    )


def _finish(total: Fraction, radicand: Fraction) -> float:
    """Return ``total * sqrt(radicand)`` with a single rounding step."""
    if total == 0:
        return 0.0
    mag = sqrt(float(total * total * radicand))
    return mag if total > 0 else -mag


@lru_cache(maxsize=None)
def _w3j2(j1, j2, j3, m1, m2, m3) -> tuple[Fraction, Fraction]:
    """(sum, radicand) of the Racah form, doubled arguments."""
    zero = (Fraction(0), Fraction(0))
    if m1 + m2 + m3 != 0:
        return zero
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if j < 0 or abs(m) > j or (j - m) % 2:
            return zero
    if not _triangle2(j1, j2, j3):
        return zero

    radicand = _delta2(j1, j2, j3)
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        radicand *= factorial((j + m) // 2) * factorial((j - m) // 2)

    # integer-valued offsets of the summation index
    a1 = (j3 - j2 + m1) // 2
    a2 = (j3 - j1 - m2) // 2
    b1 = (j1 + j2 - j3) // 2
    b2 = (j1 - m1) // 2
    b3 = (j2 + m2) // 2
    kmin = max(0, -a1, -a2)
    kmax = min(b1, b2, b3)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            factorial(k)
            * factorial(a1 + k)
            * factorial(a2 + k)
            * factorial(b1 - k)
            * factorial(b2 - k)
            * factorial(b3 - k)
        )
        total += Fraction(-1 if k % 2 else 1, den)
    if ((j1 - j2 - m3) // 2) % 2:
        total = -total
    return total, radicand


@lru_cache(maxsize=None)
def _w6j2(j1, j2, j3, j4, j5, j6) -> tuple[Fraction, Fraction]:
    zero = (Fraction(0), Fraction(0))
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle2(*t) for t in triads):
        return zero
    radicand = Fraction(1)
    for t in triads:
        radicand *= _delta2(*t)

    a = [sum(t) // 2 for t in triads]
    b = [(j1 + j2 + j4 + j5) // 2, (j2 + j3 + j5 + j6) // 2, (j3 + j1 + j6 + j4) // 2]
    total = Fraction(0)
    for t in range(max(a), min(b) + 1):
        den = 1
        for ai in a:
            den *= factorial(t - ai)
        for bi in b:
            den *= factorial(bi - t)
        total += Fraction((-1) ** t * factorial(t + 1), den)
    return total, radicand


def wigner3j_exact(j1, j2, j3, m1, m2, m3) -> tuple[Fraction, Fraction]:
    """Exact 3j symbol as ``(s, r)`` with value ``s * sqrt(r)``."""
    return _w3j2(*(_twice(x) for x in (j1, j2, j3, m1, m2, m3)))


def wigner6j_exact(j1, j2, j3, j4, j5, j6) -> tuple[Fraction, Fraction]:
    """Exact 6j symbol as ``(s, r)`` with value ``s * sqrt(r)``."""
    return _w6j2(*(_twice(x) for x in (j1, j2, j3, j4, j5, j6)))


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Arguments may be ints, half-integer floats, Fractions or HalfInt.
    Any violated selection rule (m sum, triangle, |m| > j, parity)
    gives 0.0 rather than an exception.

    >>> round(wigner3j(1, 1, 0, 0, 0, 0), 6)
    -0.57735
    """
    return _finish(*wigner3j_exact(j1, j2, j3, m1, m2, m3))


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol ``{j1 j2 j3; j4 j5 j6}`` (0.0 for a violated triad).

    >>> round(wigner6j(1, 1, 1, 1, 1, 1), 6)
    0.166667
    """
    return _finish(*wigner6j_exact(j1, j2, j3, j4, j5, j6))
