import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from csraman.angular import HalfInt, half, triangle, wigner3j, wigner3j_exact, wigner6j

HALVES = [k / 2 for k in range(0, 11)]  # 0 .. 5


def _ms(j):
    return np.arange(-j, j + 0.5, 1.0)


def _triads(jmax=5.0):
    for j1, j2 in itertools.product([k / 2 for k in range(int(2 * jmax) + 1)], repeat=2):
        for j3 in np.arange(abs(j1 - j2), min(j1 + j2, jmax) + 0.5, 1.0):
            yield j1, j2, float(j3)


# --- exact values --------------------------------------------------------


def test_known_3j_values():
    assert wigner3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / np.sqrt(3), abs=1e-15)
    assert wigner3j(1, 1, 1, 0, 0, 0) == 0.0
    assert wigner3j(3, 1, 5, 0, 0, 0) == 0.0


def test_known_6j_values():
    assert wigner6j(1, 1, 1, 1, 1, 1) == pytest.approx(1 / 6, abs=1e-15)
    assert wigner6j(0.5, 0.5, 1, 0.5, 0.5, 0) == pytest.approx(oracles.sixj(0.5, 0.5, 1, 0.5, 0.5, 0), abs=1e-14)
    assert wigner6j(0, 1, 2, 1, 1, 1) == 0.0


def test_exact_square_is_rational():
    sign, sq = wigner3j_exact(1, 1, 0, 0, 0, 0)
    assert sign * sign * sq == Fraction(1, 3)


def test_halfint_arithmetic():
    a = HalfInt(3)
    assert half(1.5) == a
    assert a.twice_value == 3 and not a.is_integer
    assert (a + HalfInt.of(0.5)).is_integer
    assert (a - 1.5).twice_value == 0
    with pytest.raises((TypeError, ValueError)):
        HalfInt.of(0.3)
    assert triangle(1, 1, 2) and not triangle(1, 1, 3)


def test_selection_rules_give_zero():
    assert wigner3j(1, 1, 1, 1, 1, 1) == 0.0  # m sum
    assert wigner3j(1, 1, 1, 2, -1, -1) == 0.0  # |m| > j
    assert wigner3j(0.5, 0.5, 0.5, 0.5, -0.5, 0) == 0.0  # triangle parity
    assert wigner6j(1, 1, 3, 1, 1, 1) == 0.0


# --- oracle agreement ----------------------------------------------------


def test_3j_matches_ladder_oracle_all_j_up_to_5():
    worst = 0.0
    count = 0
    for j1, j2, j3 in _triads(5.0):
        for m1 in _ms(j1):
            for m2 in _ms(j2):
                m3 = -m1 - m2
                if abs(m3) > j3:
                    continue
                worst = max(worst, abs(wigner3j(j1, j2, j3, m1, m2, m3) - oracles.threej(j1, j2, j3, m1, m2, m3)))
                count += 1
    assert count > 10000
    assert worst < 1e-10


def test_6j_matches_contraction_oracle():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 150:
        j1, j2, j4, j5 = rng.integers(0, 7, 4) / 2
        j3s = np.arange(abs(j1 - j2), j1 + j2 + 0.5)
        j6s = np.arange(abs(j1 - j5), j1 + j5 + 0.5)
        if not len(j3s) or not len(j6s):
            continue
        j3, j6 = rng.choice(j3s), rng.choice(j6s)
        if not (triangle(j4, j2, j6) and triangle(j4, j5, j3)):
            continue
        assert abs(wigner6j(j1, j2, j3, j4, j5, j6) - oracles.sixj(j1, j2, j3, j4, j5, j6)) < 1e-10
        checked += 1


def test_6j_matches_oracle_on_cesium_couplings():
    # every 6j the dipole code uses
    for F in (3, 4):
        for Fp in (2, 3, 4, 5):
            a = wigner6j(0.5, 1.5, 1, Fp, F, 3.5)
            assert abs(a - oracles.sixj(0.5, 1.5, 1, Fp, F, 3.5)) < 1e-10


def test_sympy_agrees():
    sympy = pytest.importorskip("sympy")
    from sympy.physics.wigner import wigner_3j, wigner_6j

    rng = np.random.default_rng(5)
    for _ in range(300):
        j1, j2 = rng.integers(0, 21, 2) / 2
        j3 = rng.choice(np.arange(abs(j1 - j2), j1 + j2 + 0.5))
        m1, m2 = rng.choice(_ms(j1)), rng.choice(_ms(j2))
        m3 = -m1 - m2
        if abs(m3) > j3:
            continue
        ref = float(wigner_3j(*(sympy.Rational(int(2 * x), 2) for x in (j1, j2, j3, m1, m2, m3))))
        assert abs(wigner3j(j1, j2, j3, m1, m2, m3) - ref) < 1e-12
    for _ in range(100):
        js = rng.integers(0, 13, 6) / 2
        R = [sympy.Rational(int(2 * x), 2) for x in js]
        try:
            ref = float(wigner_6j(*R))
        except ValueError:
            ref = 0.0
        assert abs(wigner6j(*js) - ref) < 1e-12


# --- orthogonality and symmetry -----------------------------------------


def test_3j_orthogonality():
    worst = 0.0
    for j1, j2, j3 in _triads(4.0):
        for j3p in np.arange(abs(j1 - j2), j1 + j2 + 0.5):
            for m3 in _ms(min(j3, j3p)):
                s = 0.0
                for m1 in _ms(j1):
                    m2 = -m1 - m3
                    if abs(m2) <= j2:
                        s += wigner3j(j1, j2, j3, m1, m2, m3) * wigner3j(j1, j2, j3p, m1, m2, m3)
                expect = 1.0 / (2 * j3 + 1) if j3 == j3p else 0.0
                worst = max(worst, abs(s - expect))
    assert worst < 1e-12


def test_3j_completeness_over_j3():
    for j1, j2 in itertools.product(HALVES[:7], repeat=2):
        for m1 in _ms(j1):
            for m2 in _ms(j2):
                s = sum((2 * j3 + 1) * wigner3j(j1, j2, j3, m1, m2, -m1 - m2) ** 2
                        for j3 in np.arange(abs(j1 - j2), j1 + j2 + 0.5))
                assert abs(s - 1.0) < 1e-12


def test_6j_orthogonality():
    for j1, j2, j4, j5 in itertools.product([0.5, 1, 1.5, 2], repeat=4):
        xs = [x for x in np.arange(0, 5.5, 0.5) if triangle(j1, j2, x) and triangle(j4, j5, x)]
        j3s = [x for x in np.arange(0, 5.5, 0.5) if triangle(j1, j5, x) and triangle(j4, j2, x)]
        for j6 in j3s:
            for j6p in j3s:
                s = sum((2 * x + 1) * (2 * j6 + 1) * wigner6j(j1, j2, x, j4, j5, j6)
                        * wigner6j(j1, j2, x, j4, j5, j6p) for x in xs)
                assert abs(s - (1.0 if j6 == j6p else 0.0)) < 1e-12


@st.composite
def three_j_args(draw):
    j1 = draw(st.integers(0, 10)) / 2
    j2 = draw(st.integers(0, 10)) / 2
    j3 = draw(st.sampled_from(list(np.arange(abs(j1 - j2), j1 + j2 + 0.5))))
    m1 = draw(st.sampled_from(list(_ms(j1))))
    m2 = draw(st.sampled_from(list(_ms(j2))))
    return float(j1), float(j2), float(j3), float(m1), float(m2), float(-m1 - m2)


@settings(max_examples=300, deadline=None)
@given(three_j_args())
def test_3j_permutation_and_reflection_symmetry(args):
    j1, j2, j3, m1, m2, m3 = args
    w = wigner3j(j1, j2, j3, m1, m2, m3)
    odd = (-1) ** round(j1 + j2 + j3)
    assert abs(wigner3j(j2, j3, j1, m2, m3, m1) - w) < 1e-12
    assert abs(wigner3j(j3, j1, j2, m3, m1, m2) - w) < 1e-12
    assert abs(wigner3j(j2, j1, j3, m2, m1, m3) - odd * w) < 1e-12
    assert abs(wigner3j(j1, j3, j2, m1, m3, m2) - odd * w) < 1e-12
    assert abs(wigner3j(j1, j2, j3, -m1, -m2, -m3) - odd * w) < 1e-12


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 10), min_size=6, max_size=6))
def test_6j_tetrahedral_symmetry(tw):
    a, b, c, d, e, f = (t / 2 for t in tw)
    w = wigner6j(a, b, c, d, e, f)
    images = [
        (b, a, c, e, d, f), (a, c, b, d, f, e), (c, b, a, f, e, d),  # column swaps
        (d, e, c, a, b, f), (d, b, f, a, e, c), (a, e, f, d, b, c),  # upper/lower in two columns
    ]
    for img in images:
        assert abs(wigner6j(*img) - w) < 1e-12
