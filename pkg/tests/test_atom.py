import numpy as np
import pytest

from csraman.atom import CESIUM, SelectionRuleError, ZeemanSublevel, allowed_pairs, line_position, zeeman_shift


def test_zeeman_examples():
    assert zeeman_shift(ZeemanSublevel(4, 2), 0.010) == pytest.approx(-7.02, abs=1e-12)
    assert zeeman_shift(ZeemanSublevel(3, 0), 1.7) == 0.0
    assert zeeman_shift(ZeemanSublevel(3, -3), 0.028) == pytest.approx(-29.4, abs=1e-12)


def test_line_position_examples():
    assert line_position(3, 3, 0.028) == pytest.approx(58.884, abs=1e-9)
    assert line_position(-3, -3, 0.028) == pytest.approx(-58.884, abs=1e-9)
    assert line_position(0, 0, 0.3) == 0.0


def test_line_position_sign_convention():
    B = 0.1
    for m, mp in allowed_pairs():
        expect = -(zeeman_shift(ZeemanSublevel(4, mp), B) - zeeman_shift(ZeemanSublevel(3, m), B))
        assert abs(line_position(m, mp, B) - expect) < 1e-9


def test_equal_label_lines_cluster_within_B():
    B = 0.028
    by_label = {}
    for m, mp in allowed_pairs():
        by_label.setdefault(m + mp, []).append(line_position(m, mp, B) * 1.0)
    for pos in by_label.values():
        # only the m' term (1 kHz/G per unit) separates them; m' spans at most 2 units
        assert np.ptp(pos) <= 2 * abs(B) + 1e-12
    assert sorted(by_label) == list(range(-7, 8))


def test_selection_rule_error():
    with pytest.raises(SelectionRuleError):
        line_position(0, 3, 0.01)
    with pytest.raises(ValueError):
        line_position(4, 0, 0.01)
    with pytest.raises(ValueError):
        ZeemanSublevel(5, 0)
    with pytest.raises(ValueError):
        ZeemanSublevel(3, 4)
    with pytest.raises(ValueError):
        zeeman_shift(ZeemanSublevel(3, 1), -0.1)


def test_pair_count_and_constants():
    brute = [(m, mp) for m in range(-3, 4) for mp in range(-4, 5) if abs(m - mp) <= 2]
    assert allowed_pairs() == brute and len(brute) == 33
    assert CESIUM.excited_F_range(3) == (2, 3, 4)
    assert CESIUM.excited_F_range(4) == (3, 4, 5)
    assert CESIUM.doppler_per_velocity() == pytest.approx(8.4 / 3.5e-3)


def test_recoil_doppler_consistent_with_wavelength():
    # 2 k v_r / 2 pi with v_r = h k / m; the rounded constants agree to ~2 %
    from scipy.constants import h

    k = CESIUM.wavenumber
    v_r = h / CESIUM.wavelength / CESIUM.mass
    shift_khz = 2 * k * v_r / (2 * np.pi) / 1e3
    assert v_r == pytest.approx(CESIUM.recoil_velocity, rel=0.03)
    assert shift_khz == pytest.approx(CESIUM.recoil_doppler, rel=0.03)
