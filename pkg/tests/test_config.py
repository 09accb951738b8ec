import pytest

from csraman.config import ConfigError, load_config, resolve

SPECTRUM = """\
seed: 1
field:
  B0_mG: 28
  theta0_rad: 0.2
beams:
  kappa: 10
pulse:
  duration_us: 500
"""


def test_defaults_expanded():
    cfg = load_config(SPECTRUM, "spectrum")
    assert cfg["samples"] == 1000
    assert cfg["grid"] == {"start_khz": -80.0, "stop_khz": 80.0, "step_khz": 0.1}
    assert cfg["field"]["dB_stray_mG"] == 0.0
    assert cfg["pulse"]["shape"] == "square"
    objs = resolve(cfg)
    assert objs["field"].B0_magnitude == pytest.approx(0.028)
    assert objs["pulse"].duration_T == pytest.approx(500e-6)


def test_empty_document_names_first_missing_field():
    with pytest.raises(ConfigError, match="seed: missing required field"):
        load_config("", "spectrum")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"line 6: beams.kapa: unknown key"):
        load_config(SPECTRUM.replace("kappa", "kapa"), "spectrum")


def test_type_error_reports_line_and_field():
    with pytest.raises(ConfigError, match=r"line 3: field.B0_mG: expected a number"):
        load_config(SPECTRUM.replace("B0_mG: 28", "B0_mG: lots"), "spectrum")
    with pytest.raises(ConfigError, match="seed: expected an integer"):
        load_config(SPECTRUM.replace("seed: 1", "seed: 1.5"), "spectrum")


def test_range_checks():
    with pytest.raises(ConfigError, match="theta0_rad"):
        load_config(SPECTRUM.replace("0.2", "7"), "spectrum")
    with pytest.raises(ConfigError, match="exactly one"):
        load_config(SPECTRUM.replace("  kappa: 10\n", "  I0: 1\n"), "spectrum")
    with pytest.raises(ConfigError, match="populations"):
        load_config(SPECTRUM + "populations: [1, 2]\n", "spectrum")


def test_velocity_missing_pulse_duration():
    with pytest.raises(ConfigError, match="pulse.duration_us: missing required field"):
        load_config("seed: 0\nvelocity: {temperature_uK: 3.3}\npulse: {shape: square}\n", "velocity")


def test_servo_timeline():
    cfg = load_config("seed: 0\ntimeline:\n  - {t_ms: 5, event: B-step, axis: x, delta_mG: 1}\n", "servo")
    objs = resolve(cfg)
    assert objs["events"][0].delta == pytest.approx(1e-3)
    assert cfg["environment"]["preset"] == "reference"
    with pytest.raises(ConfigError, match="axis"):
        load_config("seed: 0\ntimeline:\n  - {t_ms: 5, event: B-step}\n", "servo")
    with pytest.raises(ConfigError, match="unknown event"):
        load_config("seed: 0\ntimeline:\n  - {t_ms: 5, event: jump}\n", "servo")


def test_custom_environment():
    text = """\
seed: 0
environment:
  dc_mG: [100, 0, 0]
  gradient_mG_per_cm: [[1, 0, 0], [0, 1, 0], [0, 0, -2]]
  mains:
    - {frequency_hz: 50, amplitude_mG: [1, 0, 0]}
"""
    env = resolve(load_config(text, "servo"))["environment"]
    assert env.dc[0] == pytest.approx(0.1)
    assert env.mains[0][0] == 50.0


def test_invalid_yaml():
    with pytest.raises(ConfigError, match="not valid YAML"):
        load_config("seed: [1,", "spectrum")
