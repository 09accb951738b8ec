"""YAML scenario files: schema validation with line-numbered diagnostics.

Field values in files use laboratory units (mG, us, kHz, uG); they are
converted to the library's units (G, s, kHz, G) by :func:`build_*` helpers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import yaml

from .geometry import FieldConfig
from .raman import BeamConfig
from .servo import FieldEnvironment, ProbeCube, ScenarioEvent, ServoState, reference_environment, random_misalignment
from .spectrum import PulseConfig, default_grid
from .velocity import VelocityDistribution, default_velocity_grid

__all__ = ["ConfigError", "load_config", "resolve", "SCHEMAS"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    kind: Any  # type, tuple of types, a nested schema dict, or "list:<type>"
    required: bool = False
    default: Any = None
    check: Any = None  # callable(value) -> error message or None


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _angle(v):
    return None if 0 <= v <= np.pi else "must lie in [0, pi]"


NUM = (int, float)

FIELD = {
    "B0_mG": Key(NUM, True, check=_nonneg),
    "theta0_rad": Key(NUM, False, 0.0, _angle),
    "dB_stray_mG": Key(NUM, False, 0.0, _nonneg),
    "dB_relative": Key(NUM, False, 0.0, _nonneg),
}
CALIBRATION = {
    "target_khz": Key(NUM, True, check=_nonneg),
    "samples": Key(int, False, 1000, _positive),
    "seed": Key(int, False, 7),
}
BEAMS = {
    "I0": Key(NUM, False, 1.0, _positive),
    "intensity_rms_fraction": Key(NUM, False, 0.0, _nonneg),
    "optical_detuning_GHz": Key(NUM, False, 200.0, lambda v: None if v > 1 else "must exceed 1 GHz"),
    "kappa": Key(NUM, False, None, _nonneg),
    "kappa_calibration": Key(CALIBRATION, False, None),
}
PULSE = {
    "duration_us": Key(NUM, True, check=_positive),
    "shape": Key(str, False, "square", lambda v: None if v in ("square", "gaussian") else "must be 'square' or 'gaussian'"),
}
GRID = {
    "start_khz": Key(NUM, True),
    "stop_khz": Key(NUM, True),
    "step_khz": Key(NUM, True, check=_positive),
}
SWEEP = {
    "b0_mG": Key("list:num", False, None),
    "merge_gap_khz": Key(NUM, False, 2.0, _nonneg),
}
VELOCITY = {
    "temperature_uK": Key(NUM, True, check=_positive),
    "mean_velocity_mm_s": Key(NUM, False, 0.0),
}
PROBES = {
    "half_side_cm": Key(NUM, False, 5.0, _positive),
    "noise_uG": Key(NUM, False, 40.0, _nonneg),
    "drift_uG_per_hour": Key(NUM, False, 0.0, _nonneg),
    "pre_reset_offset_mG": Key("list:num", False, [0.0, 0.0, 0.0]),
    "misalignment_max_deg": Key(NUM, False, 0.0, _nonneg),
}
MAINS = {
    "frequency_hz": Key(NUM, True, check=_positive),
    "amplitude_mG": Key("list:num", True),
    "phase_rad": Key(NUM, False, 0.0),
}
ENVIRONMENT = {
    "preset": Key(str, False, None, lambda v: None if v == "reference" else "only 'reference' is known"),
    "dc_mG": Key("list:num", False, [0.0, 0.0, 0.0]),
    "gradient_mG_per_cm": Key("list:list", False, None),
    "quadratic_mG_per_cm2": Key("list:list", False, None),
    "mains": Key("list:" + "mains", False, []),
}
EVENT = {
    "t_ms": Key(NUM, True, check=_nonneg),
    "event": Key(str, True, check=lambda v: None if v in ("probes-reset", "rezero", "loop-on", "loop-off", "B-step") else "unknown event"),
    "axis": Key(str, False, None),
    "delta_mG": Key(NUM, False, 0.0),
}
SERVO = {
    "dt_us": Key(NUM, False, 20.0, _positive),
    "crossover_hz": Key(NUM, False, 500.0, _nonneg),
    "duration_ms": Key(NUM, False, 100.0, _positive),
    "measure_from_ms": Key(NUM, False, 20.0, _nonneg),
    "loop_initially_on": Key(bool, False, True),
    "decimate": Key(int, False, 1, _positive),
}

COMMON = {"seed": Key(int, True), "description": Key(str, False, "")}

SCHEMAS = {
    "spectrum": {
        **COMMON,
        "samples": Key(int, False, 1000, _positive),
        "field": Key(FIELD, True),
        "beams": Key(BEAMS, True),
        "pulse": Key(PULSE, True),
        "populations": Key("list:num", False, None),
        "grid": Key(GRID, False, {"start_khz": -80.0, "stop_khz": 80.0, "step_khz": 0.1}),
    },
    "velocity": {
        **COMMON,
        "velocity": Key(VELOCITY, True),
        "pulse": Key(PULSE, True),
        "grid": Key(GRID, False, {"start_khz": -300.0, "stop_khz": 300.0, "step_khz": 0.5}),
    },
    "servo": {
        **COMMON,
        "servo": Key(SERVO, False, {}),
        "probes": Key(PROBES, False, {}),
        "environment": Key(ENVIRONMENT, False, {"preset": "reference"}),
        "timeline": Key("list:event", False, []),
    },
}
SCHEMAS["sweep"] = {**SCHEMAS["spectrum"], "sweep": Key(SWEEP, False, {})}
_NAMED = {"mains": MAINS, "event": EVENT}


def _line(node) -> int:
    return node.start_mark.line + 1


def _err(node, path, msg):
    where = f"line {_line(node)}: " if node is not None else ""
    return ConfigError(f"{where}{path or '<root>'}: {msg}")


def _scalar(node, path):
    if not isinstance(node, yaml.ScalarNode):
        raise _err(node, path, "expected a scalar")
    return yaml.safe_load(yaml.serialize(node))


def _num(node, path):
    v = _scalar(node, path)
    if isinstance(v, bool) or not isinstance(v, NUM):
        raise _err(node, path, f"expected a number, got {v!r}")
    if not np.isfinite(v):
        raise _err(node, path, "must be finite")
    return float(v)


def _convert(key: Key, node, path):
    kind = key.kind
    if isinstance(kind, dict):
        return _mapping(kind, node, path)
    if isinstance(kind, str) and kind.startswith("list:"):
        if not isinstance(node, yaml.SequenceNode):
            raise _err(node, path, "expected a list")
        inner = kind[5:]
        out = []
        for i, item in enumerate(node.value):
            p = f"{path}[{i}]"
            if inner == "num":
                out.append(_num(item, p))
            elif inner == "list":
                if not isinstance(item, yaml.SequenceNode):
                    raise _err(item, p, "expected a list")
                out.append([_num(x, f"{p}[{j}]") for j, x in enumerate(item.value)])
            else:
                out.append(_mapping(_NAMED[inner], item, p))
        return out
    if kind is NUM:
        v = _num(node, path)
    elif kind is int:
        v = _scalar(node, path)
        if isinstance(v, bool) or not isinstance(v, int):
            raise _err(node, path, f"expected an integer, got {v!r}")
    elif kind is bool:
        v = _scalar(node, path)
        if not isinstance(v, bool):
            raise _err(node, path, f"expected true/false, got {v!r}")
    elif kind is str:
        v = _scalar(node, path)
        if not isinstance(v, str):
            raise _err(node, path, f"expected a string, got {v!r}")
    else:  # pragma: no cover
        raise TypeError(kind)
    if key.check is not None:
        msg = key.check(v)
        if msg:
            raise _err(node, path, msg)
    return v


def _mapping(schema: dict, node, path) -> dict:
    if node is None or (isinstance(node, yaml.ScalarNode) and node.value in ("", "~", "null")):
        items = {}
    elif not isinstance(node, yaml.MappingNode):
        raise _err(node, path, "expected a mapping")
    else:
        items = {}
        for knode, vnode in node.value:
            k = _scalar(knode, path)
            if k in items:
                raise _err(knode, f"{path}.{k}" if path else str(k), "duplicate key")
            items[k] = (knode, vnode)
    out = {}
    for k, (knode, _) in items.items():
        if k not in schema:
            raise _err(knode, f"{path}.{k}" if path else str(k), "unknown key")
    for name, key in schema.items():
        p = f"{path}.{name}" if path else name
        if name in items:
            out[name] = _convert(key, items[name][1], p)
        elif key.required:
            raise _err(node if isinstance(node, yaml.Node) else None, p, "missing required field")
        elif isinstance(key.kind, dict) and isinstance(key.default, dict):
            out[name] = _fill_defaults(key.kind, key.default)
        else:
            out[name] = key.default
    return out


def _fill_defaults(schema, given):
    out = {}
    for name, key in schema.items():
        if name in given:
            out[name] = given[name]
        elif isinstance(key.kind, dict) and isinstance(key.default, dict):
            out[name] = _fill_defaults(key.kind, key.default)
        else:
            out[name] = key.default
    return out


def load_config(text_or_path, command: str) -> dict:
    """Parse and validate a scenario document for ``command``.

    Returns the fully resolved mapping (defaults expanded). Raises
    ConfigError naming the offending field and its line.
    """
    if command not in SCHEMAS:
        raise ValueError(f"unknown command {command!r}")
    if hasattr(text_or_path, "read_text"):
        text = text_or_path.read_text()
    elif isinstance(text_or_path, str) and "\n" not in text_or_path and text_or_path.endswith((".yaml", ".yml")):
        with open(text_or_path) as fh:
            text = fh.read()
    else:
        text = text_or_path
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    cfg = _mapping(SCHEMAS[command], node, "")
    _cross_checks(cfg, command)
    return cfg


def _cross_checks(cfg, command):
    if command in ("spectrum", "sweep"):
        b = cfg["beams"]
        if (b["kappa"] is None) == (b["kappa_calibration"] is None):
            raise ConfigError("beams: give exactly one of 'kappa' or 'kappa_calibration'")
        pops = cfg["populations"]
        if pops is not None and (len(pops) != 7 or min(pops) < 0 or sum(pops) <= 0):
            raise ConfigError("populations: need 7 non-negative weights for m = -3..3")
    if command in ("spectrum", "sweep", "velocity"):
        g = cfg["grid"]
        if g["stop_khz"] <= g["start_khz"]:
            raise ConfigError("grid: stop_khz must exceed start_khz")
    if command == "servo":
        for i, ev in enumerate(cfg["timeline"]):
            if ev["event"] == "B-step" and ev["axis"] not in ("x", "y", "z"):
                raise ConfigError(f"timeline[{i}].axis: B-step needs axis x, y or z")
        env = cfg["environment"]
        if env["gradient_mG_per_cm"] is not None and np.shape(env["gradient_mG_per_cm"]) != (3, 3):
            raise ConfigError("environment.gradient_mG_per_cm: expected a 3x3 matrix")
        if env["quadratic_mG_per_cm2"] is not None and np.shape(env["quadratic_mG_per_cm2"]) != (3, 3):
            raise ConfigError("environment.quadratic_mG_per_cm2: expected 3 rows of (xx, yy, zz) curvatures")
        for i, m in enumerate(env["mains"]):
            if len(m["amplitude_mG"]) != 3:
                raise ConfigError(f"environment.mains[{i}].amplitude_mG: expected 3 components")
        if len(cfg["probes"]["pre_reset_offset_mG"]) != 3 or len(env["dc_mG"]) != 3:
            raise ConfigError("vectors must have 3 components")


def resolve(cfg: dict) -> dict:
    """Library objects for a validated spectrum/sweep/velocity/servo config."""
    out = {}
    if "field" in cfg:
        f = cfg["field"]
        out["field"] = FieldConfig(f["B0_mG"] / 1e3, f["theta0_rad"], f["dB_stray_mG"] / 1e3, f["dB_relative"])
    if "beams" in cfg:
        b = cfg["beams"]
        out["beams"] = BeamConfig(b["I0"], b["intensity_rms_fraction"], b["optical_detuning_GHz"],
                                  b["kappa"] if b["kappa"] is not None else 1.0)
    if "pulse" in cfg:
        p = cfg["pulse"]
        out["pulse"] = PulseConfig(p["duration_us"] / 1e6, p["shape"])
    if "grid" in cfg:
        g = cfg["grid"]
        out["grid"] = default_grid(g["start_khz"], g["stop_khz"], g["step_khz"])
    if "velocity" in cfg:
        v = cfg["velocity"]
        out["distribution"] = VelocityDistribution(v["temperature_uK"], v["mean_velocity_mm_s"] / 1e3)
    if "servo" in cfg:
        s = cfg["servo"]
        out["state"] = ServoState(crossover_hz=s["crossover_hz"], dt=s["dt_us"] / 1e6,
                                  enabled=s["loop_initially_on"])
        pr = cfg["probes"]
        mis = np.eye(3)
        if pr["misalignment_max_deg"] > 0:
            mis = random_misalignment(np.deg2rad(pr["misalignment_max_deg"]), cfg["seed"] + 1)
        out["cube"] = ProbeCube(pr["half_side_cm"], pr["noise_uG"] / 1e6, pr["drift_uG_per_hour"] / 1e6,
                                tuple(np.asarray(pr["pre_reset_offset_mG"]) / 1e3), mis)
        env = cfg["environment"]
        if env["preset"] == "reference":
            out["environment"] = reference_environment()
        else:
            quad = np.zeros((3, 3, 3))
            if env["quadratic_mG_per_cm2"] is not None:
                for i, row in enumerate(env["quadratic_mG_per_cm2"]):
                    quad[i] = np.diag(np.asarray(row) / 1e3)
            grad = np.zeros((3, 3)) if env["gradient_mG_per_cm"] is None else np.asarray(env["gradient_mG_per_cm"]) / 1e3
            out["environment"] = FieldEnvironment(
                dc=tuple(np.asarray(env["dc_mG"]) / 1e3),
                gradient=grad,
                quadratic=quad,
                mains=tuple((m["frequency_hz"], np.asarray(m["amplitude_mG"]) / 1e3, m["phase_rad"]) for m in env["mains"]),
            )
        out["events"] = [ScenarioEvent(ev["t_ms"] / 1e3, ev["event"], ev["axis"], ev["delta_mG"] / 1e3)
                         for ev in cfg["timeline"]]
    return out
