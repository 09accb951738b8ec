"""Command-line entry point: ``csraman {spectrum,sweep,velocity,servo}``.

Every command writes a CSV table and a JSON sidecar next to it holding the
fully resolved parameters, the seed and the package version.

Exit codes: 0 success, 2 bad configuration or usage, 3 numerical failure,
4 unstable servo loop.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import AmbiguousPeakError, FitError, calibrate_kappa_spectral, fit_gaussian, measure_fwhm, peak_centroid, sweep_b0
from .config import ConfigError, load_config, resolve
from .servo import UnstableLoopError, run_scenario
from .spectrum import _SQUARE_FWHM_T, synthesize
from .velocity import fit_temperature, temperature_from_fwhm, velocity_spectrum

OUTPUT_DIR_ENV = "CSRAMAN_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNSTABLE = 0, 2, 3, 4

# a velocity spectrum narrower than this multiple of the pulse response is
# dominated by the pulse rather than by the velocity spread
_RESOLUTION_FACTOR = 1.5


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return format(float(x), ".10g")


def _write_csv(path: Path, header, columns):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _write_sidecar(csv_path: Path, command: str, cfg: dict, results: dict) -> Path:
    side = csv_path.with_suffix(".json")
    doc = {
        "command": command,
        "software": {"name": "csraman", "version": __version__},
        "seed": cfg["seed"],
        "parameters": cfg,
        "results": results,
    }
    side.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")
    return side


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _out_path(args, command) -> Path:
    if args.out:
        p = Path(args.out)
    else:
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        stem = Path(args.config).stem if args.config else command
        p = base / f"{stem}_{command}.csv"
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {p.parent}: {exc}") from exc
    return p


def _load(args, command) -> dict:
    if not args.config:
        raise UsageError("--config is required")
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    cfg = load_config(text, command)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.samples is not None:
        if args.samples < 1:
            raise UsageError("--samples must be >= 1")
        if "samples" in cfg:
            cfg["samples"] = args.samples
        else:
            _warn(f"--samples has no effect on '{command}'")
    return cfg


def _resolved(cfg) -> dict:
    try:
        return resolve(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _beams_with_kappa(cfg, objs):
    """Resolve ``kappa`` (possibly by spectral calibration) into ``cfg`` and the BeamConfig."""
    b = cfg["beams"]
    if b["kappa"] is None:
        cal = b["kappa_calibration"]
        kappa = calibrate_kappa_spectral(objs["beams"], cal["target_khz"], objs["field"], objs["pulse"],
                                         n_samples=cal["samples"], seed=cal["seed"], grid=objs["grid"],
                                         populations=cfg["populations"])
        b["kappa"] = kappa
    return objs["beams"].with_kappa(b["kappa"])


def cmd_spectrum(args) -> int:
    cfg = _load(args, "spectrum")
    out = _out_path(args, "spectrum")
    objs = _resolved(cfg)
    beams = _beams_with_kappa(cfg, objs)
    spec = synthesize(objs["field"], beams, objs["pulse"], cfg["populations"], cfg["samples"],
                      cfg["seed"], objs["grid"])
    results = {}
    try:
        results["fwhm_khz"] = measure_fwhm(spec)
        results["centroid_khz"] = peak_centroid(spec)
    except AmbiguousPeakError:
        results["fwhm_khz"] = None  # resolved multi-line spectrum
    _write_csv(out, ["detuning_khz", "transfer"], [spec.detuning_axis, spec.transfer])
    _write_sidecar(out, "spectrum", cfg, results)
    return EXIT_OK


def _parse_b0_list(text: str) -> list[float]:
    """``"0.1,0.2,0.5"`` or ``"start:stop:step"`` (stop inclusive), in mG."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--b0: cannot parse {text!r}; use a comma list or start:stop:step") from exc


def cmd_sweep(args) -> int:
    cfg = _load(args, "sweep")
    out = _out_path(args, "sweep")
    if args.b0 is not None:
        b0 = _parse_b0_list(args.b0)
    elif cfg["sweep"]["b0_mG"] is not None:
        b0 = list(cfg["sweep"]["b0_mG"])
    else:
        raise UsageError("no B0 list: give --b0 or sweep.b0_mG in the config")
    if not b0:
        raise UsageError("empty B0 list")
    if any(v < 0 for v in b0):
        raise UsageError("B0 values must be >= 0")
    if len(set(b0)) != len(b0):
        _warn(f"duplicate B0 entries removed ({len(b0) - len(set(b0))} dropped)")
    b0 = sorted(set(b0))
    cfg["sweep"]["b0_mG"] = b0
    objs = _resolved(cfg)
    beams = _beams_with_kappa(cfg, objs)
    res = sweep_b0(objs["field"], b0, beams, objs["pulse"], cfg["samples"], cfg["seed"],
                   cfg["populations"], objs["grid"], merge_gap=cfg["sweep"]["merge_gap_khz"],
                   skip_ambiguous=True)
    for B0 in res.ambiguous:
        _warn(f"ambiguous peak at B0 = {B0:g} mG; point skipped")
    if not res.points:
        print("error: no B0 value gave a measurable peak", file=sys.stderr)
        return EXIT_NUMERIC
    if res.fit is None:
        _warn(f"{len(res.points)} point(s) is too few for the width-curve fit (need 4); table written without fit")
        fit = None
    else:
        fit = {"A": res.fit.A, "b": res.fit.b, "C": res.fit.C, "argmin_mG": res.argmin_B0,
               "residual_rms_khz": res.fit.residual_rms,
               "residual_fraction_of_range": res.fit.residual_rms / float(np.ptp(res.fwhm))
               if np.ptp(res.fwhm) > 0 else None}
    _write_csv(out, ["b0_mG", "fwhm_khz"], [res.B0, res.fwhm])
    _write_sidecar(out, "sweep", cfg, {"fit": fit, "ambiguous_b0_mG": res.ambiguous})
    return EXIT_OK


def cmd_velocity(args) -> int:
    cfg = _load(args, "velocity")
    out = _out_path(args, "velocity")
    objs = _resolved(cfg)
    pulse = objs["pulse"]
    spec = velocity_spectrum(objs["distribution"], pulse, grid=objs["grid"])
    fwhm = measure_fwhm(spec)
    g = fit_gaussian(spec.detuning_axis, spec.transfer)
    pulse_fwhm = _SQUARE_FWHM_T / pulse.duration_T / 1e3
    limited = bool(fwhm < _RESOLUTION_FACTOR * pulse_fwhm)
    results = {
        "fwhm_khz": fwhm,
        "centroid_khz": g.center,
        "gaussian_fit": {"amplitude": g.amplitude, "center_khz": g.center, "fwhm_khz": g.fwhm,
                         "residual_rms": g.residual_rms},
        "temperature_gaussian_fit_uK": temperature_from_fwhm(g.fwhm),
        "pulse_fwhm_khz": pulse_fwhm,
        "resolution_limited": limited,
    }
    if limited:
        _warn("spectrum width is set by the pulse, not the velocity spread (resolution-limited)")
        results["temperature_deconvolved_uK"] = None
    else:
        results["temperature_deconvolved_uK"] = fit_temperature(spec, pulse)["temperature_uK"]
    _write_csv(out, ["detuning_khz", "transfer"], [spec.detuning_axis, spec.transfer])
    _write_sidecar(out, "velocity", cfg, results)
    return EXIT_OK


def cmd_servo(args) -> int:
    cfg = _load(args, "servo")
    out = _out_path(args, "servo")
    objs = _resolved(cfg)
    s = cfg["servo"]
    state = objs["state"]
    if not state.within_design_margin():
        _warn(f"crossover above Nyquist/5 ({state.nyquist_hz / 5:g} Hz)")
    try:
        res = run_scenario(objs["events"], s["duration_ms"] * 1e-3, objs["environment"], objs["cube"],
                           state, seed=cfg["seed"], measure_from=s["measure_from_ms"] * 1e-3)
    except UnstableLoopError as exc:
        print(f"error: unstable loop; last stable time {exc.last_stable_time:.6g} s", file=sys.stderr)
        return EXIT_UNSTABLE
    k = s["decimate"]
    err_uG = res.error[::k] * 1e6
    _write_csv(out, ["time_s", "bx_uG", "by_uG", "bz_uG"], [res.time[::k], *err_uG.T])
    _write_sidecar(out, "servo", cfg, res.summary)
    return EXIT_OK


COMMANDS = {"spectrum": cmd_spectrum, "sweep": cmd_sweep, "velocity": cmd_velocity, "servo": cmd_servo}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csraman", description="Raman spectroscopy and field-servo simulations.")
    ap.add_argument("--version", action="version", version=f"csraman {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run a {name} scenario")
        p.add_argument("--config", metavar="PATH", help="YAML scenario file")
        p.add_argument("--out", metavar="PATH",
                       help=f"output CSV (sidecar JSON alongside); default ${OUTPUT_DIR_ENV}/<config>_{name}.csv")
        p.add_argument("--seed", type=int, metavar="N", help="override the config seed")
        p.add_argument("--samples", type=int, metavar="N", help="override the Monte-Carlo sample count")
        if name == "sweep":
            p.add_argument("--b0", metavar="LIST", help="B0 values in mG: '0.1,0.5,1' or '0.1:3.0:0.1'")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableLoopError as exc:
        print(f"error: unstable loop; last stable time {exc.last_stable_time:.6g} s", file=sys.stderr)
        return EXIT_UNSTABLE
    except (FitError, AmbiguousPeakError, ValueError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
