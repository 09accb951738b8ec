"""Three-axis active field compensation with an eight-corner probe cube.

Each axis is a pure integrator: the corner-averaged probe reading is
integrated and the result drives a Helmholtz pair producing the opposite
field. The coils respond instantly and produce a uniform field, so the loop
bandwidth is set by the integrator gain alone, expressed as the crossover
frequency ``f_c`` (gain ``2 pi f_c``).

:func:`step_loop` is the literal one-step update. :func:`run_scenario` solves
the same linear recursion segment by segment in the eigenbasis of the loop
matrix, which is what makes 10^6-step runs cheap; the two agree to rounding.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .geometry import as_generator

__all__ = [
    "ProbeCube",
    "FieldEnvironment",
    "ServoState",
    "ScenarioEvent",
    "ScenarioResult",
    "UnstableLoopError",
    "corner_positions",
    "field_at",
    "corner_average",
    "step_loop",
    "run_scenario",
    "band_rms",
    "analytic_attenuation",
    "discrete_attenuation",
    "measure_attenuation",
    "random_misalignment",
    "reference_environment",
    "EVENT_TYPES",
]

AXES = {"x": 0, "y": 1, "z": 2}
EVENT_TYPES = ("probes-reset", "rezero", "loop-on", "loop-off", "B-step")


class UnstableLoopError(RuntimeError):
    def __init__(self, msg, last_stable_time: float):
        super().__init__(f"{msg} (last stable time {last_stable_time:.6g} s)")
        self.last_stable_time = last_stable_time


@dataclass(frozen=True)
class ProbeCube:
    """Eight three-axis probes at the corners of a cube.

    ``half_side`` in cm; noise, drift and offsets in gauss. ``drift_rate`` is
    the rms random-walk excursion of one probe after one hour.
    ``pre_reset_offset`` is the reading error left by strong fields before the
    first reset. ``misalignment`` rotates lab-frame fields into probe axes.
    """

    half_side: float = 5.0
    probe_noise_rms: float = 40e-6
    drift_rate: float = 0.0
    pre_reset_offset: tuple = (0.0, 0.0, 0.0)
    misalignment: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if not self.half_side > 0:
            raise ValueError("half_side must be positive")
        if self.probe_noise_rms < 0 or self.drift_rate < 0:
            raise ValueError("noise and drift must be >= 0")
        object.__setattr__(self, "misalignment", np.asarray(self.misalignment, dtype=float))
        if self.misalignment.shape != (3, 3):
            raise ValueError("misalignment must be a 3x3 matrix")

    @property
    def averaged_noise_rms(self) -> float:
        """Noise of one axis after averaging the eight corner probes."""
        return self.probe_noise_rms / np.sqrt(8.0)


@dataclass(frozen=True)
class FieldEnvironment:
    """Static spatial structure plus uniform mains-frequency lines.

    ``gradient[i, j]`` is dB_i/dx_j in G/cm. ``quadratic[i]`` is a symmetric
    3x3 matrix Q with B_i += r.Q.r (G/cm^2). ``mains`` holds
    ``(frequency_hz, amplitude_vector_G, phase_rad)`` entries.
    """

    dc: tuple = (0.0, 0.0, 0.0)
    gradient: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    quadratic: np.ndarray = field(default_factory=lambda: np.zeros((3, 3, 3)))
    mains: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "dc", np.asarray(self.dc, dtype=float).reshape(3))
        object.__setattr__(self, "gradient", np.asarray(self.gradient, dtype=float).reshape(3, 3))
        object.__setattr__(self, "quadratic", np.asarray(self.quadratic, dtype=float).reshape(3, 3, 3))
        mains = []
        for f, amp, ph in self.mains:
            if not f > 0:
                raise ValueError("mains frequencies must be positive")
            amp = np.broadcast_to(np.asarray(amp, dtype=float), (3,)).copy()
            mains.append((float(f), amp, float(ph)))
        object.__setattr__(self, "mains", tuple(mains))

    def ac(self, t) -> np.ndarray:
        """Uniform AC field at times ``t``, shape (..., 3)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3,))
        for f, amp, ph in self.mains:
            out += np.sin(2 * np.pi * f * t + ph)[..., None] * amp
        return out


def corner_positions(cube: ProbeCube) -> np.ndarray:
    """(8, 3) corner coordinates in cm, ordered so rows i and 7-i are opposite."""
    h = cube.half_side
    return np.array(list(itertools.product((-h, h), repeat=3)))


def field_at(env: FieldEnvironment, r, t=0.0) -> np.ndarray:
    """Field (G) at positions ``r`` (..., 3) cm and a single time ``t``."""
    r = np.asarray(r, dtype=float)
    lin = np.einsum("ij,...j->...i", env.gradient, r)
    quad = np.einsum("...j,ijk,...k->...i", r, env.quadratic, r)
    return env.dc + lin + quad + env.ac(t)


def corner_average(env: FieldEnvironment, cube: ProbeCube, t: float = 0.0) -> np.ndarray:
    """Mean of the field over the eight corners (ideal probes).

    Opposite corners are summed first, so any field odd in ``r`` cancels
    term by term.
    """
    r = corner_positions(cube)
    B = field_at(env, r, t)
    pairs = B[:4] + B[7:3:-1]
    return (pairs[0] + pairs[1] + pairs[2] + pairs[3]) / 8.0


@dataclass
class ServoState:
    """Integrator state of the three axis loops (fields in gauss)."""

    crossover_hz: np.ndarray = field(default_factory=lambda: np.full(3, 500.0))
    dt: float = 20e-6
    time: float = 0.0
    integrator_accum: np.ndarray = field(default_factory=lambda: np.zeros(3))
    coil_field: np.ndarray = field(default_factory=lambda: np.zeros(3))
    setpoint: np.ndarray = field(default_factory=lambda: np.zeros(3))
    probe_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    enabled: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        self.crossover_hz = np.broadcast_to(np.asarray(self.crossover_hz, dtype=float), (3,)).copy()
        if np.any(self.crossover_hz < 0):
            raise ValueError("crossover must be >= 0")
        for name in ("integrator_accum", "coil_field", "setpoint", "probe_offset"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3).copy())

    @property
    def loop_gain(self) -> np.ndarray:
        return 2 * np.pi * self.crossover_hz

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / self.dt

    def within_design_margin(self) -> bool:
        """Crossover at most a fifth of the Nyquist frequency on every axis."""
        return bool(np.all(self.crossover_hz <= self.nyquist_hz / 5))


def step_loop(state: ServoState, env: FieldEnvironment, cube: ProbeCube,
              noise=None) -> tuple[ServoState, np.ndarray]:
    """Advance the loops by one sample.

    Returns the new state and the error signal (probe-frame corner average of
    environment plus coil field, minus the setpoint) used in this step.
    """
    noise = np.zeros(3) if noise is None else np.asarray(noise, dtype=float)
    measured = cube.misalignment @ (corner_average(env, cube, state.time) + state.coil_field)
    error = measured + noise + state.probe_offset - state.setpoint
    new = replace(state, time=state.time + state.dt)
    if state.enabled:
        new.integrator_accum = state.integrator_accum + state.loop_gain * error * state.dt
        new.coil_field = -new.integrator_accum
    return new, error


@dataclass(frozen=True)
class ScenarioEvent:
    t: float
    kind: str
    axis: str | None = None
    delta: float = 0.0  # gauss, for B-step

    def __post_init__(self):
        if self.kind not in EVENT_TYPES:
            raise ValueError(f"unknown event type {self.kind!r}")
        if self.t < 0:
            raise ValueError("event time must be >= 0")
        if self.kind == "B-step" and self.axis not in AXES:
            raise ValueError("B-step needs axis x, y or z")


_CONTRADICTORY = {frozenset({"loop-on", "loop-off"})}


def _check_timeline(events):
    events = list(events)
    for a, b in zip(events, events[1:]):
        if b.t < a.t:
            raise ValueError("events must be time-ordered")
    for a, b in itertools.combinations(events, 2):
        if a.t == b.t:
            if frozenset({a.kind, b.kind}) in _CONTRADICTORY:
                raise ValueError(f"contradictory events {a.kind!r} and {b.kind!r} at t={a.t}")
            if a.kind == b.kind and a.kind in ("loop-on", "loop-off"):
                raise ValueError(f"duplicate {a.kind!r} at t={a.t}")
    return events


@dataclass
class ScenarioResult:
    time: np.ndarray
    error: np.ndarray  # probe error signal, (n, 3)
    center_residual: np.ndarray  # true field at the cube centre, (n, 3)
    open_loop: np.ndarray  # probe error with the loops off, (n, 3)
    summary: dict

    def window(self, t_start=None, t_stop=None) -> np.ndarray:
        lo = -np.inf if t_start is None else t_start
        hi = np.inf if t_stop is None else t_stop
        return (self.time >= lo) & (self.time <= hi)


def band_rms(trace, dt: float, mains_hz: float = 50.0, half_width_hz: float = 5.0) -> dict:
    """Split the rms of a (n,) or (n, 3) trace into DC, mains, harmonics and rest."""
    x = np.asarray(trace, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    spec = np.fft.rfft(x, axis=0)
    freqs = np.fft.rfftfreq(n, dt)
    # one-sided power so that sum(power) = mean(x^2)
    power = np.abs(spec) ** 2 / n**2
    if n % 2 == 0:
        power[1:-1] *= 2
    else:
        power[1:] *= 2
    k = np.rint(freqs / mains_hz)
    near = np.abs(freqs - k * mains_hz) <= half_width_hz
    dc = freqs == 0
    fund = near & (k == 1)
    harm = near & (k >= 2)
    other = ~(dc | fund | harm)

    def rms(mask):
        return np.sqrt(power[mask].sum(axis=0)).tolist()

    return {
        "dc": (np.mean(x, axis=0)).tolist(),
        "mains": rms(fund),
        "harmonics": rms(harm),
        "other": rms(other),
        "ac_total": np.std(x, axis=0).tolist(),
    }


def analytic_attenuation(f_hz, crossover_hz):
    """|1 / (1 + f_c / (i f))| for a continuous integrator loop."""
    f = np.asarray(f_hz, dtype=float)
    return np.abs(1.0 / (1.0 + crossover_hz / (1j * f)))


def discrete_attenuation(f_hz, crossover_hz, dt):
    """|S(z)| = |(z - 1) / (z - 1 + K dt)| of the sampled integrator loop."""
    z = np.exp(2j * np.pi * np.asarray(f_hz, dtype=float) * dt)
    k = 2 * np.pi * crossover_hz * dt
    return np.abs((z - 1) / (z - 1 + k))


def random_misalignment(max_angle_rad: float, seed=None) -> np.ndarray:
    """A rotation about a random axis by an angle uniform in [0, max_angle]."""
    rng = as_generator(seed)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    ang = rng.uniform(0, max_angle_rad)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(ang) * K + (1 - np.cos(ang)) * (K @ K)


def reference_environment() -> FieldEnvironment:
    """Earth field, a stray gradient, 50 Hz and harmonics (about 1.5 mG rms open loop)."""
    return FieldEnvironment(
        dc=(0.2, -0.05, 0.43),
        gradient=np.array([[1e-3, 2e-4, 0.0], [2e-4, -5e-4, 1e-4], [0.0, 1e-4, -5e-4]]),
        mains=(
            (50.0, (1.2e-3, 0.8e-3, 1.3e-3), 0.3),
            (100.0, (0.2e-3, 0.15e-3, 0.2e-3), 1.1),
            (150.0, (0.3e-3, 0.2e-3, 0.25e-3), 2.0),
            (250.0, (0.08e-3, 0.06e-3, 0.1e-3), 0.7),
        ),
    )


def _solve_segment(c0, A_eig, V, Vinv, forcing):
    """x[n+1] = A x[n] + u[n]; returns x[0..n-1] and x[n] for a segment."""
    y0 = Vinv @ c0
    w = forcing @ Vinv.T  # (n, 3) in the eigenbasis
    n = forcing.shape[0]
    y = np.empty((n + 1, 3), dtype=complex)
    y[0] = y0
    for i, lam in enumerate(A_eig):
        # y[k+1] = lam * y[k] + w[k]
        out, _ = lfilter([1.0], [1.0, -lam], w[:, i], zi=[lam * y0[i]])
        y[1:, i] = out
    x = (y @ V.T).real
    return x[:-1], x[-1]


def run_scenario(events, duration: float, env: FieldEnvironment, cube: ProbeCube,
                 state: ServoState | None = None, seed=None, measure_from: float = 0.0,
                 mains_hz: float = 50.0, divergence_factor: float = 10.0) -> ScenarioResult:
    """Simulate a timeline of loop and probe events for ``duration`` seconds.

    Events: ``probes-reset`` (clears the pre-reset offset and drift),
    ``rezero`` (software re-zeroing of drift), ``loop-on``, ``loop-off``
    (integrator and coil current cleared), ``B-step`` (setpoint change on one
    axis by ``delta`` gauss). Loops start in ``state.enabled``.

    Summary statistics use samples at ``t >= measure_from``. Raises
    UnstableLoopError when the error signal exceeds ``divergence_factor``
    times the largest open-loop reading seen so far.
    """
    state = ServoState() if state is None else replace(state)
    events = _check_timeline(events)
    rng = as_generator(seed)
    dt = state.dt
    n = int(round(duration / dt))
    if n < 1:
        raise ValueError("duration shorter than one step")
    t = state.time + dt * np.arange(n)

    R = cube.misalignment
    static = corner_average(replace(env, mains=()), cube)
    env_center = static[None, :] + env.ac(t)
    noise = rng.normal(0.0, cube.averaged_noise_rms, (n, 3)) if cube.probe_noise_rms > 0 else np.zeros((n, 3))
    if cube.drift_rate > 0:
        steps = rng.normal(0.0, cube.drift_rate * np.sqrt(dt / 3600.0) / np.sqrt(8.0), (n, 3))
        drift = np.cumsum(steps, axis=0)
    else:
        drift = np.zeros((n, 3))

    # piecewise-constant offset and setpoint, plus enable flag
    offset = np.empty((n, 3))
    setpoint = np.empty((n, 3))
    enabled = np.empty(n, dtype=bool)
    cur_offset = np.asarray(cube.pre_reset_offset, dtype=float) + state.probe_offset
    cur_set = state.setpoint.copy()
    cur_on = state.enabled
    drift_ref = np.zeros(3)
    idx_events = {}
    for ev in events:
        idx_events.setdefault(int(np.ceil((ev.t - state.time) / dt - 1e-9)), []).append(ev)
    marks = sorted(k for k in idx_events if 0 <= k < n)
    bounds = [0] + marks + [n]
    for a, b in zip(bounds[:-1], bounds[1:]):
        for ev in idx_events.get(a, []) if a in marks else []:
            if ev.kind == "probes-reset":
                cur_offset = np.zeros(3)
                drift_ref = drift[a].copy()
            elif ev.kind == "rezero":
                drift_ref = drift[a].copy()
            elif ev.kind == "loop-on":
                cur_on = True
            elif ev.kind == "loop-off":
                cur_on = False
            elif ev.kind == "B-step":
                cur_set[AXES[ev.axis]] += ev.delta
        offset[a:b] = cur_offset + drift[a:b] - drift_ref
        setpoint[a:b] = cur_set
        enabled[a:b] = cur_on

    # probe error with coils off
    open_err = env_center @ R.T + noise + offset - setpoint
    ref = np.maximum.accumulate(np.max(np.abs(env_center @ R.T), axis=1)) + 10 * cube.averaged_noise_rms + 1e-12

    K = np.diag(state.loop_gain)
    A = np.eye(3) - dt * K @ R
    lam, V = np.linalg.eig(A)
    Vinv = np.linalg.inv(V)

    coil = np.zeros((n, 3))
    c = state.coil_field.copy()
    seg_bounds = sorted({0, n, *(m for m in marks if 0 < m < n)})
    with np.errstate(over="ignore", invalid="ignore"):
        for a, b in zip(seg_bounds[:-1], seg_bounds[1:]):
            if not enabled[a]:
                # supply modulation disconnected: no coil field, integrator cleared
                c = np.zeros(3)
                coil[a:b] = c
                continue
            u = -dt * (open_err[a:b] @ K.T)
            seg, c = _solve_segment(c, lam, V, Vinv, u)
            coil[a:b] = seg
            err_seg = open_err[a:b] + coil[a:b] @ R.T
            bad = ~np.isfinite(err_seg).all(axis=1) | (np.max(np.abs(err_seg), axis=1) > divergence_factor * ref[a:b])
            if bad.any():
                k = a + int(np.argmax(bad))
                raise UnstableLoopError("loop diverged", last_stable_time=float(t[max(k - 1, 0)]))

    error = open_err + coil @ R.T
    center = env_center + coil
    result = ScenarioResult(t, error, center, open_err, {})
    result.summary = _summarize(result, measure_from, dt, mains_hz, state)
    return result


def _summarize(res: ScenarioResult, measure_from, dt, mains_hz, state) -> dict:
    w = res.window(measure_from)
    if not w.any():
        raise ValueError("measurement window is empty")
    closed = res.error[w] - np.mean(res.error[w], axis=0)
    opened = res.open_loop[w] - np.mean(res.open_loop[w], axis=0)
    closed_rms = float(np.sqrt(np.mean(np.sum(closed**2, axis=1))))
    open_rms = float(np.sqrt(np.mean(np.sum(opened**2, axis=1))))
    return {
        "measure_from_s": float(measure_from),
        "n_samples": int(w.sum()),
        "closed_rms_G": closed_rms,
        "open_rms_G": open_rms,
        "ratio": closed_rms / open_rms if open_rms > 0 else float("nan"),
        "closed_bands_G": band_rms(res.error[w], dt, mains_hz),
        "open_bands_G": band_rms(res.open_loop[w], dt, mains_hz),
        "center_rms_G": float(np.sqrt(np.mean(np.sum((res.center_residual[w] - res.center_residual[w].mean(0)) ** 2, axis=1)))),
        "crossover_hz": state.crossover_hz.tolist(),
        "dt_s": dt,
    }


def measure_attenuation(f_hz: float, crossover_hz: float = 500.0, dt: float = 20e-6,
                        amplitude: float = 1e-3, periods: int = 20, settle: float | None = None) -> float:
    """Closed/open amplitude ratio of a pure sinusoidal disturbance (noise-free)."""
    env = FieldEnvironment(mains=((f_hz, (amplitude, 0.0, 0.0), 0.0),))
    cube = ProbeCube(probe_noise_rms=0.0)
    settle = 10.0 / (2 * np.pi * crossover_hz) if settle is None else settle
    # integer number of periods in the window
    span = periods / f_hz
    res = run_scenario([], settle + span, env, cube, ServoState(crossover_hz=crossover_hz, dt=dt),
                       measure_from=settle)
    w = res.window(settle)
    tt, e = res.time[w], res.error[w, 0]
    ph = 2 * np.pi * f_hz * tt
    basis = np.column_stack([np.sin(ph), np.cos(ph), np.ones_like(ph)])
    coef, *_ = np.linalg.lstsq(basis, e, rcond=None)
    return float(np.hypot(coef[0], coef[1]) / amplitude)
