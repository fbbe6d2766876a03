"""Fixed-step integrators for the three system kinds.

All integrators are classical 4-stage Runge-Kutta on a deterministic grid:
plain for ODEs, method-of-steps with grid-aligned delays for retarded
equations, and an event loop computing successive sampling instants for
sampled-data systems.  Fixed stepping is deliberate: reproducibility of
validation runs matters more than efficiency at this scale.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .models import SystemSpec, max_delay, model_delays, model_dim, model_rhs

__all__ = [
    "Trajectory", "SimulationError", "FiniteEscapeError", "ConfigError",
    "integrate_ode", "integrate_delay", "integrate_sampled", "log_transform",
]

ESCAPE_BOUND = 1e12
DELAY_ALIGN_TOL = 1e-12


class SimulationError(RuntimeError):
    pass


class ConfigError(SimulationError):
    pass


class FiniteEscapeError(SimulationError):
    def __init__(self, time: float):
        super().__init__(f"state norm exceeded {ESCAPE_BOUND:g} at t = {time:g}")
        self.time = time


@dataclass(frozen=True)
class Trajectory:
    """Time grid with state samples.

    times is uniform for ode/delay runs; for sampled-data runs it is the
    union of the locally refined inter-sample grids.  history, when
    present, holds the initial segment on [t0 - r, t0] (its last row
    coincides with states[0]).
    """

    times: np.ndarray
    states: np.ndarray
    dt: float
    sampling_times: Optional[np.ndarray] = None
    history_times: Optional[np.ndarray] = None
    history_states: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def csv_rows(self):
        yield "t," + ",".join(f"x{i+1}" for i in range(self.n))
        for t, row in zip(self.times, self.states):
            yield f"{float(t)!r}," + ",".join(repr(float(v)) for v in row)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.csv_rows():
                fh.write(line + "\n")


def _check_escape(x: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > ESCAPE_BOUND:
        raise FiniteEscapeError(t)


def _rk4_step(f, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_ode(spec: SystemSpec, x0, horizon: float, dt: float,
                  t0: float = 0.0) -> Trajectory:
    """RK4 on a uniform grid for an ODE model."""
    if spec.kind != "ode":
        raise ConfigError(f"integrate_ode requires kind='ode', got {spec.kind!r}")
    if dt <= 0 or dt > horizon:
        raise ConfigError("need 0 < dt <= horizon")
    n = model_dim(spec)
    x = np.asarray(x0, dtype=float).reshape(n)
    rhs = model_rhs(spec)
    f = lambda t, y: np.asarray(rhs(t, y), dtype=float).reshape(n)
    steps = int(round(horizon / dt))
    times = t0 + dt * np.arange(steps + 1)
    states = np.empty((steps + 1, n))
    states[0] = x
    for k in range(steps):
        x = _rk4_step(f, times[k], x, dt)
        _check_escape(x, times[k + 1])
        states[k + 1] = x
    return Trajectory(times=times, states=states, dt=dt)


class _History:
    """Grid-backed accessor for delayed state values.

    interp(t) linearly interpolates between stored nodes; window_absmax(t)
    returns per-channel sup of |x| over the trailing delay window, read
    from stored nodes (first-order accurate between nodes, like the stage
    interpolation itself).  Frontier queries are served from per-channel
    monotone deques so the sliding maximum costs O(1) amortized per step.
    """

    def __init__(self, times: np.ndarray, states: np.ndarray, dt: float,
                 r: float, filled: int):
        self.times = times
        self.states = states
        self.dt = dt
        self.r = r
        self.filled = filled  # number of valid rows
        n = states.shape[1]
        # deques of (row index, |value|), indices increasing, values decreasing
        self._deques: List[deque] = [deque() for _ in range(n)]
        self._pushed = 0
        self._push_rows(filled)

    def _push_rows(self, upto: int) -> None:
        for k in range(self._pushed, upto):
            row = np.abs(self.states[k])
            for ch, dq in enumerate(self._deques):
                v = row[ch]
                while dq and dq[-1][1] <= v:
                    dq.pop()
                dq.append((k, v))
        self._pushed = upto

    def advance(self, filled: int) -> None:
        """Mark rows below `filled` as valid and index them for window queries."""
        self.filled = filled
        self._push_rows(filled)

    def interp(self, t: float) -> np.ndarray:
        pos = (t - self.times[0]) / self.dt
        i = int(math.floor(pos))
        i = min(max(i, 0), self.filled - 1)
        frac = pos - i
        if frac <= 0 or i + 1 >= self.filled:
            return self.states[i]
        return (1.0 - frac) * self.states[i] + frac * self.states[i + 1]

    def window_absmax(self, t: float) -> np.ndarray:
        lo = (t - self.r - self.times[0]) / self.dt
        i0 = max(int(math.floor(lo)), 0)
        i1 = min(int(math.ceil((t - self.times[0]) / self.dt)) + 1, self.filled)
        if i1 <= i0:
            i0, i1 = self.filled - 1, self.filled
        if i1 >= self.filled:
            # frontier query: window start only moves forward, so front
            # entries below i0 are never needed again
            out = np.empty(len(self._deques))
            for ch, dq in enumerate(self._deques):
                while dq and dq[0][0] < i0:
                    dq.popleft()
                out[ch] = dq[0][1] if dq else np.abs(self.states[i1 - 1, ch])
            return out
        return np.max(np.abs(self.states[i0:i1]), axis=0)


def _history_array(history, r: float, dt: float, n: int) -> np.ndarray:
    """Sample the initial segment on [-r, 0] onto the grid."""
    m = int(round(r / dt))
    ts = dt * np.arange(-m, 1)
    if callable(history):
        return np.array([np.asarray(history(t), dtype=float).reshape(n) for t in ts])
    arr = np.asarray(history, dtype=float)
    if arr.ndim == 1:
        return np.tile(arr.reshape(1, n), (m + 1, 1))
    if arr.shape == (m + 1, n):
        return arr.copy()
    raise ConfigError(
        f"history must be a callable, a constant n-vector, or a ({m + 1}, {n}) array")


def integrate_delay(spec: SystemSpec, history, horizon: float,
                    dt: float) -> Trajectory:
    """Method of steps with RK4 inside each step.

    Every model delay must sit on the grid (an integer multiple of dt);
    delayed values at half-step stage times are linearly interpolated
    between stored nodes.  The history covers [-r, 0] and may be given as
    a callable of t, a constant vector, or a pre-sampled array.
    """
    if spec.kind != "delay":
        raise ConfigError(f"integrate_delay requires kind='delay', got {spec.kind!r}")
    if dt <= 0 or dt > horizon:
        raise ConfigError("need 0 < dt <= horizon")
    for tau in model_delays(spec):
        ratio = tau / dt
        if abs(ratio - round(ratio)) > DELAY_ALIGN_TOL * max(1.0, ratio):
            raise ConfigError(
                f"delay {tau} is not an integer multiple of dt = {dt}")
    n = model_dim(spec)
    r = max_delay(spec)
    m = int(round(r / dt))
    hist_states = _history_array(history, r, dt, n)
    steps = int(round(horizon / dt))
    times = dt * np.arange(-m, steps + 1)
    states = np.empty((m + steps + 1, n))
    states[: m + 1] = hist_states
    hist = _History(times, states, dt, r, filled=m + 1)
    rhs = model_rhs(spec)
    f = lambda t, y: np.asarray(rhs(t, y, hist), dtype=float).reshape(n)
    x = states[m].copy()
    for k in range(steps):
        t = times[m + k]
        x = _rk4_step(f, t, x, dt)
        _check_escape(x, t + dt)
        states[m + k + 1] = x
        hist.advance(m + k + 2)
    return Trajectory(times=times[m:], states=states[m:], dt=dt,
                      history_times=times[: m + 1],
                      history_states=states[: m + 1].copy())


def _period_fn(spec: SystemSpec) -> Callable[[np.ndarray, float], float]:
    d = spec.h or {"kind": "constant", "value": 0.1}
    kind = d.get("kind", "constant")
    if kind == "constant":
        h0 = float(d["value"])
        return lambda x, u: h0
    if kind == "state_norm":
        # h(x, u) = h0 / (1 + |x|): faster sampling far from the origin
        h0 = float(d["value"])
        return lambda x, u: h0 / (1.0 + float(np.linalg.norm(x)))
    raise ConfigError(f"unknown sampling-period kind {kind!r}")


def integrate_sampled(spec: SystemSpec, x0, horizon: float, dt: float,
                      t0: float = 0.0) -> Trajectory:
    """Sampled-data execution loop.

    Per sampling step: the next instant is the current one plus the period
    function of the held state, shrunk by exp(-dtilde); the flow on the
    inter-sample interval integrates the dynamics with the state held at
    the last instant; the new held state is the left limit at the next
    instant.  Each interval is refined so its endpoint lands on a node.
    """
    if spec.kind != "sampled":
        raise ConfigError(
            f"integrate_sampled requires kind='sampled', got {spec.kind!r}")
    if dt <= 0 or dt > horizon:
        raise ConfigError("need 0 < dt <= horizon")
    n = model_dim(spec)
    x = np.asarray(x0, dtype=float).reshape(n)
    rhs = model_rhs(spec)
    h_fn = _period_fn(spec)
    u_sig, dtilde = spec.input_signal, spec.dtilde
    tau = t0
    t_end = t0 + horizon
    times: List[float] = [tau]
    states: List[np.ndarray] = [x.copy()]
    sampling: List[float] = [tau]
    while tau < t_end - 1e-15:
        h_val = h_fn(x, u_sig(tau))
        if not (h_val > 0):
            raise ConfigError(f"sampling period must be positive, got {h_val}")
        gap = math.exp(-dtilde(tau)) * h_val
        tau_next = tau + gap
        span = min(tau_next, t_end) - tau
        substeps = max(1, int(math.ceil(span / dt - 1e-12)))
        hstep = span / substeps
        held = x.copy()
        f = lambda t, y: np.asarray(rhs(t, y, held), dtype=float).reshape(n)
        for k in range(substeps):
            t = tau + k * hstep
            x = _rk4_step(f, t, x, hstep)
            _check_escape(x, t + hstep)
            times.append(t + hstep)
            states.append(x.copy())
        tau = tau_next
        if tau <= t_end + 1e-15:
            sampling.append(tau)
    return Trajectory(times=np.asarray(times), states=np.asarray(states),
                      dt=dt, sampling_times=np.asarray(sampling))


def log_transform(X, Xstar) -> np.ndarray:
    """Componentwise ln(X / X*) for positive X, X*.

    Accepts a vector or an array of state rows; shape is preserved.
    """
    Xa = np.asarray(X, dtype=float)
    Xs = np.asarray(Xstar, dtype=float)
    if np.any(Xs <= 0):
        raise ValueError("reference point must be strictly positive")
    if np.any(Xa <= 0):
        raise ValueError("log transform requires strictly positive components")
    return np.log(Xa / Xs)
