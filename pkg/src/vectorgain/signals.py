"""Deterministic input/disturbance signal descriptors.

Every signal is a pure function of time described by a small JSON-able
record, so simulation runs are reproducible from config alone.  The
"noise" kind is seeded piecewise-constant: the value on interval k is the
k-th draw of a fixed generator, independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

__all__ = ["Signal", "signal_from_json", "signal_to_json"]


@dataclass
class Signal:
    """Scalar signal of time.  kinds: zero, constant, sinusoid, piecewise, noise."""

    kind: str = "zero"
    value: float = 0.0                      # constant
    amplitude: float = 0.0                  # sinusoid / noise
    frequency: float = 1.0                  # sinusoid (Hz)
    phase: float = 0.0                      # sinusoid
    times: Optional[List[float]] = None     # piecewise breakpoints (ascending)
    values: Optional[List[float]] = None    # piecewise values, len == len(times)
    seed: int = 0                           # noise
    dt_switch: float = 1.0                  # noise switching period
    _noise_cache: List[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "sinusoid", "piecewise", "noise"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == "piecewise":
            if not self.times or not self.values or len(self.times) != len(self.values):
                raise ValueError("piecewise signal needs matching times/values")
            if any(b <= a for a, b in zip(self.times, self.times[1:])):
                raise ValueError("piecewise breakpoints must be increasing")
        if self.kind == "noise" and self.dt_switch <= 0:
            raise ValueError("noise dt_switch must be > 0")

    def __call__(self, t: float) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.value
        if self.kind == "sinusoid":
            return self.amplitude * math.sin(
                2.0 * math.pi * self.frequency * t + self.phase)
        if self.kind == "piecewise":
            v = self.values[0]
            for bp, val in zip(self.times, self.values):
                if t >= bp:
                    v = val
                else:
                    break
            return v
        # noise
        k = max(0, int(math.floor(t / self.dt_switch)))
        cache = self._noise_cache
        if k >= len(cache):
            rng = np.random.default_rng(self.seed)
            draws = rng.uniform(-self.amplitude, self.amplitude, size=k + 1)
            cache[:] = list(draws)
        return cache[k]


def signal_to_json(sig: Signal) -> dict:
    d = {"kind": sig.kind}
    if sig.kind == "constant":
        d["value"] = sig.value
    elif sig.kind == "sinusoid":
        d.update(amplitude=sig.amplitude, frequency=sig.frequency, phase=sig.phase)
    elif sig.kind == "piecewise":
        d.update(times=list(sig.times), values=list(sig.values))
    elif sig.kind == "noise":
        d.update(amplitude=sig.amplitude, seed=sig.seed, dt_switch=sig.dt_switch)
    return d


def signal_from_json(d: Optional[dict]) -> Signal:
    if d is None:
        return Signal()
    kind = d.get("kind", "zero")
    if kind == "zero":
        return Signal()
    if kind == "constant":
        return Signal(kind="constant", value=float(d["value"]))
    if kind == "sinusoid":
        return Signal(kind="sinusoid", amplitude=float(d["amplitude"]),
                      frequency=float(d.get("frequency", 1.0)),
                      phase=float(d.get("phase", 0.0)))
    if kind == "piecewise":
        return Signal(kind="piecewise", times=[float(t) for t in d["times"]],
                      values=[float(v) for v in d["values"]])
    if kind == "noise":
        return Signal(kind="noise", amplitude=float(d["amplitude"]),
                      seed=int(d.get("seed", 0)),
                      dt_switch=float(d.get("dt_switch", 1.0)))
    raise ValueError(f"unknown signal kind {kind!r}")
