"""Trajectory- and sample-based validation of the stability certificates.

Three checks live here: sampled falsification of the per-channel decay
implication (premise on the gains, conclusion on the Lyapunov derivative),
tail-based convergence verdicts on simulated trajectories, and the
asymptotic-gain bound of each Lyapunov channel against the synthesized
channel maps.  All are evidence at the reported sampling density or
horizon, never proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .gains import GainFn, Zero
from .models import SystemSpec, make_g, biochem_equilibrium
from .network import GainMatrix
from .simulate import Trajectory

__all__ = [
    "LyapunovSetup", "InconclusiveError", "quadratic_channels",
    "check_implication", "recheck_violation", "check_convergence",
    "check_asymptotic_gain", "ldn_rho", "biochem_rho_first", "biochem_rho_chain",
]

TOL_IMPL = 1e-8
TOL_TAIL = 1e-6
TAIL_FRACTION = 0.2
TOL_GAIN = 0.05


class InconclusiveError(RuntimeError):
    """Not enough data to produce a verdict (e.g. horizon too short)."""


def quadratic_channels(n: int) -> List[Callable[[np.ndarray], float]]:
    """The standard per-block channels v_i(x) = x_i^2 / 2."""
    return [(lambda row, i=i: 0.5 * float(row[i]) ** 2) for i in range(n)]


def ldn_rho(a: Sequence[float], lam: float) -> List[Callable[[float], float]]:
    """Decay rates 2*(1-lam)*a_i*s for the linear delay network."""
    return [(lambda s, ai=float(ai): 2.0 * (1.0 - lam) * ai * s) for ai in a]


def biochem_rho_first(a1: float, lam: float, theta: float,
                      b: float) -> Callable[[float], float]:
    """Decay rate of the first (g-curve fed) channel of the circuit."""

    def rho(s: float) -> float:
        t = math.sqrt(2.0 * s)
        if t == 0.0:
            return 0.0
        em = math.expm1(t)
        branch1 = (1.0 - lam / theta) * (1.0 - math.exp(-t))
        branch2 = (b + 1.0 - b / theta) * em / (b + 1.0 + (b / theta) * em)
        return a1 * t * min(branch1, branch2)

    return rho


def biochem_rho_chain(ai: float, mu: float) -> Callable[[float], float]:
    """Decay rate of the cascade channels of the circuit."""

    def rho(s: float) -> float:
        t = math.sqrt(2.0 * s)
        if t == 0.0:
            return 0.0
        return ((1.0 - 1.0 / mu) * ai * t * (1.0 - math.exp(-t))
                / (1.0 + math.expm1(t) / mu))

    return rho


@dataclass
class LyapunovSetup:
    """Gains, input gain and decay rates tied to a family of channels."""

    gains: GainMatrix
    zeta: GainFn = field(default_factory=Zero)
    rho_list: Optional[List[Callable[[float], float]]] = None

    def __post_init__(self):
        if self.rho_list is not None and len(self.rho_list) != self.gains.n:
            raise ValueError("rho_list length must equal the matrix dimension")


# ---------------------------------------------------------------------------
# Per-model worst-case channel derivatives.  Each evaluator receives the
# sampled point (channel index, pointwise value x_i, delayed channel
# levels V_j, input magnitude u) and returns the supremum of the channel
# derivative over admissible disturbances and delayed arguments within
# the Razumikhin bounds sqrt(2 V_j).
# ---------------------------------------------------------------------------

def _ldn_deriv_sup(spec: SystemSpec):
    a = np.asarray(spec.params["a"], dtype=float)
    c = np.asarray(spec.params["c"], dtype=float)
    bu = float(spec.params.get("bu", 0.0))

    def dsup(i: int, xi: float, V: np.ndarray, u: float) -> float:
        drive = float(np.max(c[i] * np.sqrt(2.0 * V))) + bu * abs(u)
        return -a[i] * xi * xi + abs(xi) * drive

    return dsup


def _biochem_deriv_sup(spec: SystemSpec):
    a = np.asarray(spec.params["a"], dtype=float)
    g = make_g(spec.params["g"])
    xn_star = float(biochem_equilibrium(spec)[-1])
    g_star = g(xn_star)
    n = a.size

    def dsup(i: int, xi: float, V: np.ndarray, u: float) -> float:
        if i == 0:
            bound = math.sqrt(2.0 * V[n - 1])
            ws = np.linspace(-bound, bound, 41)
            vals = [a[0] * xi * (g(xn_star * math.exp(w)) / g_star
                                 * math.exp(-xi) - 1.0) for w in ws]
            return max(vals)
        bound = math.sqrt(2.0 * V[i - 1])
        cands = [a[i] * xi * (math.exp(w - xi) - 1.0)
                 for w in (-bound, 0.0, bound)]
        return max(cands)

    return dsup


_DERIV_SUP = {
    "linear_delay_network": _ldn_deriv_sup,
    "biochem_circuit": _biochem_deriv_sup,
}


def _deriv_sup(spec: SystemSpec):
    try:
        return _DERIV_SUP[spec.model](spec)
    except KeyError:
        raise ValueError(
            f"implication check has no derivative evaluator for model "
            f"{spec.model!r}")


def check_implication(setup: LyapunovSetup, model: SystemSpec,
                      sample_count: int = 10_000, radius: float = 10.0,
                      seed: int = 0, tol_impl: float = TOL_IMPL) -> List[Dict]:
    """Sampled falsification of the per-channel decay implication.

    Samples channel points and delayed levels log-uniformly up to radius;
    wherever the premise (every coupling gain of the delayed levels, and
    the input gain of the input, at or below the channel value) holds,
    the worst-case channel derivative must not exceed -rho_i of the
    channel value plus tol_impl.  Returns the violations found; an empty
    list means not falsified at this density.
    """
    if setup.rho_list is None:
        raise ValueError("implication check requires rho_list")
    G = setup.gains
    n = G.n
    dsup = _deriv_sup(model)
    rng = np.random.default_rng(seed)
    has_input = not isinstance(setup.zeta, Zero)
    violations: List[Dict] = []
    lo, hi = math.log(1e-6 * radius), math.log(radius)
    for _ in range(sample_count):
        i = int(rng.integers(n))
        xi = float(np.exp(rng.uniform(lo, hi))) * (1 if rng.random() < 0.5 else -1)
        V = np.exp(rng.uniform(lo, hi, size=n)) ** 2 / 2.0
        qi = 0.5 * xi * xi
        u = float(np.exp(rng.uniform(lo, hi))) if has_input else 0.0
        if has_input and setup.zeta(u) > qi:
            continue
        premise = all(
            isinstance(G.gain(i, j), Zero) or G.gain(i, j)(V[j]) <= qi
            for j in range(n))
        if not premise:
            continue
        deriv = dsup(i, xi, V, u)
        bound = -setup.rho_list[i](qi)
        if deriv > bound + tol_impl:
            violations.append({
                "i": i + 1, "x_i": xi, "V": [float(v) for v in V],
                "u": u, "derivative": deriv, "bound": bound,
            })
    return violations


def recheck_violation(setup: LyapunovSetup, model: SystemSpec,
                      violation: Dict, tol_impl: float = TOL_IMPL) -> bool:
    """Re-evaluate one reported violation point in isolation."""
    i = violation["i"] - 1
    xi = violation["x_i"]
    V = np.asarray(violation["V"], dtype=float)
    u = violation.get("u", 0.0)
    qi = 0.5 * xi * xi
    G = setup.gains
    premise = all(
        isinstance(G.gain(i, j), Zero) or G.gain(i, j)(V[j]) <= qi
        for j in range(G.n))
    if not isinstance(setup.zeta, Zero) and setup.zeta(abs(u)) > qi:
        premise = False
    if not premise:
        return False
    deriv = _deriv_sup(model)(i, xi, V, u)
    return deriv > -setup.rho_list[i](qi) + tol_impl


def _tail(traj: Trajectory, tail_fraction: float) -> np.ndarray:
    count = traj.states.shape[0]
    start = int(math.floor(count * (1.0 - tail_fraction)))
    if count - start < 10:
        raise InconclusiveError(
            f"tail holds only {count - start} samples; lengthen the horizon")
    return traj.states[start:]


def check_convergence(traj: Trajectory,
                      V_list: Sequence[Callable[[np.ndarray], float]],
                      tol_tail: float = TOL_TAIL,
                      tail_fraction: float = TAIL_FRACTION) -> List[Dict]:
    """Per-channel verdict: tail sup of V_i below tol_tail."""
    tail = _tail(traj, tail_fraction)
    out = []
    for v in V_list:
        sup = max(float(v(row)) for row in tail)
        out.append({"status": "converged" if sup < tol_tail else "not-converged",
                    "tail_sup": sup, "tol": tol_tail})
    return out


def check_asymptotic_gain(traj: Trajectory,
                          V_list: Sequence[Callable[[np.ndarray], float]],
                          gmap: Sequence[GainFn], u_sup: float,
                          tol_gain: float = TOL_GAIN,
                          tail_fraction: float = TAIL_FRACTION) -> List[Dict]:
    """Per-channel check: tail sup of V_i within (1+tol)*G_i(u_sup).

    The tail restriction excludes the transient, so this tests only the
    asymptotic-gain consequence of the closed-loop estimate.
    """
    if u_sup < 0:
        raise ValueError("u_sup must be >= 0")
    if len(gmap) != len(V_list):
        raise ValueError("gmap and V_list lengths must match")
    tail = _tail(traj, tail_fraction)
    count = traj.states.shape[0]
    start = count - tail.shape[0]
    out = []
    for v, gi in zip(V_list, gmap):
        vals = np.array([float(v(row)) for row in tail])
        bound = (1.0 + tol_gain) * gi(u_sup)
        k = int(np.argmax(vals))
        sup = float(vals[k])
        if sup <= bound:
            out.append({"status": "satisfied", "tail_sup": sup, "bound": bound,
                        "margin": bound - sup})
        else:
            out.append({"status": "violated", "tail_sup": sup, "bound": bound,
                        "t": float(traj.times[start + k]), "value": sup})
    return out
