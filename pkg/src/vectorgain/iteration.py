"""Iteration of the monotone discrete system x_{k+1} = Gamma(x_k).

Provides the raw iterator with convergence/divergence detection plus two
oracle-style checks: convergence of dominated starts under a decreasing
majorant, and the envelope bound on the least fixed point of
x -> MAX{a, Gamma(x)}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .network import (
    GainMatrix, as_plus_vec, check_small_gain, gamma_apply, q_operator,
    vec_max,
)

__all__ = ["IterationResult", "iterate", "sandwich_oracle", "lfp_bound_check"]

TOL_CONV = 1e-9
DIVERGENCE_BOUND = 1e12


@dataclass(frozen=True)
class IterationResult:
    iterates: Tuple[np.ndarray, ...]
    status: str            # "converged" | "stalled" | "diverged"
    steps: int
    sup_norm_trace: Tuple[float, ...]

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def iterate(G: GainMatrix, x0, max_steps: int = 200,
            tol_conv: float = TOL_CONV) -> IterationResult:
    """Apply Gamma repeatedly until the max-norm drops below tol_conv,
    exceeds the divergence bound, or max_steps is exhausted."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    x = as_plus_vec(x0, G.n)
    iterates: List[np.ndarray] = [x]
    trace: List[float] = [float(np.max(x))]
    status = "stalled"
    steps = 0
    for k in range(max_steps):
        if trace[-1] < tol_conv:
            status = "converged"
            steps = k
            break
        if trace[-1] > DIVERGENCE_BOUND:
            status = "diverged"
            steps = k
            break
        x = gamma_apply(G, x)
        iterates.append(x)
        trace.append(float(np.max(x)))
    else:
        steps = max_steps
        if trace[-1] < tol_conv:
            status = "converged"
        elif trace[-1] > DIVERGENCE_BOUND:
            status = "diverged"
    return IterationResult(tuple(iterates), status, steps, tuple(trace))


def sandwich_oracle(G: GainMatrix, x, y, max_steps: int = 200,
                   tol_conv: float = TOL_CONV) -> bool:
    """Convergence of iterates from y when y <= x and Gamma(x) <= x.

    Also asserts the sandwich Gamma^(k)(y) <= Gamma^(k)(x) at every step.
    Preconditions (dominance, decrease at x, small gain) are enforced.
    """
    xv = as_plus_vec(x, G.n)
    yv = as_plus_vec(y, G.n)
    if not np.all(gamma_apply(G, xv) <= xv):
        raise ValueError("precondition Gamma(x) <= x fails")
    if not np.all(yv <= xv):
        raise ValueError("precondition y <= x fails")
    if not check_small_gain(G).holds:
        raise ValueError("precondition: small-gain condition not established")
    cx, cy = xv, yv
    for _ in range(max_steps):
        cx = gamma_apply(G, cx)
        cy = gamma_apply(G, cy)
        if not np.all(cy <= cx):
            raise AssertionError("sandwich Gamma^(k)(y) <= Gamma^(k)(x) broken")
        if np.max(cy) < tol_conv:
            return True
    return bool(np.max(cy) < tol_conv)


def lfp_bound_check(G: GainMatrix, a, max_steps: int = 1000,
                       tol_conv: float = TOL_CONV) -> bool:
    """Least fixed point of x -> MAX{a, Gamma(x)} stays below Q(a).

    The fixed point is reached by monotone iteration from a itself; this
    is the extremal solution of the inequality x <= MAX{a, Gamma(x)}, so
    checking it checks the sharpest case of the envelope bound.
    """
    av = as_plus_vec(a, G.n)
    if not check_small_gain(G).holds:
        raise ValueError("precondition: small-gain condition not established")
    x = av.copy()
    for _ in range(max_steps):
        nxt = vec_max([av, gamma_apply(G, x)])
        if np.max(np.abs(nxt - x)) < tol_conv:
            x = nxt
            break
        x = nxt
    else:
        raise RuntimeError(
            f"fixed-point iteration did not settle in {max_steps} steps")
    return bool(np.all(x <= q_operator(G, av) + tol_conv))
