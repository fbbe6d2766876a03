"""Closed-loop gain synthesis.

Builds, as explicit gain expressions: the per-node envelopes phi_i (the
maximum of the identity and every simple-path chain of couplings leaving
node i), the scalar composite gain theta, the component maps G_i bounding
each Lyapunov channel asymptotically, and the overall input-to-state gain
(the lower comparison function inverted after theta).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .gains import (
    BracketError, Compose, GainFn, Linear, Max, Scale, Zero, compose_chain,
    gain_to_json, invert,
)
from .network import GainMatrix, SmallGainReport, check_small_gain

__all__ = [
    "SynthesisInput", "CompositeGain", "OverallGain", "SmallGainRequired",
    "build_phi", "build_theta", "overall_gain", "simple_path_chains",
]


class SmallGainRequired(RuntimeError):
    """Synthesis needs the cyclic small-gain condition to be established."""


@dataclass(frozen=True)
class SynthesisInput:
    """Everything needed to assemble the composite closed-loop gain.

    gains: coupling gain matrix; zeta: input gain; p_list: per-node
    coupling of the auxiliary channel (all-zero when unused); a1: strictly
    increasing lower comparison function; M: transient overshoot constant.
    """

    gains: GainMatrix
    zeta: GainFn
    p_list: Tuple[GainFn, ...]
    a1: GainFn
    M: float = 1.0

    def __post_init__(self):
        if len(self.p_list) != self.gains.n:
            raise ValueError("p_list length must equal the matrix dimension")
        if self.M < 1.0:
            raise ValueError(f"M must be >= 1, got {self.M}")


def _fold_max(gs: Sequence[GainFn]) -> GainFn:
    gs = [g for g in gs if not isinstance(g, Zero)]
    if not gs:
        return Zero()
    out = gs[0]
    for g in gs[1:]:
        out = Max(out, g)
    return out


def simple_path_chains(G: GainMatrix, i: int) -> List[List[GainFn]]:
    """All chains gamma_{i,j1} o ... o gamma_{j_{l-1},j_l} over simple paths.

    Paths start at node i, repeat no index (including i), have 1..n-1
    edges, and skip any chain through a zero gain.
    """
    n = G.n
    others = [j for j in range(n) if j != i]
    chains: List[List[GainFn]] = []
    for l in range(1, n):
        for path in itertools.permutations(others, l):
            nodes = (i,) + path
            gains = [G.gain(nodes[m], nodes[m + 1]) for m in range(l)]
            if any(isinstance(g, Zero) for g in gains):
                continue
            chains.append(gains)
    return chains


def build_phi(G: GainMatrix,
              report: Optional[SmallGainReport] = None) -> List[GainFn]:
    """Envelope gains phi_i(s) = max{s, all simple-path chains at s}.

    Requires a passing small-gain report (computed if not supplied):
    under it, chains with repeated indices are dominated by simple-path
    chains, so the enumeration here is exhaustive.
    """
    if report is None:
        report = check_small_gain(G)
    if not report.holds:
        raise SmallGainRequired(
            "phi construction requires the small-gain condition; "
            f"failing cycle {report.failing_cycle}")
    phis: List[GainFn] = []
    for i in range(G.n):
        branches: List[GainFn] = [Linear(1.0)]
        for chain in simple_path_chains(G, i):
            branches.append(compose_chain(chain))
        phis.append(_fold_max(branches))
    return phis


def _theta_inner(inp: SynthesisInput, phi: Sequence[GainFn]) -> GainFn:
    """The common argument fed to every phi_i in theta and in G_i.

    max{M*pu(s), M*p(phi_1(zeta(s)), ..., phi_n(zeta(s))), zeta(s)} with
    pu(s) = max{zeta(s), max_i p_i(zeta(s))} and
    p(x) = max_{i,j} max{gamma_ij(x_j), p_i(gamma_ij(x_j))}.
    """
    G, zeta = inp.gains, inp.zeta
    pu = _fold_max([zeta] + [Compose(p, zeta) for p in inp.p_list])
    p_branches: List[GainFn] = []
    for i in range(G.n):
        for j in range(G.n):
            gij = G.gain(i, j)
            if isinstance(gij, Zero) or isinstance(phi[j], Zero):
                continue
            chain = Compose(gij, Compose(phi[j], zeta))
            p_branches.append(chain)
            if not isinstance(inp.p_list[i], Zero):
                p_branches.append(Compose(inp.p_list[i], chain))
    p_of_phi_zeta = _fold_max(p_branches)
    if inp.M != 1.0:
        pu = Scale(inp.M, pu)
        if not isinstance(p_of_phi_zeta, Zero):
            p_of_phi_zeta = Scale(inp.M, p_of_phi_zeta)
    return _fold_max([pu, p_of_phi_zeta, zeta])


def build_theta(inp: SynthesisInput,
                report: Optional[SmallGainReport] = None) -> GainFn:
    """Composite gain theta(s) = max_i phi_i(inner(s)) as a gain tree."""
    phi = build_phi(inp.gains, report)
    inner = _theta_inner(inp, phi)
    if isinstance(inner, Zero):
        return Zero()
    return _fold_max([Compose(f, inner) for f in phi])


class OverallGain:
    """Evaluable a1^{-1} o theta; the inverse is taken at call time.

    The inversion bracket grows geometrically until it covers the target
    value, so callers never pick one by hand.
    """

    def __init__(self, a1: GainFn, theta: GainFn):
        self.a1 = a1
        self.theta = theta

    def __call__(self, s: float) -> float:
        y = self.theta(s)
        if y == 0.0:
            return 0.0
        bracket = 1.0
        while self.a1(bracket) < y:
            bracket *= 2.0
            if bracket > 1e300:
                raise BracketError(
                    f"lower comparison function never reaches y={y:g}")
        return invert(self.a1, y, bracket)

    def to_json(self) -> dict:
        return {"kind": "inverse_compose",
                "outer_inverse": gain_to_json(self.a1),
                "inner": gain_to_json(self.theta)}


@dataclass(frozen=True)
class CompositeGain:
    """The synthesized closed-loop gain objects."""

    phi: Tuple[GainFn, ...]
    theta: GainFn
    gmap: Tuple[GainFn, ...]
    overall: OverallGain

    def to_json(self) -> dict:
        return {
            "phi": [gain_to_json(f) for f in self.phi],
            "theta": gain_to_json(self.theta),
            "gmap": [gain_to_json(g) for g in self.gmap],
            "overall": self.overall.to_json(),
        }


def overall_gain(inp: SynthesisInput,
                 report: Optional[SmallGainReport] = None) -> CompositeGain:
    """Assemble phi, theta, the channel bounds G_i and a1^{-1} o theta."""
    if report is None:
        report = check_small_gain(inp.gains)
    phi = build_phi(inp.gains, report)
    inner = _theta_inner(inp, phi)
    if isinstance(inner, Zero):
        gmap: List[GainFn] = [Zero() for _ in phi]
        theta: GainFn = Zero()
    else:
        gmap = [Compose(f, inner) for f in phi]
        theta = _fold_max(gmap)
    return CompositeGain(phi=tuple(phi), theta=theta, gmap=tuple(gmap),
                         overall=OverallGain(inp.a1, theta))
