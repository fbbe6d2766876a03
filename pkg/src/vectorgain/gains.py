"""Scalar gain functions as a closed expression algebra.

Gains are continuous, non-decreasing functions on [0, inf) that vanish at
zero, represented as immutable expression trees over a small set of
parametric constructors.  Keeping the representation closed (instead of
accepting arbitrary callables) lets contraction checks be decided exactly
for the families that actually occur in practice, with a grid fallback for
everything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

__all__ = [
    "GainFn", "Zero", "Linear", "Power", "LogExpSq", "Max", "Compose",
    "Scale", "GridSpec", "ContractionVerdict", "GainError", "BracketError",
    "DomainError", "compose_chain", "check_contraction", "invert",
    "gain_to_json", "gain_from_json", "TOL_INV",
]

TOL_INV = 1e-10
_BISECT_MAX_ITER = 200
# exp argument above which LogExpSq switches to its log-space asymptote
_EXP_OVERFLOW = 700.0


class GainError(ValueError):
    """Malformed gain expression or invalid gain operation."""


class BracketError(GainError):
    """Inversion target lies above the gain value at the bracket end."""


class DomainError(GainError):
    """Gain is not strictly increasing where inversion requires it."""


class GainFn:
    """Base class for gain expression nodes.  Instances are immutable."""

    def __call__(self, s: float) -> float:
        if not s >= 0:  # also catches NaN
            raise GainError(f"gain argument must be nonnegative, got {s}")
        return self._eval(s)

    def _eval(self, s: float) -> float:
        raise NotImplementedError


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise GainError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class Zero(GainFn):
    """The identically-zero gain."""

    def _eval(self, s: float) -> float:
        return 0.0


@dataclass(frozen=True)
class Linear(GainFn):
    """s -> k*s with k >= 0."""

    k: float

    def __post_init__(self):
        _require_finite("Linear.k", self.k)
        if self.k < 0:
            raise GainError(f"Linear coefficient must be >= 0, got {self.k}")

    def _eval(self, s: float) -> float:
        return self.k * s


@dataclass(frozen=True)
class Power(GainFn):
    """s -> k*s**p with k >= 0, p > 0."""

    k: float
    p: float

    def __post_init__(self):
        _require_finite("Power.k", self.k)
        _require_finite("Power.p", self.p)
        if self.k < 0:
            raise GainError(f"Power coefficient must be >= 0, got {self.k}")
        if self.p <= 0:
            raise GainError(f"Power exponent must be > 0, got {self.p}")

    def _eval(self, s: float) -> float:
        return self.k * s ** self.p


@dataclass(frozen=True)
class LogExpSq(GainFn):
    """s -> c*[ln(1 + th*(exp(sqrt(2s)) - 1))]**2 with c, th > 0.

    Evaluated in log-space once sqrt(2s) would overflow exp: the value
    approaches c*(sqrt(2s) + ln th)**2 from below.
    """

    c: float
    th: float

    def __post_init__(self):
        _require_finite("LogExpSq.c", self.c)
        _require_finite("LogExpSq.th", self.th)
        if self.c <= 0:
            raise GainError(f"LogExpSq scale must be > 0, got {self.c}")
        if self.th <= 0:
            raise GainError(f"LogExpSq parameter must be > 0, got {self.th}")

    def _eval(self, s: float) -> float:
        t = math.sqrt(2.0 * s)
        if t > _EXP_OVERFLOW:
            inner = t + math.log(self.th)
        else:
            inner = math.log1p(self.th * math.expm1(t))
        return self.c * inner * inner


@dataclass(frozen=True)
class Max(GainFn):
    """Pointwise maximum of two gains."""

    a: GainFn
    b: GainFn

    def __post_init__(self):
        if not isinstance(self.a, GainFn) or not isinstance(self.b, GainFn):
            raise GainError("Max children must be GainFn instances")

    def _eval(self, s: float) -> float:
        return max(self.a._eval(s), self.b._eval(s))


@dataclass(frozen=True)
class Compose(GainFn):
    """Composition outer(inner(s))."""

    outer: GainFn
    inner: GainFn

    def __post_init__(self):
        if not isinstance(self.outer, GainFn) or not isinstance(self.inner, GainFn):
            raise GainError("Compose children must be GainFn instances")

    def _eval(self, s: float) -> float:
        return self.outer._eval(self.inner._eval(s))


@dataclass(frozen=True)
class Scale(GainFn):
    """s -> k*g(s) with k >= 0."""

    k: float
    fn: GainFn

    def __post_init__(self):
        _require_finite("Scale.k", self.k)
        if self.k < 0:
            raise GainError(f"Scale coefficient must be >= 0, got {self.k}")
        if not isinstance(self.fn, GainFn):
            raise GainError("Scale child must be a GainFn instance")

    def _eval(self, s: float) -> float:
        return self.k * self.fn._eval(s)


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced evaluation grid for contraction checks."""

    s_min: float = 1e-12
    s_max: float = 1e12
    points: int = 2048

    def __post_init__(self):
        if not (0 < self.s_min < self.s_max):
            raise GainError("grid requires 0 < s_min < s_max")
        if self.points < 2:
            raise GainError("grid requires at least 2 points")

    def values(self):
        lo, hi = math.log(self.s_min), math.log(self.s_max)
        n = self.points
        return [math.exp(lo + (hi - lo) * i / (n - 1)) for i in range(n)]


@dataclass(frozen=True)
class ContractionVerdict:
    """Outcome of testing g(s) < s for all s > 0.

    ``exact-true`` / ``exact-false`` come from closed-form rules;
    ``grid-verified`` / ``grid-refuted`` from sampling, which is evidence
    rather than proof.  Refuting verdicts carry a witness with
    g(witness) >= witness.
    """

    status: str
    witness: Optional[float] = None
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.status in ("exact-true", "grid-verified")

    @property
    def exact(self) -> bool:
        return self.status in ("exact-true", "exact-false")


def compose_chain(gs: Sequence[GainFn]) -> GainFn:
    """Left-to-right composition g1 o g2 o ... o gm as a single gain."""
    gs = list(gs)
    if not gs:
        raise GainError("compose_chain requires a non-empty list")
    return reduce(lambda acc, g: Compose(acc, g), gs)


def _collapse(g: GainFn) -> GainFn:
    """Algebraic normalization used by the exact contraction rules.

    Rewrites compositions of linear/power gains to a single Power, products
    of half-scaled LogExpSq gains to a single LogExpSq (their parameters
    multiply under composition), and eliminates Zero subtrees.
    """
    if isinstance(g, Scale):
        if g.k == 0:
            return Zero()
        return _collapse(Compose(Linear(g.k), g.fn))
    if isinstance(g, Max):
        a, b = _collapse(g.a), _collapse(g.b)
        if isinstance(a, Zero):
            return b
        if isinstance(b, Zero):
            return a
        return Max(a, b)
    if isinstance(g, Compose):
        outer, inner = _collapse(g.outer), _collapse(g.inner)
        if isinstance(outer, Zero) or isinstance(inner, Zero):
            return Zero()
        if isinstance(outer, Linear):
            outer = Power(outer.k, 1.0)
        if isinstance(inner, Linear):
            inner = Power(inner.k, 1.0)
        if isinstance(outer, Power) and isinstance(inner, Power):
            k = outer.k * inner.k ** outer.p
            p = outer.p * inner.p
            return Linear(k) if p == 1.0 else Power(k, p)
        if (isinstance(outer, LogExpSq) and isinstance(inner, LogExpSq)
                and outer.c == 0.5 and inner.c == 0.5):
            return LogExpSq(0.5, outer.th * inner.th)
        return Compose(outer, inner)
    if isinstance(g, Power) and g.p == 1.0:
        return Linear(g.k)
    if isinstance(g, Power) and g.k == 0:
        return Zero()
    if isinstance(g, Linear) and g.k == 0:
        return Zero()
    return g


def _exact_contraction(g: GainFn) -> Optional[ContractionVerdict]:
    """Closed-form contraction verdict where one exists, else None."""
    if isinstance(g, Zero):
        return ContractionVerdict("exact-true", detail="zero gain")
    if isinstance(g, Linear):
        if g.k < 1:
            return ContractionVerdict("exact-true", detail=f"linear, k={g.k} < 1")
        return ContractionVerdict("exact-false", witness=1.0,
                                  detail=f"linear, k={g.k} >= 1")
    if isinstance(g, Power):
        # k*s**p vs s: for p != 1 the inequality fails near 0 (p < 1)
        # or near infinity (p > 1).
        if g.k == 0:
            return ContractionVerdict("exact-true", detail="zero coefficient")
        if g.p == 1.0:
            return _exact_contraction(Linear(g.k))
        if g.p > 1:
            s = 2.0 * (1.0 / g.k) ** (1.0 / (g.p - 1.0))
        else:
            s = 0.5 * g.k ** (1.0 / (1.0 - g.p))
        if math.isfinite(s) and g(s) >= s:
            return ContractionVerdict(
                "exact-false", witness=s,
                detail=f"power with exponent {g.p} != 1 exceeds identity")
        return None
    if isinstance(g, LogExpSq) and g.c == 0.5:
        # (1/2)[ln(1+th*(e^t - 1))]^2 < t^2/2  iff  th < 1.
        if g.th < 1:
            return ContractionVerdict("exact-true",
                                      detail=f"log-exp-square, th={g.th} < 1")
        return ContractionVerdict("exact-false", witness=1.0,
                                  detail=f"log-exp-square, th={g.th} >= 1")
    if isinstance(g, Max):
        va = _exact_contraction(g.a)
        vb = _exact_contraction(g.b)
        for v in (va, vb):
            if v is not None and v.status == "exact-false":
                return ContractionVerdict("exact-false", witness=v.witness,
                                          detail="max branch: " + v.detail)
        if va is not None and vb is not None:
            return ContractionVerdict("exact-true",
                                      detail="both max branches contract")
    return None


def check_contraction(g: GainFn, grid: Optional[GridSpec] = None) -> ContractionVerdict:
    """Test whether g(s) < s for all s > 0.

    Applies closed-form rules on the normalized tree when possible,
    otherwise samples the log-spaced grid and reports the first failure.
    """
    if grid is None:
        grid = GridSpec()
    verdict = _exact_contraction(_collapse(g))
    if verdict is not None:
        return verdict
    for s in grid.values():
        if g(s) >= s:
            return ContractionVerdict(
                "grid-refuted", witness=s,
                detail=f"g({s:.6g}) = {g(s):.6g} >= {s:.6g}")
    return ContractionVerdict(
        "grid-verified",
        detail=f"{grid.points} log-spaced points on "
               f"[{grid.s_min:g}, {grid.s_max:g}]")


def invert(g: GainFn, y: float, bracket: float = 1e6) -> float:
    """Solve g(s) = y for s in [0, bracket] to within TOL_INV in value.

    Uses the analytic inverse for (collapsed) linear and power gains and
    bisection otherwise.  Requires g strictly increasing on the bracket.
    """
    if y < 0:
        raise GainError(f"inversion target must be >= 0, got {y}")
    if bracket <= 0:
        raise GainError(f"bracket must be > 0, got {bracket}")
    if y == 0:
        return 0.0
    c = _collapse(g)
    if isinstance(c, Zero):
        raise BracketError(f"cannot invert the zero gain at y={y}")
    if isinstance(c, Linear):
        if c.k == 0:
            raise BracketError(f"cannot invert the zero gain at y={y}")
        return y / c.k
    if isinstance(c, Power):
        if c.k == 0:
            raise BracketError(f"cannot invert the zero gain at y={y}")
        return (y / c.k) ** (1.0 / c.p)
    hi_val = g(bracket)
    if hi_val < y:
        raise BracketError(
            f"g({bracket:g}) = {hi_val:g} < y = {y:g}; enlarge the bracket")
    # monotonicity sanity scan; a decrease means the tree is not a gain
    prev = 0.0
    for i in range(1, 33):
        v = g(bracket * i / 32.0)
        if v < prev:
            raise DomainError("gain is decreasing on the bracket")
        prev = v
    lo, hi = 0.0, bracket
    s = 0.5 * bracket
    for _ in range(_BISECT_MAX_ITER):
        s = 0.5 * (lo + hi)
        v = g(s)
        if abs(v - y) <= TOL_INV:
            return s
        if v < y:
            lo = s
        else:
            hi = s
    return s


def gain_to_json(g: GainFn) -> dict:
    """Serialize a gain expression tree to a JSON-compatible dict."""
    if isinstance(g, Zero):
        return {"kind": "zero"}
    if isinstance(g, Linear):
        return {"kind": "linear", "k": g.k}
    if isinstance(g, Power):
        return {"kind": "power", "k": g.k, "p": g.p}
    if isinstance(g, LogExpSq):
        return {"kind": "logexpsq", "c": g.c, "th": g.th}
    if isinstance(g, Max):
        return {"kind": "max", "a": gain_to_json(g.a), "b": gain_to_json(g.b)}
    if isinstance(g, Compose):
        return {"kind": "compose", "outer": gain_to_json(g.outer),
                "inner": gain_to_json(g.inner)}
    if isinstance(g, Scale):
        return {"kind": "scale", "k": g.k, "fn": gain_to_json(g.fn)}
    raise GainError(f"unknown gain node {type(g).__name__}")


def gain_from_json(d: dict) -> GainFn:
    """Deserialize a gain expression tree; raises GainError on bad input."""
    try:
        kind = d["kind"]
    except (TypeError, KeyError):
        raise GainError(f"gain JSON must be an object with a 'kind': {d!r}")
    if kind == "zero":
        return Zero()
    if kind == "linear":
        return Linear(float(d["k"]))
    if kind == "power":
        return Power(float(d["k"]), float(d["p"]))
    if kind == "logexpsq":
        return LogExpSq(float(d["c"]), float(d["th"]))
    if kind == "max":
        return Max(gain_from_json(d["a"]), gain_from_json(d["b"]))
    if kind == "compose":
        return Compose(gain_from_json(d["outer"]), gain_from_json(d["inner"]))
    if kind == "scale":
        return Scale(float(d["k"]), gain_from_json(d["fn"]))
    raise GainError(f"unknown gain kind {kind!r}")
