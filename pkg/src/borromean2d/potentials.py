"""
Radial pair potentials ``gV(r) = lambda_+ V_+ + lambda_- V_-``.

Units: hbar = m = 1 (particle mass), so the reduced mass is 1/2 and
``hbar^2/(2 mu) = 1``.  Every potential below is an energy in those units,
with lengths measured in the model's own scale parameter.

All pointwise-evaluable catalog members compile to a *piecewise Gaussian
form*: a list of radial segments, each carrying a short sum of terms

    amp * r**(2p) * exp(-c r**2) * exp(-kappa (r - r0))

with ``p in {0, 1}``.  Square wells are ``c = 0`` terms, Gaussian sums are
``c > 0`` terms on ``[0, inf)``, the truncated oscillator interior is a
``p = 1`` term plus a constant, and an exponential tail is a ``kappa > 0``
term.  The three-body solver integrates these forms against Gaussian pair
densities in closed form (``kappa = 0``) or by fixed quadrature.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize


class AnalyticOnlyError(TypeError):
    """Raised when an analytic-only potential reaches a grid-based solver."""


class DivergentIntegralError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# piecewise Gaussian form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    amp: float
    c: float = 0.0
    p: int = 0
    kappa: float = 0.0
    r0: float = 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        val = self.amp * np.exp(-self.c * r * r)
        if self.p:
            val = val * r ** (2 * self.p)
        if self.kappa:
            val = val * np.exp(-self.kappa * (r - self.r0))
        return val

    def value(self, r: float) -> float:
        """Scalar evaluation without numpy overhead."""
        val = self.amp * math.exp(-self.c * r * r)
        if self.p:
            val *= r ** (2 * self.p)
        if self.kappa:
            val *= math.exp(-self.kappa * (r - self.r0))
        return val

    def scaled(self, factor: float) -> "Term":
        return replace(self, amp=self.amp * factor)


@dataclass(frozen=True)
class Segment:
    a: float
    b: float  # may be math.inf
    terms: tuple[Term, ...]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for t in self.terms:
            out = out + t(r)
        return out

    def scaled(self, factor: float) -> "Segment":
        return Segment(self.a, self.b, tuple(t.scaled(factor) for t in self.terms))


def _segment_moment(seg: Segment) -> float:
    """Closed-form ``int_a^b r V(r) dr`` for one segment."""
    a, b = seg.a, seg.b
    total = 0.0
    for t in seg.terms:
        if t.kappa:
            f = lambda r, t=t: r * float(t(r))
            upper = b if math.isfinite(b) else np.inf
            val, _ = integrate.quad(f, a, upper, epsabs=0.0, epsrel=1e-12, limit=200)
            total += val
            continue
        c = t.c
        if c == 0.0:
            if not math.isfinite(b):
                raise DivergentIntegralError("constant term on an unbounded segment")
            if t.p == 0:
                total += t.amp * (b * b - a * a) / 2.0
            else:
                total += t.amp * (b**4 - a**4) / 4.0
            continue
        ea = math.exp(-c * a * a)
        eb = math.exp(-c * b * b) if math.isfinite(b) else 0.0
        if t.p == 0:
            total += t.amp * (ea - eb) / (2.0 * c)
        else:
            fa = (a * a + 1.0 / c) * ea
            fb = (b * b + 1.0 / c) * eb if math.isfinite(b) else 0.0
            total += t.amp * (fa - fb) / (2.0 * c)
    return total


@dataclass(frozen=True)
class PiecewiseForm:
    segments: tuple[Segment, ...]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for seg in self.segments:
            mask = (r >= seg.a) & (r < seg.b)
            if np.any(mask):
                out[mask] = seg(r[mask])
        return out

    def scalar(self, r: float) -> float:
        """Scalar evaluation for ODE right-hand sides."""
        for seg in self.segments:
            if seg.a <= r < seg.b:
                return sum(t.value(r) for t in seg.terms)
        return 0.0

    def breakpoints(self) -> list[float]:
        pts = set()
        for seg in self.segments:
            pts.add(seg.a)
            if math.isfinite(seg.b):
                pts.add(seg.b)
        return sorted(p for p in pts if p > 0.0)

    def moment(self) -> float:
        return sum(_segment_moment(s) for s in self.segments)

    def outer_radius(self, tol: float = 1e-15) -> float:
        """Radius beyond which ``|V| r^2 < tol`` (finite support: last breakpoint)."""
        finite = [s.b for s in self.segments if math.isfinite(s.b)]
        rmax = max(finite) if finite else 0.0
        unbounded = [s for s in self.segments if not math.isfinite(s.b)]
        for seg in unbounded:
            env = lambda r, seg=seg: sum(abs(t.amp) * r ** (2 * t.p) * math.exp(
                -t.c * r * r - t.kappa * (r - t.r0)) for t in seg.terms) * r * r - tol
            lo = max(seg.a, 1e-3)
            hi = lo + 1.0
            while env(hi) > 0:
                hi *= 2.0
                if hi > 1e8:
                    raise DivergentIntegralError("potential does not decay")
            if env(lo) > 0:
                rmax = max(rmax, optimize.brentq(env, lo, hi, xtol=1e-10))
            else:
                rmax = max(rmax, seg.a)
        return rmax

    def sign_split(self) -> tuple["PiecewiseForm", "PiecewiseForm"]:
        """Split into ``(max(V,0), min(V,0))`` forms at every sign change."""
        plus, minus = [], []
        for seg in self.segments:
            for a, b in _sign_intervals(seg):
                probe = _interior_point(a, b)
                s = float(seg(probe))
                piece = Segment(a, b, seg.terms)
                if s > 0:
                    plus.append(piece)
                elif s < 0:
                    minus.append(piece)
        return PiecewiseForm(tuple(plus)), PiecewiseForm(tuple(minus))


def _interior_point(a: float, b: float) -> float:
    if math.isfinite(b):
        return 0.5 * (a + b)
    return a + 1.0 if a == 0.0 else a * 1.5


def _sign_intervals(seg: Segment) -> list[tuple[float, float]]:
    f = lambda r: float(seg(r))
    if math.isfinite(seg.b):
        hi = seg.b
    else:
        reach = [math.sqrt(60.0 / t.c) for t in seg.terms if t.c > 0]
        reach += [60.0 / t.kappa for t in seg.terms if t.kappa > 0]
        hi = seg.a + (max(reach) if reach else 50.0)
    grid = np.linspace(seg.a, hi, 4001)
    vals = np.asarray(seg(grid))
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0 and 0 < i:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    edges = [seg.a] + roots + [seg.b]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1) if edges[i + 1] > edges[i]]


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

class PotentialSpec:
    """Base class for the radial potential catalog."""

    analytic_only = False

    def form(self) -> PiecewiseForm:
        raise NotImplementedError

    @property
    def length_scale(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class SquareWellBarrier(PotentialSpec):
    """Attractive well inside ``Rs`` and a repulsive shell out to ``Rl``."""

    lambda_minus: float
    lambda_plus: float
    Rs: float = 1.0
    Rl: float = 2.0

    def __post_init__(self):
        if not (0 < self.Rs < self.Rl):
            raise ValueError("need 0 < Rs < Rl")
        if self.lambda_minus < 0 or self.lambda_plus < 0:
            raise ValueError("strengths must be nonnegative")

    def form(self):
        u = 1.0 / self.Rs**2
        return PiecewiseForm((
            Segment(0.0, self.Rs, (Term(-self.lambda_minus * u),)),
            Segment(self.Rs, self.Rl, (Term(self.lambda_plus * u),)),
        ))

    @property
    def length_scale(self):
        return self.Rs

    def to_dict(self):
        return {"type": "SquareWellBarrier", "lambda_minus": self.lambda_minus,
                "lambda_plus": self.lambda_plus, "Rs": self.Rs, "Rl": self.Rl}


@dataclass(frozen=True)
class CoreWell(PotentialSpec):
    """Repulsive core inside ``Rs`` and an attractive shell out to ``Rl``."""

    lambda_plus: float
    lambda_minus: float
    Rs: float = 1.0
    Rl: float = 2.0

    def __post_init__(self):
        if not (0 < self.Rs < self.Rl):
            raise ValueError("need 0 < Rs < Rl")
        if self.lambda_minus < 0 or self.lambda_plus < 0:
            raise ValueError("strengths must be nonnegative")

    def form(self):
        u = 1.0 / self.Rs**2
        return PiecewiseForm((
            Segment(0.0, self.Rs, (Term(self.lambda_plus * u),)),
            Segment(self.Rs, self.Rl, (Term(-self.lambda_minus * u),)),
        ))

    @property
    def length_scale(self):
        return self.Rs

    def to_dict(self):
        return {"type": "CoreWell", "lambda_plus": self.lambda_plus,
                "lambda_minus": self.lambda_minus, "Rs": self.Rs, "Rl": self.Rl}


@dataclass(frozen=True)
class DeltaShell(PotentialSpec):
    """``lambda_+ delta(r/c - 1)/d^2 - lambda_- delta(r/d - 1)/d^2`` (analytic only)."""

    lambda_plus: float
    lambda_minus: float
    c: float = 1.0
    d: float = 1.0

    analytic_only = True

    def __post_init__(self):
        if not (0 < self.c <= self.d):
            raise ValueError("need 0 < c <= d")

    def form(self):
        raise AnalyticOnlyError("DeltaShell has no pointwise values")

    @property
    def length_scale(self):
        return self.d

    def to_dict(self):
        return {"type": "DeltaShell", "lambda_plus": self.lambda_plus,
                "lambda_minus": self.lambda_minus, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class GaussianSum(PotentialSpec):
    """Sum of ``amplitude * exp(-r^2 / (2 width^2))`` terms."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(a), float(w)) for a, w in self.terms))
        if not self.terms:
            raise ValueError("GaussianSum needs at least one term")
        if any(w <= 0 for _, w in self.terms):
            raise ValueError("widths must be positive")

    def form(self):
        return PiecewiseForm((Segment(0.0, math.inf, tuple(
            Term(a, 1.0 / (2.0 * w * w)) for a, w in self.terms)),))

    @property
    def length_scale(self):
        return max(w for _, w in self.terms)

    def to_dict(self):
        return {"type": "GaussianSum", "terms": [list(t) for t in self.terms]}


@dataclass(frozen=True)
class TailSpec:
    """Nonnegative tail ``amplitude * exp(-rate (r - r_cut))`` beyond the cutoff."""

    form: str = "Zero"
    rate: float = 0.0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.form not in ("Zero", "ExpDecay"):
            raise ValueError(f"unknown tail form {self.form!r}")
        if self.amplitude < 0:
            raise ValueError("tail amplitude must be nonnegative")
        if self.form == "ExpDecay" and self.rate <= 0:
            raise ValueError("ExpDecay tail needs a positive rate")

    def to_dict(self):
        return {"form": self.form, "rate": self.rate, "amplitude": self.amplitude}


@dataclass(frozen=True)
class TruncatedOscillator(PotentialSpec):
    """``g (r^2/(2b^2) - 1)/b^2`` for ``r <= C b / sqrt(g)``, tail beyond."""

    g: float
    C: float
    tail: TailSpec = field(default_factory=TailSpec)
    b: float = 1.0

    def __post_init__(self):
        if self.g <= 0 or self.C <= 0 or self.b <= 0:
            raise ValueError("need g > 0, C > 0, b > 0")

    @property
    def cutoff(self) -> float:
        return self.C * self.b / math.sqrt(self.g)

    @classmethod
    def with_continuous_tail(cls, g: float, C: float, rate: float, b: float = 1.0):
        """Exponential tail that starts at the interior value at the cutoff."""
        rc = C * b / math.sqrt(g)
        edge = g * (rc * rc / (2 * b * b) - 1.0) / b**2
        return cls(g, C, TailSpec("ExpDecay", rate, max(edge, 0.0)), b)

    def form(self):
        g, b, rc = self.g, self.b, self.cutoff
        segs = [Segment(0.0, rc, (Term(g / (2 * b**4), p=1), Term(-g / b**2)))]
        if self.tail.form == "ExpDecay" and self.tail.amplitude > 0:
            segs.append(Segment(rc, math.inf, (Term(self.tail.amplitude, kappa=self.tail.rate, r0=rc),)))
        return PiecewiseForm(tuple(segs))

    @property
    def length_scale(self):
        return self.b

    def to_dict(self):
        return {"type": "TruncatedOscillator", "g": self.g, "C": self.C,
                "tail": self.tail.to_dict(), "b": self.b}


@dataclass(frozen=True)
class Scaled(PotentialSpec):
    """``factor * base``."""

    base: PotentialSpec
    factor: float

    @property
    def analytic_only(self):
        return self.base.analytic_only

    def form(self):
        return PiecewiseForm(tuple(s.scaled(self.factor) for s in self.base.form().segments))

    @property
    def length_scale(self):
        return self.base.length_scale

    def to_dict(self):
        return {"type": "Scaled", "base": self.base.to_dict(), "factor": self.factor}


@dataclass(frozen=True)
class SplitStrength(PotentialSpec):
    """``lambda_+ max(F, 0) + lambda_- min(F, 0)`` for a shape ``F``."""

    base: PotentialSpec
    lambda_plus: float
    lambda_minus: float

    def form(self):
        plus, minus = _split_cached(self.base)
        segs = [s.scaled(self.lambda_plus) for s in plus.segments]
        segs += [s.scaled(self.lambda_minus) for s in minus.segments]
        segs.sort(key=lambda s: s.a)
        return PiecewiseForm(tuple(segs))

    @property
    def length_scale(self):
        return self.base.length_scale

    def to_dict(self):
        return {"type": "SplitStrength", "base": self.base.to_dict(),
                "lambda_plus": self.lambda_plus, "lambda_minus": self.lambda_minus}


@dataclass(frozen=True)
class Piecewise(PotentialSpec):
    """A raw piecewise Gaussian form (the output of :func:`split`)."""

    pieces: PiecewiseForm
    scale: float = 1.0

    def form(self):
        return self.pieces

    @property
    def length_scale(self):
        return self.scale

    def to_dict(self):
        raise TypeError("raw piecewise forms are not part of the config schema")


@functools.lru_cache(maxsize=256)
def _split_cached(spec: PotentialSpec) -> tuple[PiecewiseForm, PiecewiseForm]:
    return spec.form().sign_split()


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _require_pointwise(spec: PotentialSpec):
    if spec.analytic_only:
        raise AnalyticOnlyError(f"{type(spec).__name__} is analytic-only")


def evaluate(spec: PotentialSpec, r):
    """Potential value(s) at radius ``r > 0``."""
    _require_pointwise(spec)
    arr = np.asarray(r, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("evaluate requires r > 0")
    out = spec.form()(arr)
    return float(out) if out.ndim == 0 else out


def net_volume(spec: PotentialSpec) -> float:
    """``int_0^inf V(r) r dr``."""
    if isinstance(spec, DeltaShell):
        return spec.lambda_plus * (spec.c / spec.d) ** 2 - spec.lambda_minus
    if isinstance(spec, Scaled) and isinstance(spec.base, DeltaShell):
        return spec.factor * net_volume(spec.base)
    return spec.form().moment()


def split(spec: PotentialSpec) -> tuple[Piecewise, Piecewise]:
    """Positive and negative parts ``(max(V,0), min(V,0))`` as potentials."""
    _require_pointwise(spec)
    plus, minus = _split_cached(spec)
    return Piecewise(plus, spec.length_scale), Piecewise(minus, spec.length_scale)


def is_purely_attractive(spec: PotentialSpec) -> bool:
    plus, _ = spec.form().sign_split()
    return not plus.segments


# ---------------------------------------------------------------------------
# strength families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrengthFamily:
    """One-parameter-per-sign family ``lambda_+ V_+ + lambda_- V_-`` of a shape.

    Square models and the delta shell carry their own unit shapes; any other
    spec is split at its sign changes (``V_+- = (F +- |F|)/2``).
    """

    shape: PotentialSpec

    def at(self, lambda_minus: float, lambda_plus: float) -> PotentialSpec:
        s = self.shape
        if isinstance(s, (SquareWellBarrier, CoreWell, DeltaShell)):
            return replace(s, lambda_minus=lambda_minus, lambda_plus=lambda_plus)
        return SplitStrength(s, lambda_plus, lambda_minus)

    def unit_parts(self) -> tuple[PotentialSpec, PotentialSpec]:
        """Unit-strength ``(V_+, V_-)``."""
        s = self.shape
        if isinstance(s, (SquareWellBarrier, CoreWell)):
            plus = split(self.at(0.0, 1.0))[0]
            minus = split(self.at(1.0, 0.0))[1]
            return plus, minus
        return split(s)

    def to_dict(self) -> dict:
        return self.shape.to_dict()


def fig3_shape(b: float = 1.0) -> GaussianSum:
    """``exp(-0.5 r^2/b^2) - 2 exp(-2 r^2/b^2)`` in units of ``1/b^2``."""
    return GaussianSum(((1.0 / b**2, b), (-2.0 / b**2, b / 2)))


def nielsen_potential(b: float = 1.0) -> GaussianSum:
    """``2 exp(-r^2/(2b^2)) - 5.7 exp(-2 r^2/b^2)`` in units of ``1/b^2``."""
    return GaussianSum(((2.0 / b**2, b), (-5.7 / b**2, b / 2)))


def spec_from_dict(d: dict) -> PotentialSpec:
    """Rebuild a spec from its config-schema dictionary (unknown keys are errors)."""
    d = dict(d)
    kind = d.pop("type", None)
    builders: dict[str, Callable] = {
        "SquareWellBarrier": lambda: SquareWellBarrier(**_take(d, ["lambda_minus", "lambda_plus", "Rs", "Rl"])),
        "CoreWell": lambda: CoreWell(**_take(d, ["lambda_plus", "lambda_minus", "Rs", "Rl"])),
        "DeltaShell": lambda: DeltaShell(**_take(d, ["lambda_plus", "lambda_minus", "c", "d"])),
        "GaussianSum": lambda: GaussianSum(tuple(tuple(t) for t in _take(d, ["terms"])["terms"])),
        "TruncatedOscillator": lambda: _oscillator(d),
        "Scaled": lambda: Scaled(spec_from_dict(d.pop("base")), float(_take(d, ["factor"])["factor"])),
        "SplitStrength": lambda: _split_strength(d),
    }
    if kind not in builders:
        raise ValueError(f"unknown potential type {kind!r}")
    spec = builders[kind]()
    if d:
        raise ValueError(f"unknown keys for {kind}: {sorted(d)}")
    return spec


def _take(d: dict, keys: Sequence[str]) -> dict:
    out = {}
    for k in keys:
        if k in d:
            out[k] = d.pop(k)
    return out


def _oscillator(d: dict) -> TruncatedOscillator:
    tail = d.pop("tail", None)
    kw = _take(d, ["g", "C", "b"])
    if tail is not None:
        tail = dict(tail)
        t = TailSpec(**_take(tail, ["form", "rate", "amplitude"]))
        if tail:
            raise ValueError(f"unknown tail keys {sorted(tail)}")
        kw["tail"] = t
    return TruncatedOscillator(**kw)


def _split_strength(d: dict) -> SplitStrength:
    base = spec_from_dict(d.pop("base"))
    kw = _take(d, ["lambda_plus", "lambda_minus"])
    return SplitStrength(base, **kw)
