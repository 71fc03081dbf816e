"""
Two-body binding in two dimensions (M = 0).

Three independent routes decide whether a pair potential binds:

* the zero-energy integral equation
      phi(r) = 1 + int_0^r s ln(r/s) V(s) phi(s) ds
  marched with product trapezoidal quadrature (plus Richardson
  extrapolation of the binding functional ``int r V phi dr``);
* a negative/zero-energy ODE oracle: the radial equation in ``t = ln r``
  written in Pruefer variables, so node counting is exact and nothing
  overflows behind strong barriers;
* closed-form threshold equations for the square well with an outer
  barrier and the square well with an inner core.

Units: hbar^2/(2 mu) = 1, i.e. the radial equation is
``-(1/r)(r phi')' + V phi = E phi``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from . import specfun as sf
from .potentials import (
    AnalyticOnlyError,
    CoreWell,
    DeltaShell,
    PotentialSpec,
    SquareWellBarrier,
    StrengthFamily,
    net_volume,
)

LAMBDA_PLUS_CEILING = 1e6


class GridTooCoarseError(RuntimeError):
    pass


class NonMonotoneFamilyError(RuntimeError):
    pass


class Method(str, enum.Enum):
    INTEGRAL_EQ = "IntegralEq"
    ANALYTIC_BARRIER = "AnalyticBarrier"
    ANALYTIC_CORE = "AnalyticCore"
    WEAK_LIMIT = "WeakLimit"
    ODE_ORACLE = "OdeOracle"


@dataclass
class RadialFunction:
    grid: np.ndarray
    values: np.ndarray
    value_at_origin: float = 1.0
    outer_slope: float = 0.0
    log_scale: float = 0.0  # true values are values * exp(log_scale)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or len(self.grid) < 2 or len(self.grid) != len(self.values):
            raise ValueError("grid and values must be 1-D sequences of equal length >= 2")
        if np.any(np.diff(self.grid) < 0) or self.grid[0] < 0:
            raise ValueError("grid must be nondecreasing and start at r >= 0")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def __call__(self, r):
        return np.interp(r, self.grid, self.values) * math.exp(self.log_scale)


@dataclass(frozen=True)
class ThresholdPoint:
    lambda_minus: float
    lambda_plus_cr: float  # math.inf marks "bound for every repulsion"
    method: Method
    residual: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.lambda_plus_cr)


@dataclass
class BoundState2:
    energy: float
    rms_radius: float
    wavefunction: RadialFunction
    node_count: int


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def potential_range(spec: PotentialSpec, tol: float = 1e-15) -> float:
    if spec.analytic_only:
        raise AnalyticOnlyError(f"{type(spec).__name__} is analytic-only")
    return spec.form().outer_radius(tol)


def _interval_nodes(a: float, b: float, density: Callable, r_min: float) -> np.ndarray:
    lin = np.linspace(a, b, 2001)
    geo = np.geomspace(max(a, r_min), b, 2001)
    probes = np.unique(np.concatenate([lin, geo]))
    dens = density(probes)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(probes))])
    m = max(2, int(math.ceil(cum[-1])))
    nodes = np.interp(np.linspace(0.0, cum[-1], m + 1), cum, probes)
    nodes[0], nodes[-1] = a, b
    return nodes


def volterra_grid(spec: PotentialSpec, n: int = 4000, r_max: Optional[float] = None):
    """Graded radial grid with every breakpoint duplicated (left/right limits).

    Returns ``(r, V)`` arrays; ``V`` holds one-sided limits at duplicated
    breakpoints so that quadrature never straddles a jump.
    """
    form = spec.form()
    R = potential_range(spec) if r_max is None else r_max
    R = max(R, 1e-12)
    r_min = 1e-6 * R
    beta, H, c = 40.0 / n, 4.0 * R / n, 200.0 / n

    def density(r):
        k = np.sqrt(np.abs(form(r)))
        return np.maximum(np.maximum(1.0 / (beta * r), 1.0 / H), k / c)

    bps = [p for p in form.breakpoints() if r_min < p < R]
    edges = [r_min] + bps + [R, 2.0 * R]
    rs, vs = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes = _interval_nodes(a, b, density, r_min)
        v = form(nodes)
        v[-1] = float(form(np.nextafter(b, 0.0)))
        if a >= R:
            v[:] = 0.0
        rs.append(nodes)
        vs.append(v)
    return np.concatenate(rs), np.concatenate(vs)


def _refine(r: np.ndarray, V: np.ndarray, spec: PotentialSpec):
    """Insert midpoints into every nondegenerate interval."""
    form = spec.form()
    mids = 0.5 * (r[1:] + r[:-1])
    keep = r[1:] > r[:-1]
    R_end = r[-1] / 2.0
    vm = form(mids)
    vm[mids >= R_end] = 0.0
    out_r, out_v = [r[0]], [V[0]]
    for i in range(len(mids)):
        if keep[i]:
            out_r.append(mids[i])
            out_v.append(vm[i])
        out_r.append(r[i + 1])
        out_v.append(V[i + 1])
    return np.array(out_r), np.array(out_v)


# ---------------------------------------------------------------------------
# zero-energy integral equation
# ---------------------------------------------------------------------------

_RESCALE = 1e150


def _march(r: np.ndarray, V: np.ndarray):
    """Product-trapezoid march of the zero-energy Volterra equation.

    Returns ``(phi, A, log_scale)`` where ``phi * exp(log_scale)`` is the
    solution and ``A * exp(log_scale) = int_0^R r V phi dr``.
    """
    n = len(r)
    phi = np.empty(n)
    r0, v0 = float(r[0]), float(V[0])
    # series start: phi ~ 1 + V r^2/4 near the origin
    C = v0 * r0 * r0 / 4.0
    A = v0 * r0 * r0 / 2.0
    src = 1.0
    log_scale = 0.0
    phi0 = src + C
    phi[0] = phi0
    q_prev = r0 * v0 * phi0
    r_prev = r0
    rl = r.tolist()
    vl = V.tolist()
    for i in range(1, n):
        ri = rl[i]
        h = ri - r_prev
        if h > 0.0:
            d = math.log(ri / r_prev)
            C += d * (A + 0.5 * h * q_prev)
        p = src + C
        q = ri * vl[i] * p
        A += 0.5 * h * (q_prev + q)
        if abs(p) > _RESCALE:
            C /= _RESCALE
            A /= _RESCALE
            p /= _RESCALE
            q /= _RESCALE
            src /= _RESCALE
            phi[:i] /= _RESCALE
            log_scale += math.log(_RESCALE)
        phi[i] = p
        q_prev = q
        r_prev = ri
    return phi, A, log_scale


def _integral_residual(r, V, phi, log_scale) -> float:
    """Max relative residual of the integral equation on the grid.

    The Volterra integral is re-evaluated with vectorized cumulative sums
    from the marched ``phi``; a mismatch flags overflow or rescaling slips.
    """
    q = r * V * phi
    h = np.diff(r)
    A = q[0] * r[0] / 2.0 + np.concatenate([[0.0], np.cumsum(0.5 * h * (q[1:] + q[:-1]))])
    src = math.exp(-log_scale)
    C = np.empty_like(r)
    C[0] = q[0] * r[0] / 4.0
    C[1:] = C[0] + np.cumsum(np.diff(np.log(r)) * (A[:-1] + 0.5 * h * q[:-1]))
    scale = np.maximum(np.abs(phi), src)
    return float(np.max(np.abs(phi - (src + C)) / scale))


@dataclass
class _ZeroEnergy:
    phi: RadialFunction
    functional: float  # Richardson-extrapolated int r V phi dr (sign-exact scale)
    functional_coarse: float
    log_scale: float
    nodes: int
    residual: float


def _solve_zero_energy(spec: PotentialSpec, n: int = 4000, richardson: bool = True) -> _ZeroEnergy:
    r, V = volterra_grid(spec, n)
    phi, A, L = _march(r, V)
    res = _integral_residual(r, V, phi, L)
    if richardson:
        r2, V2 = _refine(r, V, spec)
        phi2, A2, L2 = _march(r2, V2)
        Lc = max(L, L2)
        F1 = A * math.exp(L - Lc)
        F2 = A2 * math.exp(L2 - Lc)
        F = (4.0 * F2 - F1) / 3.0
        res = max(res, _integral_residual(r2, V2, phi2, L2))
        phi_out, r_out, L_out = phi2, r2, L2
    else:
        Lc = L
        F1 = F = A
        phi_out, r_out, L_out = phi, r, L
    rel = phi_out * math.exp(L_out - Lc)
    nodes = int(np.sum(np.sign(rel[1:]) * np.sign(rel[:-1]) < 0))
    # outer slope from the field-free tail (last two grid points)
    slope = (rel[-1] - rel[-2]) / (r_out[-1] - r_out[-2])
    rf = RadialFunction(r_out, rel, value_at_origin=float(rel[0]), outer_slope=float(slope), log_scale=Lc)
    return _ZeroEnergy(rf, F, F1, Lc, nodes, res)


def zero_energy_solution(spec: PotentialSpec, grid: Optional[Sequence[float]] = None,
                         n: int = 4000, tol: float = 1e-9) -> RadialFunction:
    """Regular zero-energy solution ``phi(0, r)`` normalized to 1 at the origin.

    With an explicit ``grid`` the march runs on exactly those radii (the grid
    must reach the potential range); otherwise a graded default grid of about
    ``n`` points is built from the potential's breakpoints and local
    wavenumber.  Raises :class:`GridTooCoarseError` when the integral
    equation residual exceeds ``tol``.
    """
    if spec.analytic_only:
        raise AnalyticOnlyError(f"{type(spec).__name__} is analytic-only")
    if grid is None:
        r, V = volterra_grid(spec, n)
    else:
        r = np.asarray(grid, dtype=float)
        if r[0] <= 0:
            r = r[1:]
        if r[-1] < potential_range(spec) * (1 - 1e-12):
            raise GridTooCoarseError("grid does not reach the potential range")
        V = np.asarray(spec.form()(r))
    phi, A, L = _march(r, V)
    res = _integral_residual(r, V, phi, L)
    if res > tol:
        raise GridTooCoarseError(f"integral-equation residual {res:.3e} exceeds {tol:.1e}")
    slope = (phi[-1] - phi[-2]) / (r[-1] - r[-2])
    return RadialFunction(r, phi, value_at_origin=float(phi[0]), outer_slope=float(slope), log_scale=L)


def binding_functional(spec: PotentialSpec, phi: Optional[RadialFunction] = None) -> float:
    """``int_0^inf r phi(0,r) V(r) dr``: negative = bound, zero = threshold.

    With ``phi`` given, the trapezoid rule of the march is applied on its
    grid; otherwise the solution is computed and the functional is
    Richardson-extrapolated from two nested grids.
    """
    if phi is None:
        z = _solve_zero_energy(spec)
        return z.functional * math.exp(z.log_scale)
    r = phi.grid
    form = spec.form()
    V = np.array(form(r), dtype=float)
    # duplicated breakpoints carry the left limit on their first copy
    dup = np.flatnonzero(r[1:] == r[:-1])
    if dup.size:
        V[dup] = form(np.nextafter(r[dup], 0.0))
    if r[-1] < potential_range(spec) * (1 - 1e-9):
        raise GridTooCoarseError("phi grid does not cover the potential range")
    q = r * V * phi.values
    return float(np.sum(0.5 * np.diff(r) * (q[1:] + q[:-1]))) * math.exp(phi.log_scale)


def count_bound_zero_energy(spec: PotentialSpec, n: int = 4000) -> int:
    """Number of two-body bound states from the zero-energy solution.

    Nodes of ``phi`` inside the potential plus one more if the field-free
    continuation ``phi(R) + R phi'(R) ln(r/R)`` still crosses zero.
    """
    z = _solve_zero_energy(spec, n)
    end = z.phi.values[-1]
    return z.nodes + (1 if end * z.functional < 0 else 0)


# ---------------------------------------------------------------------------
# Pruefer ODE oracle
# ---------------------------------------------------------------------------

def _prufer_rhs(pot: Callable, energy: float, nu2: float):
    f = getattr(pot, "scalar", None) or (lambda r: float(pot(r)))

    def rhs(t, y):
        r = math.exp(t)
        Q = nu2 + r * r * (f(r) - energy)
        th = y[0]
        s, c = math.sin(th), math.cos(th)
        return [c * c - Q * s * s, (1.0 + Q) * s * c]
    return rhs


def prufer_integrate(pot: Callable, energy: float, r_start: float, r_end: float,
                     theta0: float, nu: float = 0.0, breakpoints: Sequence[float] = (),
                     dense: bool = False, rtol: float = 1e-11):
    """Integrate the Pruefer angle of ``g_tt = (nu^2 + r^2 (V - E)) g``, ``t = ln r``.

    ``g = R sin(theta)``, ``g_t = R cos(theta)``.  Returns ``(theta, lnR)`` at
    ``r_end`` and, with ``dense``, a list of scipy dense-output segments.
    """
    nu2 = nu * nu
    rhs = _prufer_rhs(pot, energy, nu2)
    lo, hi = min(r_start, r_end), max(r_start, r_end)
    inner = sorted(b for b in breakpoints if lo < b < hi)
    edges = [r_start] + (inner if r_end > r_start else inner[::-1]) + [r_end]
    y = [theta0, 0.0]
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        sol = integrate.solve_ivp(rhs, (math.log(a), math.log(b)), y, method="DOP853",
                                  rtol=rtol, atol=1e-12, dense_output=dense)
        if not sol.success:
            raise RuntimeError(f"Pruefer integration failed: {sol.message}")
        y = [sol.y[0, -1], sol.y[1, -1]]
        if dense:
            pieces.append((math.log(a), math.log(b), sol.sol))
    if dense:
        return y[0], y[1], pieces
    return y[0], y[1]


def _pot_callable(spec: PotentialSpec):
    form = spec.form()
    return lambda r: form(r)


def ode_zero_energy_count(spec: PotentialSpec) -> tuple[int, float]:
    """Bound-state count from the zero-energy Pruefer angle; also ``R phi'/phi`` at R."""
    form = spec.form()
    R = potential_range(spec)
    th, _ = prufer_integrate(form, 0.0, 1e-8 * R, R, math.pi / 2, 0.0, form.breakpoints())
    return int(math.floor(th / math.pi + 0.5)), 1.0 / math.tan(th)


def _k_log_derivative(kappa: float, r: float) -> float:
    x = kappa * r
    return -x * sf.K1(x, scaled=True) / sf.K0(x, scaled=True)


def _matching_state(spec: PotentialSpec, energy: float, R: float, scale: float = 1.0):
    kappa = math.sqrt(-energy)
    r_m = max(3.0 * R, 10.0 / kappa) * scale
    form = spec.form()
    th, lnR = prufer_integrate(form, energy, 1e-8 * R, r_m, math.pi / 2, 0.0, form.breakpoints())
    Lk = _k_log_derivative(kappa, r_m)
    th_k = math.atan2(1.0, Lk)  # cot(th_k) = Lk, th_k in (0, pi)
    return th, th_k, r_m


def _count_below(spec, energy, R) -> int:
    th, th_k, _ = _matching_state(spec, energy, R)
    return int(math.floor((th - th_k) / math.pi)) + 1


def bound_states(spec: PotentialSpec, max_states: int = 10, check_tail: bool = False) -> list[BoundState2]:
    """Bound states of the radial equation (M = 0) below zero energy.

    Energies are bracketed by Sturm counting (Pruefer angle at the matching
    radius ``max(3R, 10/kappa)`` compared with the decaying ``K0`` tail),
    refined by Brent's method on the phase mismatch; the ground state has no
    nodes.  An empty list means no bound state.
    """
    if spec.analytic_only:
        raise AnalyticOnlyError(f"{type(spec).__name__} is analytic-only")
    form = spec.form()
    R = potential_range(spec)
    n_total, _ = ode_zero_energy_count(spec)
    n_total = min(n_total, max_states)
    if n_total == 0:
        return []
    rr = np.concatenate([np.geomspace(1e-6 * R, R, 4000), form.breakpoints()])
    vmin = float(np.min(form(rr)))
    e_floor = min(vmin, -1e-300) * 1.0000001

    # work in y = ln(-E): Sturm count decreases with y
    def count(y):
        return _count_below(spec, -math.exp(y), R)

    y_lo_all = math.log(-e_floor)
    states = []
    for j in range(n_total):
        # bracket where count goes from j to j+1 (E increasing = y decreasing)
        y_hi = y_lo_all  # deepest: count 0 <= j
        y_lo = math.log(1e-300)
        # find y_lo with count >= j+1 by stepping toward zero energy
        y = y_hi
        step = 1.0
        while count(y) < j + 1:
            y_next = y - step
            step *= 2.0
            if y_next < y_lo:
                y = y_lo
                if count(y) < j + 1:
                    raise RuntimeError("state lies above 1e-300 binding; cannot resolve")
                break
            y = y_next
        lo, hi = y, y_hi  # count(lo) >= j+1, count(hi) <= j
        for _ in range(200):
            if hi - lo < 1e-3:
                break
            mid = 0.5 * (lo + hi)
            if count(mid) >= j + 1:
                lo = mid
            else:
                hi = mid

        def mismatch(yv):
            th, th_k, _ = _matching_state(spec, -math.exp(yv), R)
            return th - th_k - j * math.pi

        y_root = optimize.brentq(mismatch, lo, hi, xtol=1e-14, rtol=1e-14)
        energy = -math.exp(y_root)
        if check_tail:
            e2 = -math.exp(optimize.brentq(
                lambda yv: (lambda a: a[0] - a[1] - j * math.pi)(
                    _matching_state(spec, -math.exp(yv), R, scale=2.0)[:2]), lo, hi, xtol=1e-14, rtol=1e-14))
            if abs(e2 - energy) > 1e-8 * abs(energy):
                raise RuntimeError(f"matching radius insufficient: {energy} vs {e2}")
        states.append(_assemble_state(spec, energy, R, j))
    return states


def _sample_pieces(pieces, t):
    th = np.empty_like(t)
    lnR = np.empty_like(t)
    for a, b, sol in pieces:
        lo, hi = min(a, b), max(a, b)
        m = (t >= lo - 1e-15) & (t <= hi + 1e-15)
        vals = sol(t[m])
        th[m], lnR[m] = vals[0], vals[1]
    return th, lnR


def _assemble_state(spec, energy, R, j) -> BoundState2:
    """Normalized state: outward solution up to the outermost turning point, K0-matched inward tail beyond."""
    form = spec.form()
    kappa = math.sqrt(-energy)
    r_m = max(3.0 * R, 10.0 / kappa)
    r0 = 1e-8 * R
    bps = form.breakpoints()
    rr = np.geomspace(r0, R, 20001)
    allowed = np.flatnonzero(np.asarray(form(rr)) < energy)
    r_tp = float(rr[allowed[-1]]) if allowed.size else R
    _, _, out = prufer_integrate(form, energy, r0, r_tp, math.pi / 2, 0.0, bps, dense=True)
    th_k = math.atan2(1.0, _k_log_derivative(kappa, r_m))
    _, _, inw = prufer_integrate(form, energy, r_m, r_tp, th_k, 0.0, bps, dense=True)
    t = np.linspace(math.log(r0), math.log(r_m), 40001)
    t_tp = math.log(r_tp)
    t = np.union1d(t, [t_tp])
    k = int(np.searchsorted(t, t_tp))
    th_o, ln_o = _sample_pieces(out, t[: k + 1])
    th_i, ln_i = _sample_pieces(inw, t[k:])
    # rescale the inward branch to join the outward one at r_tp
    sign = 1.0 if math.cos(th_o[-1] - th_i[0]) > 0 else -1.0
    ln_i = ln_i + (ln_o[-1] - ln_i[0])
    th = np.concatenate([th_o, th_i[1:]])
    lnR = np.concatenate([ln_o, ln_i[1:]])
    sg = np.concatenate([np.ones(k + 1), np.full(len(t) - k - 1, sign)])
    lnR -= lnR.max()
    g = sg * np.exp(lnR) * np.sin(th)
    r = np.exp(t)
    # dr = r dt
    norm = integrate.trapezoid(g * g * r * r, t)
    msq = integrate.trapezoid(g * g * r**4, t) / norm
    g = g / math.sqrt(norm)
    if g[0] < 0:
        g = -g
    nodes = int(np.sum(np.sign(g[1:]) * np.sign(g[:-1]) < 0))
    wf = RadialFunction(r, g, value_at_origin=float(g[0]), outer_slope=float((g[-1] - g[-2]) / (r[-1] - r[-2])))
    return BoundState2(energy, math.sqrt(msq), wf, nodes)


def is_bound_ode(spec: PotentialSpec) -> bool:
    return ode_zero_energy_count(spec)[0] >= 1


# ---------------------------------------------------------------------------
# analytic square-model thresholds
# ---------------------------------------------------------------------------

def analytic_threshold_barrier(lambda_minus: float, lambda_plus: float, Rs: float, Rl: float,
                               scaled: bool = False) -> float:
    """Residual ``a I1(k2 Rl) - b K1(k2 Rl)`` of the outer-barrier threshold equation.

    Its sign equals the sign of the binding functional.  ``scaled=True``
    multiplies by the positive factor ``exp(-k2 (Rl - Rs))`` so that strong
    barriers stay finite.
    """
    if not (0 < Rs < Rl):
        raise ValueError("need 0 < Rs < Rl")
    k1 = math.sqrt(lambda_minus) / Rs
    k2 = math.sqrt(lambda_plus) / Rs
    if k2 == 0.0:
        raise ValueError("lambda_plus must be positive")
    x, y, z = k2 * Rs, k1 * Rs, k2 * Rl
    j0, j1 = sf.J0(y), sf.J1(y)
    # scaled: I -> e^{-x} I, K -> e^{x} K
    a_s = k2 * j0 * sf.K1(x, True) - k1 * j1 * sf.K0(x, True)   # a = e^{-x} a_s
    b_s = k2 * j0 * sf.I1(x, True) + k1 * j1 * sf.I0(x, True)   # b = e^{x} b_s
    i1z, k1z = sf.I1(z, True), sf.K1(z, True)
    # a I1(z) - b K1(z) = e^{z-x} a_s i1z - e^{x-z} b_s k1z
    if scaled:
        return a_s * i1z - math.exp(-2.0 * (z - x)) * b_s * k1z
    return math.exp(z - x) * a_s * i1z - math.exp(x - z) * b_s * k1z


def analytic_threshold_core(lambda_plus: float, lambda_minus: float, Rs: float, Rl: float,
                            scaled: bool = False) -> float:
    """Residual ``a~ J1(k2 Rl) - b~ Y1(k2 Rl)`` of the inner-core threshold equation.

    ``k1 = sqrt(lambda_+)/Rs`` (core), ``k2 = sqrt(lambda_-)/Rs`` (well).
    The sign equals that of the binding functional; ``scaled=True`` divides
    by ``exp(k1 Rs)``.
    """
    if not (0 < Rs < Rl):
        raise ValueError("need 0 < Rs < Rl")
    k1 = math.sqrt(lambda_plus) / Rs
    k2 = math.sqrt(lambda_minus) / Rs
    if k2 == 0.0:
        raise ValueError("lambda_minus must be positive")
    x, y, z = k1 * Rs, k2 * Rs, k2 * Rl
    i0, i1 = (sf.I0(x, True), sf.I1(x, True)) if x > 0 else (1.0, 0.0)
    at = k2 * i0 * sf.Y1(y) + k1 * i1 * sf.Y0(y)
    bt = k2 * i0 * sf.J1(y) + k1 * i1 * sf.J0(y)
    val = at * sf.J1(z) - bt * sf.Y1(z)
    return val if scaled else val * math.exp(x)


def deep_barrier_residual(lambda_minus: float, lambda_plus: float, Rs: float) -> float:
    """Large-barrier limit ``k2 Rs J0(k1 Rs) - k1 Rs J1(k1 Rs)``."""
    y = math.sqrt(lambda_minus)
    x = math.sqrt(lambda_plus)
    return x * sf.J0(y) - y * sf.J1(y)


def deep_core_residual(h: float, s: float) -> float:
    """Hard-core limit ``J0(k Rs) Y1(k Rl) - J1(k Rl) Y0(k Rs)`` in terms of (h, s)."""
    if not (0 < s < 1):
        raise ValueError("s must lie in (0, 1)")
    zl = math.sqrt(h / (1.0 - s * s))
    zs = s * zl
    return sf.J0(zs) * sf.Y1(zl) - sf.J1(zl) * sf.Y0(zs)


def _bisect_predicate(pred: Callable[[float], bool], lo: float, hi: float, rtol: float,
                      max_iter: int = 200) -> tuple[float, float]:
    """Bisection between ``pred(lo) = True`` and ``pred(hi) = False``."""
    for _ in range(max_iter):
        if hi - lo <= rtol * max(abs(hi), abs(lo), 1e-300):
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _expanding_threshold(bound: Callable[[float], bool], start: float, rtol: float,
                         ceiling: float = LAMBDA_PLUS_CEILING):
    """Smallest repulsion at which ``bound`` turns False; ``inf`` below the ceiling."""
    lo = 0.0
    if not bound(lo):
        return 0.0, 0.0
    hi = max(start, 1e-6)
    while bound(hi):
        lo = hi
        if hi >= ceiling:
            return math.inf, 0.0
        hi = min(hi * 2.0, ceiling)
    lo, hi = _bisect_predicate(bound, lo, hi, rtol)
    return 0.5 * (lo + hi), hi - lo


def analytic_lambda_plus_cr(model: str, lambda_minus: float, Rs: float, Rl: float,
                            rtol: float = 1e-10) -> ThresholdPoint:
    """Root in ``lambda_+`` of the closed-form residual (``model`` = barrier|core)."""
    if model == "barrier":
        f = lambda lp: analytic_threshold_barrier(lambda_minus, lp, Rs, Rl, scaled=True)
        method = Method.ANALYTIC_BARRIER
    elif model == "core":
        f = lambda lp: analytic_threshold_core(lp, lambda_minus, Rs, Rl, scaled=True)
        method = Method.ANALYTIC_CORE
    else:
        raise ValueError(model)
    # bound <=> residual < 0 (first state: no interior node of phi)
    lo = 1e-12
    if f(lo) >= 0:
        raise NonMonotoneFamilyError("family is unbound without repulsion")
    hi = max(lambda_minus, 1e-3)
    while f(hi) < 0:
        lo = hi
        if hi >= LAMBDA_PLUS_CEILING:
            return ThresholdPoint(lambda_minus, math.inf, method, 0.0)
        hi = min(2.0 * hi, LAMBDA_PLUS_CEILING)
    root = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)
    return ThresholdPoint(lambda_minus, root, method, abs(f(root)))


# ---------------------------------------------------------------------------
# thresholds in lambda_+
# ---------------------------------------------------------------------------

def delta_shell_lambda_plus_cr(lambda_minus: float, c: float = 1.0, d: float = 1.0) -> float:
    """Delta-shell threshold; ``inf`` once the outer shell alone binds."""
    L = math.log(d / c)
    denom = 1.0 - lambda_minus * L
    if denom <= 0:
        return math.inf
    return lambda_minus * (d / c) ** 2 / denom


def delta_shell_functional(spec: DeltaShell) -> float:
    """``int r V phi dr`` for the delta shell (closed form)."""
    c, d = spec.c, spec.d
    lp = spec.lambda_plus * (c / d) ** 2
    return lp - spec.lambda_minus * (1.0 + lp * math.log(d / c))


def _check_monotone(bound: Callable[[float], bool], hi: float, samples: int = 6):
    pts = np.linspace(0.0, hi, samples + 1)
    flags = [bound(p) for p in pts]
    for i in range(1, len(flags)):
        if flags[i] and not flags[i - 1]:
            raise NonMonotoneFamilyError(f"binding reappears at lambda_+ = {pts[i]:.6g}")


def critical_lambda_plus(family, lambda_minus: float, tol: float = 1e-8,
                         method: str | Method = Method.INTEGRAL_EQ,
                         n: int = 4000, check_monotone: bool = True) -> ThresholdPoint:
    """Critical repulsion ``lambda_+^cr(lambda_-)`` for a :class:`StrengthFamily`.

    Bisection (relative ``tol``) on the two-body binding predicate with an
    expanding bracket; a bracket reaching ``1e6`` without unbinding returns
    the ``inf`` marker (``lambda_- >= lambda_-^cr``).
    """
    if not isinstance(family, StrengthFamily):
        family = StrengthFamily(family)
    method = Method(method)
    shape = family.shape
    if isinstance(shape, DeltaShell):
        val = delta_shell_lambda_plus_cr(lambda_minus, shape.c, shape.d)
        return ThresholdPoint(lambda_minus, val, Method.ANALYTIC_BARRIER, 0.0)
    if method in (Method.ANALYTIC_BARRIER, Method.ANALYTIC_CORE):
        model = "barrier" if isinstance(shape, SquareWellBarrier) else "core"
        if not isinstance(shape, (SquareWellBarrier, CoreWell)):
            raise ValueError("analytic thresholds exist only for the square models")
        return analytic_lambda_plus_cr(model, lambda_minus, shape.Rs, shape.Rl, rtol=tol)
    if method is Method.WEAK_LIMIT:
        return ThresholdPoint(lambda_minus, weak_limit_lambda_plus(family, lambda_minus), method, 0.0)

    if method is Method.INTEGRAL_EQ:
        def bound(lp):
            return count_bound_zero_energy(family.at(lambda_minus, lp), n) >= 1
    else:
        def bound(lp):
            return is_bound_ode(family.at(lambda_minus, lp))

    value, width = _expanding_threshold(bound, max(lambda_minus, 1e-3), tol)
    if math.isinf(value):
        return ThresholdPoint(lambda_minus, math.inf, method, 0.0)
    if check_monotone and value > 0:
        _check_monotone(bound, 2.0 * value)
    spec = family.at(lambda_minus, value)
    if method is Method.INTEGRAL_EQ:
        residual = abs(binding_functional(spec))
    else:
        residual = abs(ode_zero_energy_count(spec)[1])
    return ThresholdPoint(lambda_minus, value, method, residual)


def weak_limit_lambda_plus(family, lambda_minus: float) -> float:
    """Leading weak-coupling threshold ``-lambda_- int V_- r dr / int V_+ r dr``."""
    if not isinstance(family, StrengthFamily):
        family = StrengthFamily(family)
    if isinstance(family.shape, DeltaShell):
        s = family.shape
        return lambda_minus * (s.d / s.c) ** 2
    plus, minus = family.unit_parts()
    vp = net_volume(plus)
    vm = net_volume(minus)
    if vp == 0.0:
        raise ZeroDivisionError("repulsive part has zero volume")
    return -lambda_minus * vm / vp


# ---------------------------------------------------------------------------
# h(s) curve of the hard-core limit
# ---------------------------------------------------------------------------

def h_of_s(s: float, h_ceiling: float = 1e6) -> float:
    """Lowest root ``h`` of the hard-core threshold equation at radius ratio ``s``."""
    f = lambda h: deep_core_residual(h, s)
    h = 1e-8
    f0 = f(h)
    while True:
        h2 = h * 1.05
        if h2 > h_ceiling:
            raise RuntimeError(f"no threshold below h = {h_ceiling} for s = {s}")
        f2 = f(h2)
        if f0 * f2 <= 0:
            return optimize.brentq(f, h, h2, xtol=1e-300, rtol=1e-14)
        h, f0 = h2, f2


@dataclass
class ThresholdCurve:
    x: np.ndarray
    y: np.ndarray
    labels: tuple[str, str] = ("s", "h")


def h_curve(s_grid: Sequence[float]) -> ThresholdCurve:
    s = np.asarray(s_grid, dtype=float)
    if np.any((s <= 0) | (s >= 1)):
        raise ValueError("s values must lie in (0, 1)")
    h = np.array([h_of_s(v) for v in s])
    return ThresholdCurve(s, h)


# ---------------------------------------------------------------------------
# deep limits via the radial ODE (any dimension)
# ---------------------------------------------------------------------------

_NU = {1: 0.5, 2: 0.0, 3: 0.5}


def deep_barrier_limit(dim: int, Rs: float = 1.0) -> float:
    """``k1 Rs`` at which the well binds behind an impenetrable barrier.

    Regular solution started at the origin must vanish at ``Rs``.  In 1D a
    hard wall at the origin is assumed, which makes it identical to 3D.
    """
    nu = _NU[dim]
    theta0 = math.pi / 2 if nu == 0 else math.atan2(1.0, nu)

    def node(k):
        V = lambda r, k=k: -k * k
        th, _ = prufer_integrate(V, 0.0, 1e-9 * Rs, Rs, theta0, nu, rtol=1e-13)
        return th - math.pi

    return optimize.brentq(node, 0.5, 2 * math.pi / Rs, xtol=1e-15, rtol=1e-14) * Rs


def deep_core_limit(dim: int, Rs: float, Rl: float) -> float:
    """Wavenumber ``k2`` binding the shell ``Rs < r < Rl`` behind a hard core.

    The solution starts at zero on the core surface and must have zero
    derivative at ``Rl`` (zero-energy threshold).
    """
    nu = _NU[dim]

    def slope(k):
        V = lambda r, k=k: -k * k
        th, _ = prufer_integrate(V, 0.0, Rs, Rl, 0.0, nu, rtol=1e-13)
        # the physical radial function is r^{-nu} g (2D) or u = r^{1/2} g (1D/3D);
        # a flat tail at Rl means g_t/g = -nu in both cases
        target = -nu
        return 1.0 / math.tan(th) - target if abs(math.sin(th)) > 1e-300 else math.inf

    # scan for the first sign change of the log-derivative mismatch
    k = 1e-3 / (Rl - Rs)
    prev = slope(k)
    while True:
        k2 = k * 1.02
        cur = slope(k2)
        if prev * cur < 0 and abs(cur - prev) < 1e3:
            return optimize.brentq(slope, k, k2, xtol=1e-15, rtol=1e-14)
        k, prev = k2, cur
        if k > 1e4 / (Rl - Rs):
            raise RuntimeError("no deep-core threshold found")


def lambda_minus_cr(model: str, Rs: float = 1.0, Rl: float = 2.0) -> float:
    """Attraction ``lambda_-^cr`` beyond which no repulsion unbinds a square model.

    ``barrier``: the well binds behind an impenetrable shell, ``k1 Rs = j01``.
    ``core``: the shell binds outside a hard core, ``h(s) s^2/(1 - s^2)``.
    """
    if model == "barrier":
        return sf.bessel_zero("J0", 1) ** 2
    if model == "core":
        s = Rs / Rl
        return h_of_s(s) * s * s / (1.0 - s * s)
    raise ValueError(model)
