"""
Lowest-channel hyperradial treatment of three identical bosons in 2D.

The hyperradius obeys ``3 rho^2 = sum_{i<k} r_ik^2``; with hbar = m = 1 the
single-channel equation reads

    -f'' + (3/4)/rho^2 f + (u(rho) - 2E) f = 0,      u = 2 V_eff .

Contents:

* ``v_lon``: the universal long-range channel of a zero-range pair
  interaction with dimer energy ``E2``.  It follows from the hyperangular
  eigenvalue condition (``nu`` is the hyperangular index, ``lambda = u
  rho^2 = 4 nu (nu + 1)``)

      sin(pi nu) [psi(nu+1) + gamma - L] + (pi/2) cos(pi nu) + pi P_nu(1/2) = 0,

  ``L = ln(sqrt(2) rho / a2)``, ``a2 = 2 exp(-gamma)/kappa``, ``E2 = -kappa^2``,
  continued to ``nu = -1/2 + i t`` once ``lambda < -1``.
* ``veff_from_pair_squarewell``: the lowest hyperangular eigenvalue for a
  pairwise square well, from a finite-volume discretization of the
  hyperangular operator.
* Numerov bound states, the zero-energy appearance criterion of a
  short-range channel, and the closed-form square-well window estimates.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, sparse, special
from scipy.sparse import linalg as splinalg

from . import specfun as sf
from . import twobody
from .potentials import SquareWellBarrier
from .twobody import RadialFunction

EULER = float(np.euler_gamma)
_SQ2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# universal long-range channel
# ---------------------------------------------------------------------------

def _legendre_half(nu: complex) -> float:
    """``P_nu(1/2) = 2F1(-nu, nu + 1; 1; 1/4)``; real for the cases used here."""
    a, b = -nu, nu + 1.0
    term = 1.0 + 0j
    total = term
    k = 0
    while True:
        term *= (a + k) * (b + k) / ((k + 1) ** 2) * 0.25
        k += 1
        total += term
        if k > 5 and abs(term) < 1e-17 * abs(total):
            return float(total.real)


def _f_real(nu: float, L: float) -> float:
    return (math.sin(math.pi * nu) * (special.psi(nu + 1.0) + EULER - L)
            + 0.5 * math.pi * math.cos(math.pi * nu) + math.pi * _legendre_half(nu))


def _f_imag(t: float, L: float) -> float:
    # condition divided by cosh(pi t); the Legendre term dies off as exp(-2 pi t/3)
    val = -(special.psi(0.5 + 1j * t).real + EULER - L)
    if t < 60.0:
        val += math.pi * _legendre_half(-0.5 + 1j * t) / math.cosh(math.pi * t)
    return val


L_HALF = float(special.psi(0.5) + EULER - math.pi * _legendre_half(-0.5))


def lon_lambda(x: float) -> float:
    """``lambda = rho^2 u`` of the zero-range channel at ``x = kappa rho``."""
    if x <= 0:
        return 0.0
    L = math.log(_SQ2 * x * math.exp(EULER) / 2.0)
    if L <= L_HALF:
        nu = optimize.brentq(_f_real, -0.5, -1e-300, args=(L,), xtol=1e-16, rtol=1e-15)
        return 4.0 * nu * (nu + 1.0)
    hi = 1.0
    while _f_imag(hi, L) > 0:
        hi *= 2.0
    t = optimize.brentq(_f_imag, 0.0, hi, args=(L,), xtol=1e-14, rtol=1e-15)
    return -1.0 - 4.0 * t * t


def _legendre_p(mu: float, z) -> np.ndarray:
    """``P_nu(z)`` for ``nu (nu + 1) = mu`` on ``-1 < z <= 1`` (real ``nu`` or ``nu = -1/2 + i t``)."""
    z = np.asarray(z, dtype=float)
    w = 0.5 * (1.0 - z)
    out = np.empty_like(z)
    nu = -0.5 + np.sqrt(complex(0.25 + mu))
    K = 56 + int(4.0 * math.sqrt(abs(mu)))
    near = w <= 0.5
    # hypergeometric series about z = 1; coefficients depend on mu only
    wn = w[near]
    term = np.ones_like(wn)
    total = term.copy()
    for k in range(K):
        term = term * (k * (k + 1) - mu) / (k + 1) ** 2 * wn
        total += term
    out[near] = total
    # logarithmic series about z = -1, psi(-nu) reflected to keep nu -> 0 finite
    v = 1.0 - w[~near]
    lv = np.log(v)
    s, c = np.sin(np.pi * nu), np.cos(np.pi * nu)
    acc = -(s / np.pi) * (2.0 * special.psi(1.0) - 2.0 * special.psi(1.0 + nu) - lv) + c
    ck = 1.0
    vk = np.ones_like(v)
    for k in range(1, K):
        vk = vk * v
        ck = ck * ((k - 1) * k - mu) / k**2
        if ck == 0.0:
            break  # integer nu: the series terminates
        # s psi(k - nu) = s psi(1 - k + nu) + pi c stays finite at integer nu
        acc = acc - (ck / np.pi) * (s * (2.0 * special.psi(k + 1.0) - special.psi(1.0 - k + nu)
                                         - special.psi(k + 1.0 + nu) - lv) - np.pi * c) * vk
    out[~near] = acc.real
    return out


@functools.lru_cache(maxsize=1)
def _z_nodes():
    # uniform measure in z = cos(2 alpha); geometric panels towards the log at z = 1
    xs, ws = np.polynomial.legendre.leggauss(16)
    edges = [-1.0, -0.5, 0.0, 0.5] + [1.0 - 0.5 * 2.0**-k for k in range(1, 44)]
    Z = [0.5 * (b - a) * xs + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])]
    W = [0.5 * (b - a) * ws for a, b in zip(edges[:-1], edges[1:])]
    return np.concatenate(Z), np.concatenate(W)


def _channel_function(mu: float, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Faddeev component ``P_nu(-z)`` and its s-wave average over the other two pairs.

    The average of a rotated component solves the same Legendre equation,
    so it is ``P_nu(1/2) P_nu(z)`` inside ``z > -1/2`` and
    ``P_nu(-1/2) P_nu(-z)`` outside.
    """
    phi = _legendre_p(mu, -Z)
    rot = np.where(Z > -0.5, _legendre_p(mu, 0.5) * _legendre_p(mu, Z),
                   _legendre_p(mu, -0.5) * _legendre_p(mu, -Z))
    return phi, rot


def _channel_variance(mu: float) -> float:
    """``<d_mu Phi|d_mu Phi> - <Phi|d_mu Phi>^2`` for the normalized channel function."""
    Z, W = _z_nodes()
    h = 1e-4 * max(1.0, abs(mu))
    p0, r0 = _channel_function(mu, Z)
    pp, rp = _channel_function(mu + h, Z)
    pm, rm = _channel_function(mu - h, Z)
    dp, dr = (pp - pm) / (2 * h), (rp - rm) / (2 * h)
    # bosonic symmetry: <Phi|Phi> = 3 (<phi|phi> + 2 <phi|R phi>)
    g00 = W @ (p0 * p0 + 2 * p0 * r0)
    g0d = W @ (p0 * dp + 2 * p0 * dr)
    gdd = W @ (dp * dp + 2 * dp * dr)
    return gdd / g00 - (g0d / g00) ** 2


_X_MIN, _X_MAX = 1e-14, 1e4
_X_DIAG = 16.0  # beyond this the diagonal term follows its 1/(3 rho^2) asymptote
_N_DIAG = (30, 150)


@functools.lru_cache(maxsize=1)
def _lon_table():
    lx = np.linspace(math.log(_X_MIN), math.log(_X_MAX), 3001)
    x = np.exp(lx)
    # tabulate lambda + 2 x^2, which stays bounded and tends to a constant
    lam = np.array([lon_lambda(v) for v in x])
    rest = lam + 2.0 * x * x
    # diagonal non-adiabatic term rho^2 <d_rho Phi|d_rho Phi> = (x d mu/dx)^2 var(mu)
    # the term is smooth in ln x, so a coarser table suffices
    knee = math.log(0.05)
    ld = np.concatenate([np.linspace(math.log(_X_MIN), knee, _N_DIAG[0], endpoint=False),
                         np.linspace(knee, math.log(_X_DIAG), _N_DIAG[1])])
    d = 1e-4
    vals = []
    for v in ld:
        mu = lon_lambda(math.exp(v)) / 4.0
        dmu = (lon_lambda(math.exp(v + d)) - lon_lambda(math.exp(v - d))) / (8.0 * d)
        vals.append(dmu * dmu * _channel_variance(mu))
    inner = lx <= ld[-1]
    diag = np.empty_like(x)
    # interpolate the logarithm: the term grows roughly like a power of x
    diag[inner] = np.exp(np.interp(lx[inner], ld, np.log(vals)))
    diag[~inner] = 1.0 / 3.0 + (vals[-1] - 1.0 / 3.0) * (_X_DIAG / x[~inner]) ** 2
    return lx, rest, diag


def lon_diagonal(x) -> np.ndarray:
    """``rho^2 Q(rho)`` of the zero-range channel at ``x = kappa rho`` (tends to 1/3)."""
    lx, _, diag = _lon_table()
    x = np.asarray(x, dtype=float)
    out = np.interp(np.log(np.clip(x, _X_MIN, _X_MAX)), lx, diag)
    return np.where(x > _X_MAX, 1.0 / 3.0, out)


def v_lon(rho, E2: float, diagonal: bool = True):
    """Universal long-range channel ``u(rho)`` for dimer energy ``E2 < 0``.

    With ``diagonal`` the non-adiabatic term ``<d_rho Phi|d_rho Phi>`` is
    included, which makes the channel an upper bound and restores the
    atom-dimer limit ``u -> 2 E2 - 1/rho^2``; without it the bare adiabatic
    eigenvalue tends to ``2 E2 - (4/3)/rho^2``.
    """
    if E2 >= 0:
        raise ValueError("E2 must be negative")
    kappa = math.sqrt(-E2)
    rho = np.asarray(rho, dtype=float)
    x = kappa * rho
    lx, rest, _ = _lon_table()
    xs = np.clip(x, _X_MIN, None)
    out = np.interp(np.log(xs), lx, rest) - 2.0 * x * x
    big = x > _X_MAX
    out = np.where(big, -2.0 * x * x + rest[-1], out)
    # below the table the coupling decays like 6/ln x
    small = x < _X_MIN
    if np.any(small):
        Ls = np.log(_SQ2 * np.maximum(x, 1e-300) * math.exp(EULER) / 2.0)
        out = np.where(small, 6.0 / Ls, out)
    if diagonal:
        out = out + lon_diagonal(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rho > 0, out / (rho * rho), -np.inf)


# ---------------------------------------------------------------------------
# channel type
# ---------------------------------------------------------------------------

@dataclass
class AdiabaticChannel:
    """Lowest adiabatic channel ``u = 2 V_eff`` on a hyperradial grid.

    Beyond the grid the channel continues as ``v_lon(E2_ref)`` when a
    reference energy is given and as zero otherwise.  Below the first grid
    point ``u`` is held constant.
    """

    rho_grid: np.ndarray
    V_eff: np.ndarray
    split_rho: float = math.inf
    E2_ref: Optional[float] = None
    dim: int = 2
    diagonal: bool = True

    def __post_init__(self):
        self.rho_grid = np.asarray(self.rho_grid, dtype=float)
        self.V_eff = np.asarray(self.V_eff, dtype=float)
        if len(self.rho_grid) != len(self.V_eff) or len(self.rho_grid) < 2:
            raise ValueError("grid and values must have equal length >= 2")
        if np.any(np.diff(self.rho_grid) < 0) or self.rho_grid[0] <= 0:
            raise ValueError("rho grid must be positive and nondecreasing")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    def u(self, rho):
        # u is held constant below the grid
        rho = np.asarray(rho, dtype=float)
        g = self.rho_grid
        # interpolate rho^2 (u - 2 E_thr), which stays bounded along the tail
        u_inf = 2.0 * self.threshold
        rr = np.maximum(rho, g[0])
        lam = np.interp(np.log(rr), np.log(g), (self.V_eff - u_inf) * g * g)
        inside = np.where(rho < g[0], self.V_eff[0], lam / rr**2 + u_inf)
        if self.E2_ref is not None:
            tail = v_lon(np.maximum(rho, self.rho_grid[-1]), self.E2_ref, self.diagonal)
        else:
            tail = np.zeros_like(rho)
        return np.where(rho > self.rho_grid[-1], tail, inside)

    @property
    def threshold(self) -> float:
        """Lowest channel energy at infinity (``E2_ref`` or zero)."""
        return self.E2_ref if self.E2_ref is not None else 0.0

    @property
    def centrifugal(self) -> float:
        return 0.75 if self.dim == 2 else 3.75

    def split(self) -> tuple[RadialFunction, "AdiabaticChannel"]:
        """``(V_sh, V_lon channel)``: ``V_sh`` is the channel inside ``split_rho``."""
        if not math.isfinite(self.split_rho):
            raise ValueError("channel has no split radius")
        g = self.rho_grid
        inner = g[g < self.split_rho]
        grid = np.concatenate([inner, [self.split_rho, self.split_rho]])
        vals = np.concatenate([self.u(inner), [float(self.u(self.split_rho)), 0.0]])
        vsh = RadialFunction(np.concatenate([[0.0], grid]), np.concatenate([[vals[0]], vals]))
        lon = lon_channel(self.E2_ref, rho_min=self.split_rho) if self.E2_ref is not None else None
        return vsh, lon


def lon_channel(E2: float, rho_min: Optional[float] = None, n: int = 2000,
                pocket: Optional[Callable] = None) -> AdiabaticChannel:
    """Channel made of ``v_lon`` (zero for ``rho < rho_min``) plus an optional pocket."""
    kappa = math.sqrt(-E2)
    grid = np.geomspace(1e-10 / kappa, 1e3 / kappa, n)
    if rho_min is not None:
        grid = np.unique(np.concatenate([grid, [rho_min]]))
    u = v_lon(grid, E2)
    if rho_min is not None:
        u = np.where(grid < rho_min, 0.0, u)
    if pocket is not None:
        u = u + np.asarray(pocket(grid), dtype=float)
    return AdiabaticChannel(grid, u, split_rho=rho_min if rho_min is not None else math.inf, E2_ref=E2)


# ---------------------------------------------------------------------------
# Numerov solver (t = ln rho, g = rho^{-1/2} f)
# ---------------------------------------------------------------------------

def _numerov_nodes(t: np.ndarray, Q: np.ndarray, nu: float) -> tuple[int, float, float]:
    """Nodes of the regular solution of ``g'' = Q g``; returns (nodes, g_end, g'_end/g_end)."""
    h = t[1] - t[0]
    c = h * h / 12.0
    w = 1.0 - c * Q
    g0, g1 = math.exp(nu * (t[0] - t[1])), 1.0
    wl = w.tolist()
    ql = Q.tolist()
    nodes = 0
    y0, y1 = g0 * wl[0], g1 * wl[1]
    gp, gc = g0, g1
    for i in range(1, len(t) - 1):
        y2 = 2.0 * y1 + h * h * ql[i] * gc - y0
        gn = y2 / wl[i + 1]
        if gn * gc < 0 or gn == 0.0:
            nodes += 1
        if abs(gn) > 1e200:
            y1 /= 1e200
            y2 /= 1e200
            gc /= 1e200
            gn /= 1e200
        y0, y1 = y1, y2
        gp, gc = gc, gn
    slope = (gc - gp) / h / gc if gc != 0 else math.inf
    return nodes, gc, slope


def _t_grid(rho_min, rho_max, n):
    return np.linspace(math.log(rho_min), math.log(rho_max), n)


def _count_below(channel: AdiabaticChannel, E: float, rho_min: float, base: int) -> int:
    thr = channel.threshold
    q = math.sqrt(max(2.0 * (thr - E), 1e-300))
    rho_box = max(channel.rho_grid[-1] if channel.E2_ref is None else 0.0,
                  channel.split_rho if math.isfinite(channel.split_rho) else 0.0,
                  20.0 / q)
    nu = 1.0 if channel.dim == 2 else 2.0
    coarse = _t_grid(rho_min, rho_box, 2001)
    rc = np.exp(coarse)
    kmax = math.sqrt(float(np.max(np.abs(nu * nu + rc * rc * (channel.u(rc) - 2.0 * E)))))
    n = max(base, int((coarse[-1] - coarse[0]) * kmax / 0.04))
    t = _t_grid(rho_min, rho_box, n)
    r = np.exp(t)
    Q = nu * nu + r * r * (channel.u(r) - 2.0 * E)
    return _numerov_nodes(t, Q, nu)[0]


def hyperradial_bound_states(channel: AdiabaticChannel, max_states: int = 10,
                             rtol: float = 1e-10, n: int = 20000) -> list[float]:
    """Bound-state energies below the channel threshold (ascending).

    Numerov integration in ``t = ln rho`` from the regular ``rho^{3/2}``
    start with a Dirichlet wall far in the classically forbidden region;
    the node count at energy ``E`` equals the number of states below ``E``.
    """
    g = channel.rho_grid
    rho_min = g[0] * 1e-3
    # Hardy: -f'' - f/(4 rho^2) >= 0, so E >= min(u + (c + 1/4)/rho^2)/2
    probe = np.concatenate([g, np.geomspace(g[0], g[-1] * 10, 4000)])
    cent = channel.centrifugal + 0.25
    floor = 0.5 * float(np.min(channel.u(probe) + cent / probe**2))
    thr = channel.threshold
    if floor >= thr:
        return []
    scale = max(abs(thr), 1e-12 * abs(floor))
    E_top = thr - 1e-9 * scale
    count = lambda E: _count_below(channel, E, rho_min, n)
    total = min(count(E_top), max_states)
    energies = []
    for j in range(total):
        # descend from the threshold until at most j states lie below
        d = scale
        lo = thr - d
        while lo > floor and count(lo) > j:
            d *= 4.0
            lo = max(thr - d, floor)
        hi = E_top
        while hi - lo > rtol * max(abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if count(mid) > j:
                hi = mid
            else:
                lo = mid
        energies.append(0.5 * (lo + hi))
    return energies


def zero_energy_count(u: Callable, support: float, rho_min: float = 1e-8,
                      dim: int = 2, breakpoints: Sequence[float] = ()) -> int:
    """Bound states at ``E = 0`` of a compact channel ``u``.

    Pruefer integration of ``g_tt = (nu^2 + rho^2 u) g`` split at the
    breakpoints, so jumps in ``u`` cost no accuracy.
    """
    nu = 1.0 if dim == 2 else 2.0
    theta0 = math.atan2(1.0, nu)  # g ~ rho^nu
    th, _ = twobody.prufer_integrate(u, 0.0, rho_min * support, support, theta0, nu,
                                     breakpoints, rtol=1e-12)
    inside = int(math.floor(th / math.pi))
    # outside g = a rho^nu + b rho^-nu; a zero beyond the support needs
    # sign(a) != sign(g), i.e. g_t/g < -nu
    frac = th - inside * math.pi
    crosses = frac > 0 and math.cos(frac) / math.sin(frac) < -nu
    return inside + int(crosses)


# ---------------------------------------------------------------------------
# appearance criterion
# ---------------------------------------------------------------------------

def _march_phi1(rho: np.ndarray, V: np.ndarray) -> float:
    """Return ``1 + int phi_1 V / sqrt(rho)`` by an explicit product-trapezoid march."""
    A = 0.0  # int phi V / sqrt(rho')
    B = 0.0  # int rho'^{3/2} phi V
    a_prev = b_prev = 0.0
    r_prev = rho[0]
    rl, vl = rho.tolist(), V.tolist()
    # phi_1 ~ rho^{3/2}/2 at the origin
    phi = 0.5 * r_prev ** 1.5
    a_prev = phi * vl[0] / math.sqrt(r_prev)
    b_prev = r_prev ** 1.5 * phi * vl[0]
    # head [0, r0] with phi = rho^{3/2}/2 and constant V
    A = vl[0] * r_prev * r_prev / 4.0
    B = vl[0] * r_prev ** 4 / 8.0
    for i in range(1, len(rl)):
        r = rl[i]
        h = r - r_prev
        Ah = A + 0.5 * h * a_prev
        Bh = B + 0.5 * h * b_prev
        sr = math.sqrt(r)
        phi = 0.5 * r * sr * (1.0 + Ah) - Bh / (2.0 * sr)
        a_new = phi * vl[i] / sr
        b_new = r * sr * phi * vl[i]
        A = Ah + 0.5 * h * a_new
        B = Bh + 0.5 * h * b_new
        a_prev, b_prev, r_prev = a_new, b_new, r
    return 1.0 + A


def _sh_grid(support: float, breakpoints: Sequence[float], n: int) -> np.ndarray:
    edges = sorted({0.0, support, *[b for b in breakpoints if 0 < b < support]})
    pieces = []
    r_min = 1e-7 * support
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(8, int(n * (b - a) / support))
        if a == 0.0:
            head = np.geomspace(r_min, min(b, 0.05 * support), max(200, m // 4))
            pieces.append(np.concatenate([head, np.linspace(head[-1], b, m)[1:]]))
        else:
            pieces.append(np.linspace(a, b, m + 1))
    return np.concatenate(pieces)


def _eval_sh(v_sh, rho: np.ndarray, support: float) -> np.ndarray:
    """Potential values with one-sided limits at duplicated grid points."""
    if isinstance(v_sh, RadialFunction):
        g, v = v_sh.grid, v_sh.values
        out = np.interp(rho, g, v)
        # duplicated nodes: left copy takes the left limit
        dup = np.concatenate([np.diff(rho) == 0, [False]])
        idx = np.searchsorted(g, rho[dup], side="left")
        out[dup] = v[np.clip(idx, 0, len(v) - 1)]
        dup_r = np.concatenate([[False], np.diff(rho) == 0])
        idx = np.searchsorted(g, rho[dup_r], side="right") - 1
        out[dup_r] = v[np.clip(idx, 0, len(v) - 1)]
        out[rho > support] = 0.0
        # the closing node of the march takes the inside limit
        idx = np.searchsorted(g, rho[-1], side="left")
        out[-1] = v[min(idx, len(v) - 1)] if rho[-1] <= support else 0.0
        return out
    out = np.asarray(v_sh(rho), dtype=float)
    dup = np.concatenate([np.diff(rho) == 0, [False]])
    dup[-1] = True
    out[dup] = np.asarray(v_sh(np.nextafter(rho[dup], 0.0)), dtype=float)
    return out


def _support_of(v_sh) -> tuple[float, list[float]]:
    g, v = v_sh.grid, v_sh.values
    nz = np.nonzero(v)[0]
    if len(nz) == 0:
        return float(g[-1]), []
    support = float(g[min(nz[-1] + 1, len(g) - 1)])
    dups = [float(x) for x in g[1:][np.diff(g) == 0]]
    return support, dups


def appearance_criterion(v_sh, support: Optional[float] = None,
                         breakpoints: Sequence[float] = (), n: int = 4000) -> float:
    """``1 + int_0^inf phi_1(0, rho) V_sh(rho) / sqrt(rho) d rho``.

    ``phi_1`` is the zero-energy solution of the short-range channel built
    from ``rho^{3/2}/2`` and ``rho^{-1/2}/2``; a zero of the returned value
    marks a bound state appearing at zero energy.  ``v_sh`` is a
    :class:`RadialFunction` (jumps encoded as repeated grid points) or a
    callable with explicit ``support`` and ``breakpoints``.  The value is
    Richardson-extrapolated from two nested grids.
    """
    if isinstance(v_sh, RadialFunction):
        s, dups = _support_of(v_sh)
        support = s if support is None else support
        breakpoints = list(breakpoints) + dups
    elif support is None:
        raise ValueError("a callable V_sh needs its support radius")
    vals = []
    for m in (n, 2 * n):
        rho = _sh_grid(support, breakpoints, m)
        rho = np.sort(np.concatenate([rho, [b for b in breakpoints if 0 < b < support]]))
        V = _eval_sh(v_sh, rho, support)
        vals.append(_march_phi1(rho, V))
    return (4.0 * vals[1] - vals[0]) / 3.0


# ---------------------------------------------------------------------------
# hyperangular finite-volume channel for pairwise square wells
# ---------------------------------------------------------------------------

def _graded(a: float, b: float, clusters: Sequence[float], n: int, width: float) -> np.ndarray:
    """Cell faces on [a, b] with density peaked at ``clusters``."""
    x = np.linspace(a, b, 20001)
    dens = np.ones_like(x)
    for c in clusters:
        dens += 8.0 * np.exp(-((x - c) / width) ** 2)
    cum = np.concatenate([[0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))])
    return np.interp(np.linspace(0, cum[-1], n + 1), cum, x)


def _pair_sum(alpha, theta, rho, pair_v):
    s, c = np.sin(alpha), np.cos(alpha)
    r12 = _SQ2 * rho * s
    base = 0.5 * s * s + 1.5 * c * c
    cross = math.sqrt(3.0) * s * c * np.cos(theta)
    r13 = rho * np.sqrt(np.maximum(base + cross, 0.0))
    r23 = rho * np.sqrt(np.maximum(base - cross, 0.0))
    return pair_v(r12) + pair_v(r13) + pair_v(r23)


def hyperangular_eigenvalue(rho: float, pair_v: Callable, n_alpha: int = 160, n_theta: int = 96,
                            sub: int = 3, length: float = 1.0) -> float:
    """Lowest eigenvalue ``lambda`` of ``-Lambda^2 + 2 rho^2 sum V`` (M = 0, bosons).

    Finite volumes in ``(alpha, theta)`` with the measure ``sin a cos a``,
    cells graded toward the pair-coincidence points; the potential is
    averaged over ``sub x sub`` points per cell.
    """
    w = min(0.2, 1.5 * length / max(rho, 1e-12))
    fa = _graded(0.0, math.pi / 2, [0.0, math.pi / 3], n_alpha, w)
    ft = _graded(0.0, math.pi, [0.0, math.pi], n_theta, 2 * w)
    da, dt = np.diff(fa), np.diff(ft)
    ca, ct = 0.5 * (fa[1:] + fa[:-1]), 0.5 * (ft[1:] + ft[:-1])
    # cell-averaged potential
    ua = (np.arange(sub) + 0.5) / sub
    As = (fa[:-1, None] + da[:, None] * ua[None]).reshape(-1)
    Ts = (ft[:-1, None] + dt[:, None] * ua[None]).reshape(-1)
    Vs = _pair_sum(As[:, None], Ts[None, :], rho, pair_v)
    wgt = np.sin(As) * np.cos(As)
    Vs = (Vs * wgt[:, None]).reshape(n_alpha, sub, n_theta, sub).sum(axis=(1, 3))
    wcell = wgt.reshape(n_alpha, sub).sum(1)
    Vc = Vs / (wcell[:, None] * sub)
    # finite-volume operator: K f = lam M f
    wa_face = np.sin(fa) * np.cos(fa)
    mass_a = np.sin(ca) * np.cos(ca) * da
    coef_t = (np.cos(ca) / np.sin(ca) + np.sin(ca) / np.cos(ca)) * da  # w (1/s^2 + 1/c^2) da
    N = n_alpha * n_theta
    idx = np.arange(N).reshape(n_alpha, n_theta)
    rows, cols, vals = [], [], []
    diag = np.zeros((n_alpha, n_theta))
    # alpha faces
    ga = wa_face[1:-1] / (ca[1:] - ca[:-1])  # interior faces
    for i in range(n_alpha - 1):
        cnd = ga[i] * dt
        diag[i] += cnd
        diag[i + 1] += cnd
        rows += [idx[i], idx[i + 1]]
        cols += [idx[i + 1], idx[i]]
        vals += [-cnd, -cnd]
    gt = 1.0 / (ct[1:] - ct[:-1])
    for j in range(n_theta - 1):
        cnd = coef_t * gt[j]
        diag[:, j] += cnd
        diag[:, j + 1] += cnd
        rows += [idx[:, j], idx[:, j + 1]]
        cols += [idx[:, j + 1], idx[:, j]]
        vals += [-cnd, -cnd]
    M = (mass_a[:, None] * dt[None, :])
    diag = diag + 2.0 * rho * rho * Vc * M
    rows.append(idx.reshape(-1))
    cols.append(idx.reshape(-1))
    vals.append(diag.reshape(-1))
    K = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    d = 1.0 / np.sqrt(M.reshape(-1))
    Ks = sparse.diags(d) @ K @ sparse.diags(d)
    sigma = 2.0 * rho * rho * float(Vc.min()) - 1.0
    lam = splinalg.eigsh(Ks, k=1, sigma=sigma, which="LM", return_eigenvectors=False)
    return float(lam[0])


def square_well_breakpoints(R0: float) -> list[float]:
    return [R0 / _SQ2, R0 * math.sqrt(2.0 / 3.0), R0 * _SQ2]


def veff_from_pair_squarewell(R0: float, V0: float, rho_grid: Optional[Sequence[float]] = None,
                              match_rho: Optional[float] = None, split_factor: float = 5.0,
                              diagonal: bool = True, **fv) -> AdiabaticChannel:
    """Lowest channel for the pairwise well ``V = -V0`` for ``r < R0``.

    The hyperangular eigenvalue is computed by finite volumes up to
    ``match_rho`` (default ``10 R0``) and continued by the zero-range
    channel of the pair's dimer energy beyond.  The grid always contains
    the three configuration breakpoints ``R0/sqrt 2``, ``R0 sqrt(2/3)``,
    ``R0 sqrt 2``.  ``split_rho`` defaults to five times the pair range.
    With ``diagonal`` the non-adiabatic term is added in its zero-range
    form, which is exact at large ``rho`` and negligible inside the range.
    """
    if V0 <= 0 or R0 <= 0:
        raise ValueError("need V0 > 0 and R0 > 0")
    pair = lambda r: np.where(r < R0, -V0, 0.0)
    E2 = twobody.bound_states(SquareWellBarrier(V0 * R0 * R0, 0.0, R0, 2 * R0))[0].energy
    match_rho = 10.0 * R0 if match_rho is None else match_rho
    if rho_grid is None:
        rho_grid = np.concatenate([np.linspace(0.05 * R0, 2.0 * R0, 40), np.geomspace(2.0 * R0, match_rho, 25)[1:]])
    grid = np.unique(np.concatenate([np.asarray(rho_grid, float), square_well_breakpoints(R0)]))
    grid = grid[grid <= match_rho]
    u = np.empty_like(grid)
    for i, r in enumerate(grid):
        if r <= R0 / _SQ2:
            u[i] = -6.0 * V0  # every pair inside the well: lambda = -6 V0 rho^2 exactly
        else:
            u[i] = hyperangular_eigenvalue(r, pair, length=R0, **fv) / (r * r)
    if diagonal:
        u += lon_diagonal(math.sqrt(-E2) * grid) / grid**2
    return AdiabaticChannel(grid, u, split_rho=split_factor * R0, E2_ref=E2, diagonal=diagonal)


# ---------------------------------------------------------------------------
# square-well window estimates
# ---------------------------------------------------------------------------

class WindowVariant(str, enum.Enum):
    BARRIER_OUTSIDE = "BarrierOutside"
    CORE_INSIDE = "CoreInside"
    CORE_INSIDE_WEIGHTED = "CoreInsideWeighted"
    CORE_INSIDE_REDUCED = "CoreInsideReduced"


@dataclass(frozen=True)
class WindowEstimate:
    s: float
    h2_threshold: float
    h3_over_factor: float
    window: Optional[tuple[float, float]]
    variant: WindowVariant


def mean_attraction(s: float) -> float:
    """Weighted average strength ``19 (1 - 36 s^2/19) / (12 (1 - s^2))``."""
    # expanded numerator keeps dyadic s exact
    return (19.0 - 36.0 * s * s) / (12.0 * (1.0 - s * s))


def three_body_core_residual(h: float, s: float) -> float:
    """Hard-core condition with the ``l* = 1/2`` tail: ``J0(x_l) Y1(x_s) - Y0(x_l) J1(x_s)``."""
    zl = math.sqrt(h / (1.0 - s * s))
    zs = s * zl
    return sf.J0(zl) * sf.Y1(zs) - sf.Y0(zl) * sf.J1(zs)


def h3_of_s(s: float, h_ceiling: float = 1e6) -> float:
    """Lowest three-body hard-core volume ``h3`` at radius ratio ``s``."""
    if not (0 < s < 1):
        raise ValueError("s must lie in (0, 1)")
    h = 1e-8
    f0 = three_body_core_residual(h, s)
    while True:
        h2 = h * 1.05
        if h2 > h_ceiling:
            raise RuntimeError(f"no three-body threshold below h = {h_ceiling} for s = {s}")
        f2 = three_body_core_residual(h2, s)
        if f0 * f2 <= 0:
            return optimize.brentq(three_body_core_residual, h, h2, args=(s,), xtol=1e-300, rtol=1e-14)
        h, f0 = h2, f2


def barrier_outside_window(f_mu: float = 2.0, f_V: float = 3.0, f_R: float = 0.5) -> tuple[float, float]:
    """Deep-barrier window ``(j_{1,1}^2 / (f_mu f_V f_R), j_{0,1}^2)`` in ``h2``."""
    factor = f_mu * f_V * f_R
    return sf.J1_FIRST_ZERO ** 2 / factor, sf.J0_FIRST_ZERO ** 2


def _window(lower: float, upper: float):
    return (lower, upper) if upper > lower else None


def window_estimates(s_grid: Sequence[float], variants: Sequence[WindowVariant] = tuple(WindowVariant),
                     f_mu: float = 2.0, f_V: float = 3.0, f_R: float = 0.5,
                     reduction: float = 2.0 / 3.0) -> list[WindowEstimate]:
    """Rough Borromean windows in the two-body volume ``h2`` per radius ratio.

    * BarrierOutside: deep-barrier node volumes, ``h3/h2 = f_mu f_V f_R``.
    * CoreInside: ``8 h2 > h3`` (mass ratio 2, strength ``2 V_l``, radius
      factor 2).
    * CoreInsideWeighted: ``2 V_l`` replaced by the weighted average
      :func:`mean_attraction`, i.e. ``4 <V> h2 > h3``.
    * CoreInsideReduced: the weighted volume further multiplied by
      ``reduction`` (2/3), which raises the required ``h2`` by 3/2.
    """
    out = []
    lo_b, hi_b = barrier_outside_window(f_mu, f_V, f_R)
    for s in s_grid:
        s = float(s)
        if not (0 < s < 1):
            raise ValueError("s must lie in (0, 1)")
        need_core = any(v is not WindowVariant.BARRIER_OUTSIDE for v in variants)
        h2 = twobody.h_of_s(s) if need_core else math.nan
        h3 = h3_of_s(s) if need_core else math.nan
        V = mean_attraction(s)
        for v in variants:
            v = WindowVariant(v)
            if v is WindowVariant.BARRIER_OUTSIDE:
                # the deep-barrier estimate does not depend on s; two-body edge j01^2
                out.append(WindowEstimate(s, hi_b, lo_b, _window(lo_b, hi_b), v))
                continue
            if v is WindowVariant.CORE_INSIDE:
                curve = h3 / 8.0
            else:
                curve = h3 / (4.0 * V) if V > 0 else math.inf
                if v is WindowVariant.CORE_INSIDE_REDUCED:
                    curve = curve / reduction
            out.append(WindowEstimate(s, h2, curve, _window(curve, h2), v))
    return out


def fig2a_curves(s_grid: Sequence[float]) -> dict[str, np.ndarray]:
    """The two-body threshold and the dot-dashed/dashed three-body estimates."""
    ests = window_estimates(s_grid, (WindowVariant.CORE_INSIDE_WEIGHTED, WindowVariant.CORE_INSIDE_REDUCED))
    s = np.asarray(s_grid, float)
    h2 = np.array([e.h2_threshold for e in ests[0::2]])
    dot = np.array([e.h3_over_factor for e in ests[0::2]])
    dash = np.array([e.h3_over_factor for e in ests[1::2]])
    return {"s": s, "h2_threshold": h2, "h3_dotdash": dot, "h3_dashed": dash}
