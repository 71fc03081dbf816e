"""
Three identical bosons in two dimensions: stochastic variational method.

Trial functions are symmetrized correlated Gaussians

    psi = S exp(-a12 r12^2 - a13 r13^2 - a23 r23^2)

written in Jacobi coordinates ``x1 = r1 - r2``, ``x2 = (r1 + r2)/2 - r3``
as ``exp(-x^T A x)``.  Overlap and kinetic matrix elements are closed
form; pair potentials are averaged over the two-dimensional pair-distance
density ``2 g r exp(-g r^2)`` of each matrix element, which is closed form
for Gaussian and r^2 terms on any radial interval and uses Gauss-Legendre
quadrature for exponential tails.

Units: hbar^2/m = 1, so the pair Hamiltonian matches :mod:`twobody`.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from . import twobody
from .potentials import (
    CoreWell,
    DeltaShell,
    GaussianSum,
    Piecewise,
    PotentialSpec,
    Scaled,
    SplitStrength,
    SquareWellBarrier,
    StrengthFamily,
    TruncatedOscillator,
)

log = logging.getLogger(__name__)

EPS_BIND = 1e-6
COND_LIMIT = 1e12
ALPHA_RANGE = (1e-3, 1e3)
TRIALS = 30
# candidates nearly inside the current span are skipped before selection
MIN_RESIDUAL = 1e-7

# pair vectors: r_ij = w . (x1, x2)
_W = np.array([[1.0, 0.0], [0.5, 1.0], [-0.5, 1.0]])
# kinetic weights: T = -(grad1^2 + 3/4 grad2^2); <T> = 4 tr(A L B C^-1) O
_LAM = np.array([1.0, 0.75])
_PERMS = list(itertools.permutations(range(3)))
_GL_X, _GL_W = np.polynomial.legendre.leggauss(96)


class UnsupportedPotentialError(TypeError):
    pass


class SvmConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianElement:
    alphas: tuple[float, float, float]

    def __post_init__(self):
        if len(self.alphas) != 3 or not all(a > 0 and math.isfinite(a) for a in self.alphas):
            raise ValueError("a Gaussian element needs three positive widths")

    def matrix(self) -> np.ndarray:
        a = np.asarray(self.alphas)
        return np.einsum("p,pi,pj->ij", a, _W, _W)


@dataclass
class GaussianBasis:
    elements: list[GaussianElement] = field(default_factory=list)
    seed: int = 0
    growth_log: list[dict] = field(default_factory=list)


@dataclass
class Spectrum3:
    energies: np.ndarray
    basis_size: int
    rms_radius_ground: float
    converged: bool
    rms_radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: Optional[GaussianBasis] = None


@dataclass(frozen=True)
class BorromeanWindow:
    lambda_minus: float
    lambda_plus_cr: float
    Lambda_plus_cr: float
    window_open: bool
    basis_size: int = 0
    residual: float = 0.0
    three_halves_ok: bool = True


# ---------------------------------------------------------------------------
# matrix elements
# ---------------------------------------------------------------------------

_SUPPORTED = (GaussianSum, SquareWellBarrier, CoreWell, TruncatedOscillator,
              Scaled, SplitStrength, Piecewise)


def _segments(spec: PotentialSpec):
    if isinstance(spec, DeltaShell) or not isinstance(spec, _SUPPORTED):
        raise UnsupportedPotentialError(f"{type(spec).__name__} is not supported by the SVM solver")
    return spec.form().segments


def pair_average(segments, gamma: np.ndarray) -> np.ndarray:
    """``int_0^inf 2 g r exp(-g r^2) V(r) dr`` for an array of ``g``."""
    g = np.asarray(gamma, dtype=float)
    out = np.zeros_like(g)
    for seg in segments:
        a, b = seg.a, seg.b
        for t in seg.terms:
            if t.kappa:
                hi = b if math.isfinite(b) else a + 60.0 / t.kappa
                mid, half = 0.5 * (a + hi), 0.5 * (hi - a)
                r = mid + half * _GL_X
                f = t(r)
                dens = 2.0 * g[..., None] * r * np.exp(-g[..., None] * r * r)
                out += half * np.sum(_GL_W * f * dens, axis=-1)
                continue
            beta = g + t.c
            ea = np.exp(-beta * a * a)
            eb = np.exp(-beta * b * b) if math.isfinite(b) else 0.0
            if t.p == 0:
                out += t.amp * g / beta * (ea - eb)
            elif t.p == 1:
                bb = b * b if math.isfinite(b) else 0.0
                out += t.amp * g / beta * ((a * a + 1 / beta) * ea - (bb + 1 / beta) * eb)
            else:
                raise UnsupportedPotentialError("only r^0 and r^2 polynomial factors are supported")
    return out


def _inv2(C):
    det = C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]
    inv = np.empty_like(C)
    inv[..., 0, 0] = C[..., 1, 1] / det
    inv[..., 1, 1] = C[..., 0, 0] / det
    inv[..., 0, 1] = -C[..., 0, 1] / det
    inv[..., 1, 0] = -C[..., 1, 0] / det
    return det, inv


def _elements(A: np.ndarray, B: np.ndarray, segments):
    """Overlap, Hamiltonian and sum r_ij^2 between ``exp(-x^T A x)`` and ``exp(-x^T B x)``.

    ``A`` and ``B`` broadcast over leading axes.
    """
    C = A + B
    det, Ci = _inv2(C)
    O = math.pi ** 2 / det
    ALB = np.einsum("...ij,j,...jk->...ik", A, _LAM, B)
    T = 4.0 * np.einsum("...ij,...ji->...", ALB, Ci)
    q = np.einsum("pi,...ij,pj->...p", _W, Ci, _W)  # <r_p^2> per pair
    V = pair_average(segments, 1.0 / q).sum(axis=-1) if segments else 0.0
    return O, O * (T + V), O * q.sum(axis=-1) / 3.0


def _perm_mats(alphas: np.ndarray) -> np.ndarray:
    """All six label permutations of a width triple, as Jacobi matrices."""
    trip = np.asarray([[alphas[i] for i in p] for p in _PERMS])
    return np.einsum("kp,pi,pj->kij", trip, _W, _W)


def _row(cand: np.ndarray, mats: np.ndarray, segments):
    """Symmetrized elements <basis_j | X | S cand> for all j plus the diagonal."""
    P = _perm_mats(cand)  # 6 x 2 x 2
    if len(mats):
        O, H, R = _elements(mats[:, None], P[None], segments)
        o, h, r = O.sum(1), H.sum(1), R.sum(1)
    else:
        o = h = r = np.zeros(0)
    Ad = P[0]
    O0, H0, R0 = _elements(Ad[None], P, segments)
    return o, h, r, O0.sum(), H0.sum(), R0.sum()


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

class _Basis:
    """Growing symmetrized basis with normalized functions."""

    def __init__(self, segments):
        self.segments = segments
        self.alphas: list[np.ndarray] = []
        self.mats = np.zeros((0, 2, 2))
        self.S = np.zeros((0, 0))
        self.H = np.zeros((0, 0))
        self.R = np.zeros((0, 0))
        self._raw = np.zeros(0)  # unnormalized self-overlaps
        self.e = np.zeros(0)
        self.vec = np.zeros((0, 0))

    def candidate(self, cand):
        o, h, r, o0, h0, r0 = _row(cand, self.mats, self.segments)
        if not (o0 > 0 and np.isfinite(h0)):
            return None
        # normalize <cand|cand> = 1; basis functions are already normalized
        n0 = math.sqrt(o0)
        scale = 1.0 / (n0 * np.sqrt(self._raw))
        return (o * scale, h * scale, r * scale, h0 / o0, r0 / o0, o0)

    def trial_energy(self, row, state: int) -> float:
        """Eigenvalue ``state`` after adding ``row`` (rank-one arrowhead update)."""
        s, h, _, h00, _, _ = row
        if len(self.e) == 0:
            return h00 if state == 0 else math.inf
        b = self.vec.T @ s
        g = self.vec.T @ h
        n2 = 1.0 - b @ b
        if n2 < MIN_RESIDUAL:
            return math.inf
        n = math.sqrt(n2)
        z = (g - self.e * b) / n
        z0 = (h00 - 2.0 * (b @ g) + (self.e * b) @ b) / n2
        e = self.e
        if state > len(e):
            return math.inf

        def f(E):
            return z0 - E - np.sum(z * z / (e - E))

        up = e[state] if state < len(e) else math.inf
        low = e[state - 1] if state > 0 else min(e[0], z0) - math.sqrt(z @ z) - 1.0
        if not math.isfinite(up):
            up = max(e[-1], z0) + math.sqrt(z @ z) + 1.0
        span = (up - low)
        a = low + 1e-14 * span if state > 0 else low
        bnd = up - 1e-14 * max(span, abs(up))
        try:
            fa, fb = f(a), f(bnd)
        except FloatingPointError:
            return math.inf
        if not (fa > 0 > fb):
            return up
        return optimize.brentq(f, a, bnd, xtol=1e-15 * max(1.0, abs(up)), rtol=1e-14)

    def add(self, cand, row):
        s, h, r, h00, r00, o0 = row
        k = len(self.alphas)
        S = np.empty((k + 1, k + 1))
        H = np.empty_like(S)
        R = np.empty_like(S)
        S[:k, :k], H[:k, :k], R[:k, :k] = self.S, self.H, self.R
        S[k, :k] = S[:k, k] = s
        H[k, :k] = H[:k, k] = h
        R[k, :k] = R[:k, k] = r
        S[k, k], H[k, k], R[k, k] = 1.0, h00, r00
        w = np.linalg.eigvalsh(S)
        if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
            return False
        self.S, self.H, self.R = S, H, R
        self._raw = np.append(self._raw, o0)
        self.alphas.append(np.asarray(cand))
        self.mats = np.concatenate([self.mats, cand_matrix(cand)[None]])
        self._solve()
        return True

    def _solve(self):
        w, U = np.linalg.eigh(self.S)
        keep = w > w[-1] / COND_LIMIT
        X = U[:, keep] / np.sqrt(w[keep])
        e, y = np.linalg.eigh(X.T @ self.H @ X)
        self.e = e
        self.vec = X @ y  # columns S-orthonormal

    def rms(self, k: int) -> float:
        c = self.vec[:, k]
        return math.sqrt(max(c @ self.R @ c, 0.0))


def cand_matrix(alphas) -> np.ndarray:
    return np.einsum("p,pi,pj->ij", np.asarray(alphas), _W, _W)


def _sample(rng: np.random.Generator, lo: float, hi: float) -> np.ndarray:
    return np.exp(rng.uniform(math.log(lo), math.log(hi), 3))


def trimer_spectrum(spec: PotentialSpec, basis_budget: int = 100, seed: int = 0,
                    alpha_range: Optional[Sequence[float]] = None, trials: int = TRIALS,
                    target_state: int = 0, n_states: int = 2,
                    refine_sweeps: int = 0, conv_tol: float = 1e-3) -> Spectrum3:
    """Lowest S-wave levels of three identical bosons interacting through ``spec``.

    Parameters
    ----------
    basis_budget : int
        Number of symmetrized elements to grow.
    seed : int
        Seed of the PCG64 generator that drives candidate sampling.
    alpha_range : (lo, hi), optional
        Log-uniform sampling range of the pair widths in units of
        ``1/length_scale^2``; defaults to ``(1e-3, 1e3)``.
    target_state : int
        Candidate selection minimizes this eigenvalue (0 = ground state).
        After the ground state has settled, raising this index lets the
        basis chase an excited level without losing the variational bound.
    refine_sweeps : int
        Extra passes that try to replace each element by a better candidate.

    Notes
    -----
    ``converged`` is set when the selected eigenvalue changed by less than
    ``conv_tol`` (relative, or ``EPS_BIND`` absolute) over the last fifth
    of the growth.
    """
    if basis_budget < 1:
        raise ValueError("basis_budget must be >= 1")
    segments = _segments(spec)
    L = spec.length_scale
    lo, hi = alpha_range if alpha_range is not None else ALPHA_RANGE
    lo, hi = lo / L**2, hi / L**2
    rng = np.random.Generator(np.random.PCG64(seed))
    basis = _Basis(segments)
    glog = GaussianBasis(seed=seed)
    history = []
    while len(basis.alphas) < basis_budget:
        state = min(target_state, len(basis.alphas))
        best, best_row, best_e = None, None, math.inf
        for _ in range(trials):
            cand = _sample(rng, lo, hi)
            row = basis.candidate(cand)
            if row is None:
                continue
            e = basis.trial_energy(row, state)
            if e < best_e:  # strict: lowest index wins ties
                best, best_row, best_e = cand, row, e
        if best is None or not basis.add(best, best_row):
            log.debug("candidate rejected at size %d", len(basis.alphas))
            glog.growth_log.append({"trial_count": trials, "energy_after": _cur(basis, target_state),
                                    "rejected": True})
            if len(glog.growth_log) > 20 * basis_budget:
                raise SvmConvergenceError("basis growth stalled")
            continue
        glog.elements.append(GaussianElement(tuple(float(a) for a in best)))
        glog.growth_log.append({"trial_count": trials, "energy_after": _cur(basis, target_state)})
        history.append(_cur(basis, target_state))

    for _ in range(refine_sweeps):
        _refine(basis, rng, lo, hi, trials, target_state, glog)
        history.append(_cur(basis, target_state))

    n = min(n_states, len(basis.e))
    tail = history[-max(2, len(history) // 5):]
    ref = tail[-1]
    converged = abs(tail[0] - ref) <= max(conv_tol * abs(ref), EPS_BIND)
    rms = np.array([basis.rms(k) for k in range(n)])
    glog.elements = [GaussianElement(tuple(float(a) for a in al)) for al in basis.alphas]
    return Spectrum3(basis.e[:n].copy(), len(basis.alphas), float(rms[0]), bool(converged), rms, glog)


def _cur(basis: _Basis, state: int) -> float:
    if len(basis.e) == 0:
        return math.inf
    return float(basis.e[min(state, len(basis.e) - 1)])


def _refine(basis: _Basis, rng, lo, hi, trials, state, glog):
    """Try to replace each element by a candidate that lowers the target level."""
    for k in range(len(basis.alphas)):
        current = _cur(basis, state)
        old = basis.alphas[k]
        best, best_e = None, current
        for _ in range(trials):
            cand = _sample(rng, lo, hi)
            e = _replace_energy(basis, k, cand, state)
            if e < best_e:
                best, best_e = cand, e
        if best is not None:
            _replace(basis, k, best)
            if _cur(basis, state) > current:
                _replace(basis, k, old)


def _rebuild(basis: _Basis, alphas: list[np.ndarray]):
    mats = np.array([cand_matrix(a) for a in alphas])
    k = len(alphas)
    S = np.empty((k, k))
    H = np.empty((k, k))
    R = np.empty((k, k))
    for j, a in enumerate(alphas):
        P = _perm_mats(a)
        O, Hm, Rm = _elements(mats[:, None], P[None], basis.segments)
        S[:, j], H[:, j], R[:, j] = O.sum(1), Hm.sum(1), Rm.sum(1)
    S = 0.5 * (S + S.T)
    H = 0.5 * (H + H.T)
    R = 0.5 * (R + R.T)
    d = np.sqrt(np.diag(S))
    return S / np.outer(d, d), H / np.outer(d, d), R / np.outer(d, d), d * d, mats


def _replace_energy(basis, k, cand, state) -> float:
    alphas = list(basis.alphas)
    alphas[k] = cand
    S, H, _, _, _ = _rebuild_row(basis, k, cand)
    w, U = np.linalg.eigh(S)
    if w[0] <= 0 or w[-1] / w[0] > COND_LIMIT:
        return math.inf
    X = U / np.sqrt(w)
    e = np.linalg.eigvalsh(X.T @ H @ X)
    return float(e[min(state, len(e) - 1)])


def _rebuild_row(basis, k, cand):
    """Matrices with element ``k`` swapped for ``cand`` (only one row recomputed)."""
    mats = basis.mats.copy()
    mats[k] = cand_matrix(cand)
    P = _perm_mats(cand)
    O, Hm, Rm = _elements(mats[:, None], P[None], basis.segments)
    o, h, r = O.sum(1), Hm.sum(1), Rm.sum(1)
    raw = basis._raw.copy()
    raw[k] = o[k]
    nrm = np.sqrt(raw)
    S, H, R = basis.S.copy(), basis.H.copy(), basis.R.copy()
    S[k, :] = S[:, k] = o / (nrm * nrm[k])
    H[k, :] = H[:, k] = h / (nrm * nrm[k])
    R[k, :] = R[:, k] = r / (nrm * nrm[k])
    return S, H, R, raw, mats


def _replace(basis, k, cand):
    S, H, R, raw, mats = _rebuild_row(basis, k, cand)
    basis.S, basis.H, basis.R, basis._raw, basis.mats = S, H, R, raw, mats
    basis.alphas[k] = np.asarray(cand)
    basis._solve()


# ---------------------------------------------------------------------------
# thresholds and scans
# ---------------------------------------------------------------------------

def is_trimer_bound(spec: PotentialSpec, basis_budget: int, seed: int,
                    eps_bind: float = EPS_BIND, **kw) -> tuple[bool, Spectrum3]:
    sp = trimer_spectrum(spec, basis_budget, seed, n_states=1, **kw)
    return bool(sp.energies[0] < -eps_bind), sp


def critical_Lambda_plus(family, lambda_minus: float, tol: float = 1e-3,
                         basis_budget: int = 60, seed: int = 0,
                         lambda_plus_two_body: Optional[float] = None,
                         eps_bind: float = EPS_BIND, **kw) -> twobody.ThresholdPoint:
    """Three-body critical repulsion ``Lambda_+^cr`` at fixed ``lambda_-``.

    The bracket starts at the two-body threshold (a bound dimer always
    implies a bound trimer) and expands upward; bisection then narrows it to
    relative width ``tol``.  The residual is the final bracket width.
    """
    if not isinstance(family, StrengthFamily):
        family = StrengthFamily(family)
    if lambda_plus_two_body is None:
        lambda_plus_two_body = twobody.critical_lambda_plus(family, lambda_minus, tol=1e-8).lambda_plus_cr
    if math.isinf(lambda_plus_two_body):
        return twobody.ThresholdPoint(lambda_minus, math.inf, twobody.Method.INTEGRAL_EQ, 0.0)

    def bound(lp):
        spec = family.at(lambda_minus, lp)
        ok, sp = is_trimer_bound(spec, basis_budget, seed, eps_bind, **kw)
        if not sp.converged and ok is False:
            ok2, sp2 = is_trimer_bound(spec, 2 * basis_budget, seed, eps_bind, **kw)
            ok = ok2
        return ok

    lo = lambda_plus_two_body
    step = max(lo, 1e-3) * 0.25
    hi = lo + step
    while bound(hi):
        lo = hi
        step *= 2.0
        hi = lo + step
        if hi > twobody.LAMBDA_PLUS_CEILING:
            return twobody.ThresholdPoint(lambda_minus, math.inf, twobody.Method.INTEGRAL_EQ, 0.0)
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if bound(mid):
            lo = mid
        else:
            hi = mid
    return twobody.ThresholdPoint(lambda_minus, 0.5 * (lo + hi), twobody.Method.INTEGRAL_EQ, hi - lo)


def three_halves_check(spec: PotentialSpec, basis_budget: int = 60, seed: int = 0, **kw) -> bool:
    """A bound trimer at ``g`` requires a bound dimer at ``3/2 g``."""
    bound3, _ = is_trimer_bound(spec, basis_budget, seed, **kw)
    if not bound3:
        return True
    return twobody.is_bound_ode(Scaled(spec, 1.5))


def borromean_scan(family, lambda_minus_grid: Sequence[float], tol: float = 1e-3,
                   basis_budget: int = 60, seed: int = 0, **kw) -> list[BorromeanWindow]:
    if len(lambda_minus_grid) == 0:
        raise ValueError("empty lambda_- grid")
    if not isinstance(family, StrengthFamily):
        family = StrengthFamily(family)
    out = []
    for lm in lambda_minus_grid:
        two = twobody.critical_lambda_plus(family, lm, tol=1e-8)
        if isinstance(family.shape, DeltaShell):
            out.append(BorromeanWindow(lm, two.lambda_plus_cr, two.lambda_plus_cr, False))
            continue
        three = critical_Lambda_plus(family, lm, tol, basis_budget, seed,
                                     lambda_plus_two_body=two.lambda_plus_cr, **kw)
        L2, L3 = two.lambda_plus_cr, three.lambda_plus_cr
        combined = three.residual + 1e-8 * max(abs(L2), 1.0)
        is_open = bool(math.isinf(L3) and not math.isinf(L2)) or (L3 - L2 > combined)
        ok = True
        if not math.isinf(L3):
            ok = three_halves_check(family.at(lm, min(L3, three.lambda_plus_cr)), basis_budget, seed, **kw)
        out.append(BorromeanWindow(lm, L2, L3, is_open, basis_budget, three.residual, ok))
    return out
