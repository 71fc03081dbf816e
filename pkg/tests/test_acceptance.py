"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import math

import numpy as np
import pytest

from borromean2d import hyperradial as hr
from borromean2d import specfun as sf
from borromean2d import threebody as t3
from borromean2d import twobody as tb
from borromean2d.potentials import (CoreWell, GaussianSum, SquareWellBarrier, StrengthFamily,
                                    TruncatedOscillator, fig3_shape, nielsen_potential)

EPS_BIND = 1e-6


def report(n: int, ok: bool, detail: str) -> None:
    print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def _rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------
# 1. special functions
# ---------------------------------------------------------------------------

def _ddx(f, x, singular=False):
    """Central difference Richardson-extrapolated over three step halvings.

    Functions with a logarithmic singularity at the origin need a step
    proportional to ``x``; regular ones keep a fixed step to limit roundoff.
    """
    h = 0.05 * min(1.0, x / 4) if singular else min(0.05, 0.9 * x)
    D = [(f(x + hk) - f(x - hk)) / (2 * hk) for hk in (h, h / 2, h / 4, h / 8)]
    for k in (1, 2, 3):
        D = [(4**k * D[i + 1] - D[i]) / (4**k - 1) for i in range(len(D) - 1)]
    return D[0]


def test_criterion_01_special_functions():
    xs = np.concatenate([np.geomspace(0.01, 1.0, 40), np.linspace(1.0, 100.0, 200)])
    worst_w = worst_d = 0.0
    for x in xs:
        w_jy = sf.J0(x) * sf.Y1(x) - sf.J1(x) * sf.Y0(x)
        w_ik = sf.I0(x, True) * sf.K1(x, True) + sf.I1(x, True) * sf.K0(x, True)
        worst_w = max(worst_w, _rel(w_jy, -2 / (math.pi * x)), _rel(w_ik, 1 / x))
        # derivative identities, relative to the local envelope of each family
        env_jy = math.hypot(sf.J0(x), sf.Y0(x)) + math.hypot(sf.J1(x), sf.Y1(x))
        checks = [
            (_ddx(sf.J0, x), -sf.J1(x), env_jy),
            (_ddx(sf.Y0, x, True), -sf.Y1(x), env_jy),
            (_ddx(lambda t: t * sf.J1(t), x), x * sf.J0(x), x * env_jy),
            (_ddx(lambda t: t * sf.Y1(t), x, True), x * sf.Y0(x), x * env_jy),
        ]
        if x <= 30:
            checks += [
                (_ddx(sf.I0, x), sf.I1(x), sf.I1(x)),
                (_ddx(sf.K0, x, True), -sf.K1(x), sf.K1(x)),
                (_ddx(lambda t: t * sf.I1(t), x), x * sf.I0(x), x * sf.I0(x)),
                (_ddx(lambda t: t * sf.K1(t), x, True), -x * sf.K0(x), x * sf.K0(x)),
            ]
        for lhs, rhs, scale in checks:
            worst_d = max(worst_d, abs(lhs - rhs) / abs(scale))
    z0 = abs(sf.bessel_zero("J0", 1) - 2.404825557695773)
    z1 = abs(sf.bessel_zero("J1", 1) - 3.831705970207512)
    ok = worst_w < 1e-10 and worst_d < 1e-10 and z0 < 1e-9 and z1 < 1e-9
    report(1, ok, f"Wronskian {worst_w:.1e}, derivatives {worst_d:.1e}, zeros {z0:.1e}/{z1:.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 2. weak-coupling law
# ---------------------------------------------------------------------------

FIG3 = StrengthFamily(fig3_shape())


def test_criterion_02_weak_coupling():
    lines, ok = [], True
    for lm in (0.05, 0.1):
        num = tb.critical_lambda_plus(FIG3, lm, tol=1e-9).lambda_plus_cr
        pred = tb.weak_limit_lambda_plus(FIG3, lm)
        d = _rel(num, pred)
        ok &= d < 0.02
        lines.append(f"lm={lm}: {num:.6g} vs weak-limit {pred:.6g} ({100 * d:.2f}%)")
    report(2, ok, "; ".join(lines))
    assert ok


def test_criterion_02_equal_strength_clause():
    # the shape as printed has nonzero net volume, so lambda_+^cr = lambda_- cannot hold
    lines, ok = [], True
    for lm in (0.05, 0.1):
        num = tb.critical_lambda_plus(FIG3, lm, tol=1e-9).lambda_plus_cr
        d = _rel(num, lm)
        ok &= d < 0.02
        lines.append(f"lm={lm}: {num:.6g} vs {lm} ({100 * d:.1f}%)")
    report(2, ok, "equal-strength clause; " + "; ".join(lines))
    assert ok


# ---------------------------------------------------------------------------
# 3. analytic vs numeric thresholds
# ---------------------------------------------------------------------------

def _random_configs(n=25, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        model = "barrier" if i % 2 == 0 else "core"
        s = float(rng.uniform(0.25, 0.75))
        cap = tb.lambda_minus_cr(model, s, 1.0)
        lm = float(rng.uniform(0.05, 0.7) * cap)
        out.append((model, s, lm))
    return out


def test_criterion_03_threshold_agreement():
    worst = 0.0
    for model, s, lm in _random_configs():
        shape = SquareWellBarrier(1, 1, s, 1.0) if model == "barrier" else CoreWell(1, 1, s, 1.0)
        fam = StrengthFamily(shape)
        a = tb.analytic_lambda_plus_cr(model, lm, s, 1.0, rtol=1e-13).lambda_plus_cr
        ie = tb.critical_lambda_plus(fam, lm, tol=1e-7, n=4000, check_monotone=False).lambda_plus_cr
        ode = tb.critical_lambda_plus(fam, lm, tol=1e-7, method="OdeOracle", check_monotone=False).lambda_plus_cr
        worst = max(worst, _rel(ie, a), _rel(ode, a))
    ok = worst < 1e-5
    report(3, ok, f"25 configurations, worst relative deviation {worst:.2e}")
    assert ok


# ---------------------------------------------------------------------------
# 4. Fig. 1 curve
# ---------------------------------------------------------------------------

def test_criterion_04_h_curve():
    s = np.geomspace(1e-4, 0.99, 80)
    h = tb.h_curve(s).y
    monotone = bool(np.all(np.diff(h) > 0))
    small = np.geomspace(1e-4, 1e-2, 20)
    hs = tb.h_curve(small).y
    slope = np.polyfit(np.log(-1.0 / np.log(small)), np.log(hs), 1)[0]
    near = np.linspace(0.9, 0.99, 10)
    prod = tb.h_curve(near).y * (1 - near)
    bounded = bool(np.all(np.isfinite(prod)) and prod.min() > 0 and prod.max() / prod.min() < 1.5)
    deep = tb.deep_barrier_limit(2) ** 2
    ok = monotone and abs(slope - 1) < 0.1 and bounded and abs(deep - 5.783185962946784) < 1e-6
    report(4, ok, f"monotone {monotone}, small-s exponent {slope:.4f}, h(1-s) in "
                  f"[{prod.min():.4f}, {prod.max():.4f}], deep barrier {deep:.9f}")
    assert ok


# ---------------------------------------------------------------------------
# 5. dimensional cross-checks
# ---------------------------------------------------------------------------

def test_criterion_05_dimensions():
    devs = []
    for d in (1, 3):
        devs.append(abs(tb.deep_barrier_limit(d, 1.0) - math.pi))
        for Rs, Rl in ((1.0, 2.0), (0.5, 3.0)):
            devs.append(abs(tb.deep_core_limit(d, Rs, Rl) * (Rl - Rs) - math.pi / 2))
    ok = max(devs) < 1e-6
    report(5, ok, f"worst deviation {max(devs):.1e}")
    assert ok


# ---------------------------------------------------------------------------
# 6. universal trimer
# ---------------------------------------------------------------------------

V_1E4 = 0.23078473871848204  # GaussianSum depth giving E2 = -1e-4


@pytest.fixture(scope="module")
def universal():
    spec = GaussianSum(((-V_1E4, 1.0),))
    e2 = tb.bound_states(spec)[0].energy
    sp = t3.trimer_spectrum(spec, basis_budget=200, seed=7, alpha_range=(1e-7, 3.0), target_state=1)
    return e2, sp


def test_criterion_06_universal_trimer(universal):
    e2, sp = universal
    R2 = math.sqrt(2.0 / (3.0 * abs(e2)))
    r = sp.energies[:2] / e2
    rr = sp.rms_radii[:2] / R2
    checks = [_rel(r[0], 16.52) < 0.03, _rel(r[1], 1.27) < 0.10,
              _rel(rr[0], 0.305) < 0.05, _rel(rr[1], 2.55) < 0.10]
    ok = all(checks) and abs(e2 + 1e-4) < 1e-9
    report(6, ok, f"E2={e2:.4e}; E3/E2 = {r[0]:.4f}, {r[1]:.4f}; R3/R2 = {rr[0]:.4f}, {rr[1]:.4f}; "
                  f"clauses {checks}")
    assert ok


V_1E8 = 0.1119901053140988  # GaussianSum depth giving E2 = -1e-8


def test_universal_trimer_zero_range_limit():
    # closer to the zero-range limit the finite-range shift of the ground state disappears
    spec = GaussianSum(((-V_1E8, 1.0),))
    e2 = tb.bound_states(spec)[0].energy
    sp = t3.trimer_spectrum(spec, basis_budget=200, seed=7, alpha_range=(1e-11, 3.0), target_state=1)
    r = sp.energies[:2] / e2
    rr = sp.rms_radii[:2] / math.sqrt(2.0 / (3.0 * abs(e2)))
    print(f"\n|E2| = 1e-8: E3/E2 = {r[0]:.4f}, {r[1]:.4f}; R3/R2 = {rr[0]:.4f}, {rr[1]:.4f}")
    assert _rel(r[0], 16.52) < 0.03 and _rel(r[1], 1.27) < 0.10


# ---------------------------------------------------------------------------
# 7. truncated oscillator
# ---------------------------------------------------------------------------

def _bisect(pred, lo, hi, rtol):
    # pred(lo) False, pred(hi) True
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if pred(mid) else (mid, hi)
    return 0.5 * (lo + hi)


def test_criterion_07_truncated_oscillator():
    C = 6.0
    g2 = _bisect(lambda g: tb.is_bound_ode(TruncatedOscillator(g, C)), 1.0, 3.0, 1e-8)
    g2_tail = _bisect(lambda g: tb.is_bound_ode(TruncatedOscillator.with_continuous_tail(g, C, 1.0)),
                      1.0, 3.0, 1e-8)
    sens = _rel(g2_tail, g2)
    bound3 = lambda g: t3.trimer_spectrum(TruncatedOscillator(g, C), 40, 5, alpha_range=(1e-2, 1e2),
                                          n_states=1).energies[0] < -EPS_BIND
    g3 = _bisect(bound3, 1.0, 2.0, 1e-5)
    ok = sens < 1e-4 and _rel(g2, 2.0) < 0.005 and _rel(g3, 4 / 3) < 0.01 and g3 >= 4 / 3 * (1 - 0.01)
    report(7, ok, f"C={C}: g2={g2:.7f} (tail sensitivity {sens:.1e}), g3={g3:.7f}")
    assert ok


# ---------------------------------------------------------------------------
# 8. Borromean detection
# ---------------------------------------------------------------------------

def _nielsen_trimer(seed=11):
    return t3.trimer_spectrum(nielsen_potential(), basis_budget=60, seed=seed, n_states=1)


def test_criterion_08_borromean_detection():
    spec = nielsen_potential()
    functional = tb.binding_functional(spec)
    states = tb.bound_states(spec)
    e3 = float(_nielsen_trimer().energies[0])
    ok = functional > 0 and states == [] and e3 < -EPS_BIND
    report(8, ok, f"functional {functional:+.5f}, two-body states {len(states)}, E3 {e3:.5f}")
    assert ok


# ---------------------------------------------------------------------------
# 9. Fig. 3 (long)
# ---------------------------------------------------------------------------

FIG3_GRID = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.2]
_SCAN: dict = {}


def _fig3_scan():
    if "rows" not in _SCAN:
        _SCAN["rows"] = t3.borromean_scan(FIG3, FIG3_GRID, tol=1e-3, basis_budget=60, seed=3)
    return _SCAN["rows"]


def _lambda_minus_cr(bound_at, lo, hi, rtol=2e-3):
    return _bisect(bound_at, lo, hi, rtol)


@pytest.mark.long
def test_criterion_09_fig3():
    rows = _fig3_scan()
    tol = lambda w: w.residual + 1e-8 * max(w.lambda_plus_cr, 1.0)
    coincide = all(abs(w.Lambda_plus_cr - w.lambda_plus_cr) <= tol(w) + 1e-3 * w.lambda_plus_cr
                   for w in rows if w.lambda_minus <= 0.3)
    # the knee: first grid point where lambda_+^cr departs from the delta-shell line by > 10%
    knee = next((w.lambda_minus for w in rows if _rel(w.lambda_plus_cr, w.lambda_minus) > 0.10), math.inf)
    knee_ok = abs(knee - 0.7) <= 0.15
    big = 1e4
    two = _lambda_minus_cr(lambda lm: tb.is_bound_ode(FIG3.at(lm, big)), 1.0, 100.0)
    three = _lambda_minus_cr(
        lambda lm: t3.is_trimer_bound(FIG3.at(lm, big), 80, 3, EPS_BIND)[0], 0.1 * two, two)
    ratio = three / two
    ok = coincide and knee_ok and abs(ratio / (2 / 3) - 1) < 0.10
    table = ", ".join(f"{w.lambda_minus}:({w.lambda_plus_cr:.4g},{w.Lambda_plus_cr:.4g})" for w in rows)
    report(9, ok, f"coincide<=0.3 {coincide}; knee {knee}; lambda_-^cr two {two:.4g} three {three:.4g} "
                  f"ratio {ratio:.4f}; scan {table}")
    assert ok


# ---------------------------------------------------------------------------
# 10. windows never invert
# ---------------------------------------------------------------------------

def _window_points(include_long: bool):
    pts = t3.borromean_scan(StrengthFamily(nielsen_potential()), [1.0], tol=1e-3, basis_budget=60, seed=11)
    pts += t3.borromean_scan(FIG3, [0.05, 0.1], tol=1e-3, basis_budget=40, seed=3)
    if include_long:
        pts += _fig3_scan()
    return pts


def _check_windows(pts):
    bad = [w for w in pts if not (w.Lambda_plus_cr >= w.lambda_plus_cr and w.three_halves_ok)]
    return not bad, bad


def test_criterion_10_no_inversion():
    pts = _window_points(False)
    ok, bad = _check_windows(pts)
    report(10, ok, f"{len(pts)} points, violations {[(w.lambda_minus, w.lambda_plus_cr, w.Lambda_plus_cr) for w in bad]}")
    assert ok


@pytest.mark.long
def test_criterion_10_no_inversion_fig3_scan():
    pts = _fig3_scan()
    ok, bad = _check_windows(pts)
    report(10, ok, f"Fig. 3 scan {len(pts)} points, violations {len(bad)}")
    assert ok


# ---------------------------------------------------------------------------
# 11. appendix window estimates
# ---------------------------------------------------------------------------

def test_criterion_11_window_estimates():
    lo, hi = hr.barrier_outside_window()
    barrier_ok = abs(lo - 14.68 / 3) < 5e-3 / 3 and abs(hi - 5.783) < 5e-4
    mean_ok = hr.mean_attraction(0.5) == 10 / 9
    s = np.round(np.arange(0.01, 0.99, 0.01), 10)
    est = hr.window_estimates(s, (hr.WindowVariant.CORE_INSIDE_WEIGHTED,))
    open_s = np.array([e.s for e in est if e.window is not None])
    idx = np.flatnonzero(np.isin(s, open_s))
    contiguous = len(idx) > 0 and np.all(np.diff(idx) == 1)
    covers = len(open_s) > 0 and open_s.min() <= 0.15 and open_s.max() >= 0.45
    ok = barrier_ok and mean_ok and contiguous and covers
    span = (open_s.min(), open_s.max()) if len(open_s) else None
    report(11, ok, f"BarrierOutside ({lo:.5f}, {hi:.5f}); <V>(1/2) exact {mean_ok}; weighted window open on s in {span}")
    assert ok


# ---------------------------------------------------------------------------
# 12. determinism
# ---------------------------------------------------------------------------

def test_criterion_12_determinism():
    a = _nielsen_trimer().energies
    b = _nielsen_trimer().energies
    ok = np.array_equal(a, b) and a.tobytes() == b.tobytes()
    report(12, ok, f"E3 = {a[0]!r} twice")
    assert ok
