from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, special

from borromean2d import hyperradial as hr
from borromean2d import twobody as tb
from borromean2d.twobody import RadialFunction

J01, J11 = special.jn_zeros(0, 1)[0], special.jn_zeros(1, 1)[0]


# --- universal long-range channel ------------------------------------------

@pytest.mark.parametrize("E2", [-1.0, -1e-2, -1e-4])
def test_lon_channel_two_universal_states(E2):
    e = hr.hyperradial_bound_states(hr.lon_channel(E2))
    assert len(e) == 2
    ratios = [v / E2 for v in e]
    assert ratios[0] == pytest.approx(16.52, rel=3e-3)
    assert ratios[1] == pytest.approx(1.27, rel=5e-3)


def test_lon_channel_scale_invariance():
    r1 = np.array(hr.hyperradial_bound_states(hr.lon_channel(-1.0))) / -1.0
    r2 = np.array(hr.hyperradial_bound_states(hr.lon_channel(-1e-4))) / -1e-4
    assert np.allclose(r1, r2, rtol=1e-4)


def test_pocket_adds_deep_states():
    plain = hr.hyperradial_bound_states(hr.lon_channel(-1.0))
    pocket = hr.hyperradial_bound_states(
        hr.lon_channel(-1.0, pocket=lambda r: np.where(r < 0.5, -400.0, 0.0)))
    assert len(pocket) > len(plain)
    assert pocket[-1] == pytest.approx(-1.0 * 1.0, rel=0.5) or pocket[-1] < -1.0


def test_lon_asymptotics():
    # bare adiabatic tail lambda + 2 x^2 -> -4/3; diagonal term -> 1/3; sum = atom-dimer s-wave -1
    x = 50.0
    lam = hr.lon_lambda(x)
    assert lam + 2 * x * x == pytest.approx(-4.0 / 3.0, abs=2e-3)
    assert float(hr.lon_diagonal(x)) == pytest.approx(1.0 / 3.0, abs=2e-3)
    assert lam + 2 * x * x + float(hr.lon_diagonal(x)) == pytest.approx(-1.0, abs=3e-3)


def test_lon_small_rho_free_limit():
    # the pair interaction switches off logarithmically: lambda -> 0 from below
    vals = [hr.lon_lambda(x) for x in (1e-2, 1e-5, 1e-10)]
    assert all(v < 0 for v in vals)
    assert abs(vals[2]) < abs(vals[1]) < abs(vals[0])


def test_legendre_against_scipy():
    z = np.linspace(-0.99, 0.99, 41)
    for mu in (0.3, 2.0, 6.0, 12.0, -0.2):
        nu = -0.5 + math.sqrt(0.25 + mu)
        ref = special.lpmv(0, nu, z)
        assert np.allclose(hr._legendre_p(mu, z), ref, rtol=1e-10, atol=1e-12)
    # next to an integer degree the reflected terms cancel to about 1e-10
    mu = 2.0 + 1e-9
    ref = special.lpmv(0, -0.5 + math.sqrt(0.25 + mu), z)
    assert np.allclose(hr._legendre_p(mu, z), ref, rtol=0, atol=1e-9)


# --- zero-energy count and appearance criterion ------------------------------

def _shape(c):
    return lambda r: np.where(r < 1.0, -c * (1.0 - np.asarray(r) ** 2),
                              np.where(r < 2.0, 0.5, 0.0))


def test_free_channel_criterion_is_one():
    zero = RadialFunction(np.array([0.0, 1.0, 2.0]), np.zeros(3))
    assert hr.appearance_criterion(zero) == pytest.approx(1.0, abs=1e-14)
    assert hr.zero_energy_count(lambda r: 0.0 * r, 2.0) == 0


def test_criterion_zero_matches_ode_threshold():
    crit = lambda c: hr.appearance_criterion(_shape(c), support=2.0, breakpoints=[1.0], n=4000)
    c_crit = optimize.brentq(crit, 1.0, 20.0, xtol=1e-12)
    count = lambda c: hr.zero_energy_count(_shape(c), 2.0, breakpoints=[1.0])
    lo, hi = 1.0, 20.0
    assert count(lo) == 0 and count(hi) >= 1
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if count(mid) == 0 else (lo, mid)
    assert c_crit == pytest.approx(0.5 * (lo + hi), rel=1e-5)


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0.5, 3.0), b=st.floats(0.0, 2.0), w=st.floats(0.3, 0.9))
def test_criterion_sign_matches_count(a, b, w):
    # random two-step channels: the criterion is negative iff the channel binds at E = 0
    def u_of(c):
        return lambda r: np.where(r < w, -c * a, np.where(r < 1.0, c * b, 0.0))

    crit = lambda c: hr.appearance_criterion(u_of(c), support=1.0, breakpoints=[w], n=2000)
    # the criterion changes sign at every new state: bracket the first zero
    lo, hi = 1e-3, 2e-3
    while crit(hi) > 0:
        lo, hi = hi, 2 * hi
    c0 = optimize.brentq(crit, lo, hi, xtol=1e-12)
    cnt = lambda c: hr.zero_energy_count(u_of(c), 1.0, breakpoints=[w])
    assert cnt(c0 * (1 - 1e-4)) == 0
    assert cnt(c0 * (1 + 1e-4)) == 1


def test_radialfunction_input_with_jump():
    grid = np.array([0.0, 1.0, 1.0, 2.0, 2.0])
    vals = np.array([-8.0, -8.0, 1.0, 1.0, 0.0])
    rf = hr.appearance_criterion(RadialFunction(grid, vals))
    cb = hr.appearance_criterion(lambda r: np.where(r < 1, -8.0, np.where(r < 2, 1.0, 0.0)),
                                 support=2.0, breakpoints=[1.0])
    assert rf == pytest.approx(cb, rel=1e-10)


def test_callable_needs_support():
    with pytest.raises(ValueError):
        hr.appearance_criterion(lambda r: 0 * r)


# --- finite-volume square-well channel --------------------------------------

def test_hyperangular_all_pairs_inside():
    pair = lambda r: np.where(r < 1.0, -1.0, 0.0)
    assert hr.hyperangular_eigenvalue(0.3, pair) == pytest.approx(-0.54, rel=1e-10)


@pytest.fixture(scope="module")
def sw_channel():
    return hr.veff_from_pair_squarewell(1.0, 1.0)


def test_squarewell_channel_structure(sw_channel):
    ch = sw_channel
    assert ch.E2_ref == pytest.approx(tb.bound_states(tb.SquareWellBarrier(1.0, 0.0, 1.0, 2.0))[0].energy)
    for b in hr.square_well_breakpoints(1.0):
        assert np.any(np.isclose(ch.rho_grid, b, rtol=0, atol=1e-14))
    assert float(ch.u(0.1)) == pytest.approx(-6.0 + float(hr.lon_diagonal(math.sqrt(-ch.E2_ref) * 0.1)) / 0.01, rel=1e-12)


def test_squarewell_channel_universal_tail(sw_channel):
    ch = sw_channel
    rho = 8.0
    assert float(ch.u(rho)) == pytest.approx(float(hr.v_lon(rho, ch.E2_ref)), rel=0.02)


def test_squarewell_channel_states(sw_channel):
    e = hr.hyperradial_bound_states(sw_channel)
    ratios = [v / sw_channel.E2_ref for v in e]
    # finite-range trimer lies between the dimer and the universal ratio
    assert len(e) >= 2
    assert 1.0 < ratios[0] < 16.52 and 1.0 < ratios[1] < 1.27


# --- window estimates --------------------------------------------------------

def test_barrier_outside_window():
    lo, hi = hr.barrier_outside_window()
    assert lo == pytest.approx(J11**2 / 3, rel=1e-12)
    assert hi == pytest.approx(J01**2, rel=1e-12)


def test_mean_attraction_half_exact():
    assert hr.mean_attraction(0.5) == 10.0 / 9.0


def test_h3_residual_root():
    for s in (0.2, 0.5, 0.8):
        h = hr.h3_of_s(s)
        zl = math.sqrt(h / (1 - s * s))
        ref = special.j0(zl) * special.y1(s * zl) - special.y0(zl) * special.j1(s * zl)
        assert abs(ref) < 1e-10


def test_window_variants_relations():
    s = [0.2, 0.4, 0.6]
    est = hr.window_estimates(s)
    by = {(e.s, e.variant): e for e in est}
    for v in s:
        core = by[(v, hr.WindowVariant.CORE_INSIDE)]
        w = by[(v, hr.WindowVariant.CORE_INSIDE_WEIGHTED)]
        red = by[(v, hr.WindowVariant.CORE_INSIDE_REDUCED)]
        assert core.h3_over_factor == pytest.approx(hr.h3_of_s(v) / 8, rel=1e-12)
        assert red.h3_over_factor == pytest.approx(1.5 * w.h3_over_factor, rel=1e-12)
        assert w.h2_threshold == pytest.approx(tb.h_of_s(v), rel=1e-12)


def test_fig2a_curves_shapes():
    c = hr.fig2a_curves([0.1, 0.3, 0.5])
    assert set(c) == {"s", "h2_threshold", "h3_dotdash", "h3_dashed"}
    assert np.allclose(c["h3_dashed"], 1.5 * c["h3_dotdash"])
