from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from borromean2d import specfun as sf

ORACLE = {"J0": special.j0, "J1": special.j1, "Y0": special.y0, "Y1": special.y1,
          "I0": special.i0, "I1": special.i1, "K0": special.k0, "K1": special.k1}
ORACLE_SCALED = {"I0": special.i0e, "I1": special.i1e, "K0": special.k0e, "K1": special.k1e}

xs = st.floats(min_value=1e-8, max_value=100.0, allow_nan=False)


def test_j0_at_origin():
    assert sf.bessel("J0", 0.0) == 1.0
    assert sf.bessel("J1", 0.0) == 0.0


@pytest.mark.parametrize("kind", sorted(ORACLE))
def test_against_scipy_grid(kind):
    x = np.concatenate([np.geomspace(1e-8, 1.0, 60), np.linspace(1.0, 100.0, 400)])
    mine = sf.bessel_array(kind, x)
    ref = ORACLE[kind](x)
    # absolute scale near zeros of the oscillating kinds
    scale = np.maximum(np.abs(ref), 1.0 / np.sqrt(x) if kind[0] in "JY" else 0.0)
    assert np.max(np.abs(mine - ref) / scale) < 1e-12


@pytest.mark.parametrize("kind", sorted(ORACLE_SCALED))
def test_scaled_against_scipy(kind):
    x = np.array([1e-3, 0.5, 3.0, 25.0, 300.0, 690.0])
    mine = sf.bessel_array(kind, x, scaled=True)
    assert np.allclose(mine, ORACLE_SCALED[kind](x), rtol=1e-12, atol=0)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(min_value=0.01, max_value=100.0))
def test_wronskian_jy(x):
    lhs = sf.J0(x) * sf.Y1(x) - sf.J1(x) * sf.Y0(x)
    assert lhs == pytest.approx(-2.0 / (math.pi * x), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(min_value=0.01, max_value=100.0))
def test_wronskian_ik(x):
    lhs = sf.I0(x, True) * sf.K1(x, True) + sf.I1(x, True) * sf.K0(x, True)
    assert lhs == pytest.approx(1.0 / x, rel=1e-10)


@pytest.mark.parametrize("x", [0.5, 2.0, 10.0])
def test_ik_identity_points(x):
    assert sf.K0(x) * sf.I1(x) + sf.K1(x) * sf.I0(x) == pytest.approx(1.0 / x, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(min_value=0.05, max_value=50.0))
def test_derivative_identities(x):
    h = 1e-5 * x
    d = lambda f: (f(x + h) - f(x - h)) / (2 * h)
    assert d(lambda t: t * sf.J1(t)) == pytest.approx(x * sf.J0(x), rel=1e-6, abs=1e-9)
    assert d(lambda t: t * sf.I1(t)) == pytest.approx(x * sf.I0(x), rel=1e-6)
    assert d(lambda t: t * sf.K1(t)) == pytest.approx(-x * sf.K0(x), rel=1e-6)


def test_first_zeros():
    assert sf.bessel_zero("J0", 1) == pytest.approx(2.404825557695773, abs=1e-10)
    assert sf.bessel_zero("J1", 1) == pytest.approx(3.831705970207512, abs=1e-10)
    assert abs(sf.bessel("J0", 2.404826)) < 1e-6
    assert abs(sf.bessel("J0", sf.bessel_zero("J0", 1))) < 1e-12


@pytest.mark.parametrize("kind", ["J0", "J1"])
def test_zeros_against_scipy(kind):
    ref = special.jn_zeros(int(kind[1]), 20)
    mine = [sf.bessel_zero(kind, n) for n in range(1, 21)]
    assert np.allclose(mine, ref, rtol=0, atol=1e-10)
    assert np.all(np.diff(mine) > 0)


@pytest.mark.parametrize("kind", ["J0", "J1"])
@pytest.mark.parametrize("n", [1, 2, 7])
def test_zero_is_sign_change(kind, n):
    z = sf.bessel_zero(kind, n)
    assert sf.bessel(kind, z - 1e-9) * sf.bessel(kind, z + 1e-9) < 0


def test_domain_errors():
    with pytest.raises(sf.BesselDomainError):
        sf.bessel("K0", 0.0)
    with pytest.raises(sf.BesselDomainError):
        sf.bessel("Y1", -1.0)
    with pytest.raises(sf.BesselOverflowError):
        sf.bessel("I0", 800.0)
    assert math.isfinite(sf.bessel("I0", 800.0, scaled=True))
    with pytest.raises(ValueError):
        sf.bessel_zero("Y0", 1)
    with pytest.raises(ValueError):
        sf.bessel_zero("J0", 0)
