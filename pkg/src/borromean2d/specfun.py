"""
Cylindrical Bessel functions of order 0 and 1 on the positive real axis.

J0, J1, Y0, Y1, I0, I1, K0, K1 are evaluated without external special
function libraries:

* ``x <= SERIES_CROSSOVER``: ascending power series summed in
  ``decimal`` arithmetic with enough guard digits to absorb the
  cancellation of the alternating (J, Y) and logarithmic (Y, K) series.
* ``x > SERIES_CROSSOVER``: Hankel / large-argument asymptotic expansions,
  truncated at the smallest term.  At the crossover the truncation error is
  of order ``exp(-2x)``, far below double precision.

Scaled variants (``exp(-x) I`` and ``exp(x) K``) are available for the
threshold equations, which otherwise overflow for strong barriers.
"""

from __future__ import annotations

import enum
import math
from decimal import Decimal, localcontext

import numpy as np

SERIES_CROSSOVER = 25.0
I_OVERFLOW_GUARD = 700.0

_PI = Decimal(
    "3.14159265358979323846264338327950288419716939937510582097494459230781640628"
)
_EULER = Decimal(
    "0.57721566490153286060651209008240243104215933593992359880576723488486772677"
)


class BesselKind(enum.Enum):
    J0 = "J0"
    J1 = "J1"
    Y0 = "Y0"
    Y1 = "Y1"
    I0 = "I0"
    I1 = "I1"
    K0 = "K0"
    K1 = "K1"

    @property
    def order(self) -> int:
        return int(self.value[1])

    @property
    def family(self) -> str:
        return self.value[0]


class BesselDomainError(ValueError):
    """Argument outside the evaluation domain of the requested kind."""


class BesselOverflowError(OverflowError):
    """Unscaled I evaluation beyond the overflow guard."""


def _as_kind(kind) -> BesselKind:
    if isinstance(kind, BesselKind):
        return kind
    try:
        return BesselKind(str(kind))
    except ValueError:
        raise ValueError(f"unsupported Bessel kind {kind!r}") from None


# ---------------------------------------------------------------------------
# power series
# ---------------------------------------------------------------------------

def _series(kind: BesselKind, x: float, scaled: bool) -> float:
    digits = 30 + int(0.87 * x)
    with localcontext() as ctx:
        ctx.prec = digits
        X = Decimal(x)
        t = X / 2
        q = t * t
        eps = Decimal(10) ** (-digits)
        fam, n = kind.family, kind.order
        sgn = -1 if fam in "JY" else 1

        # plain sum  S = sum (sgn q)^k / (k! (k+n)!)
        # harmonic sum  H = sum (sgn q)^k c_k / (k! (k+n)!)
        #   c_k = H_k (order 0)  or  psi(k+1) + psi(k+2) + 2 gamma = H_k + H_{k+1} (order 1)
        term = Decimal(1) if n == 0 else Decimal(1)
        S = Decimal(0)
        H = Decimal(0)
        hk = Decimal(0)
        k = 0
        while True:
            c = hk if n == 0 else (2 * hk + Decimal(1) / (k + 1))
            S += term
            H += term * c
            if k > 4 and abs(term) * (1 + abs(c)) < eps * (abs(S) + abs(H) + 1):
                break
            k += 1
            hk += Decimal(1) / k
            term = term * sgn * q / (k * (k + n))

        if n == 1:
            S *= t
            H *= t
        lt = t.ln()

        if fam == "J":
            val = S
        elif fam == "I":
            val = S
        elif fam == "Y":
            if n == 0:
                # (2/pi)[(ln t + gamma) J0 - sum (-q)^k H_k/(k!)^2]
                val = 2 / _PI * ((lt + _EULER) * S - H)
            else:
                # -2/(pi x) + (2/pi) ln t J1 - (t/pi) sum (-q)^k (psi(k+1)+psi(k+2))/(k!(k+1)!)
                # psi(k+1)+psi(k+2) = H_k + H_{k+1} - 2 gamma
                val = -2 / (_PI * X) + 2 / _PI * lt * S - (H - 2 * _EULER * S) / _PI
        else:  # K
            if n == 0:
                val = -(lt + _EULER) * S + H
            else:
                val = 1 / X + lt * S - (H - 2 * _EULER * S) / 2
        if scaled:
            if fam == "I":
                val = val * (-X).exp()
            elif fam == "K":
                val = val * X.exp()
        return float(val)


# ---------------------------------------------------------------------------
# asymptotic expansions
# ---------------------------------------------------------------------------

def _asym_coeffs(n: int, x: float):
    """Yield a_k(n)/x^k for the Hankel expansions, up to the smallest term."""
    mu = 4.0 * n * n
    a = 1.0
    k = 0
    prev = math.inf
    while True:
        if abs(a) >= prev or abs(a) < 1e-18:
            if abs(a) < 1e-18:
                yield k, a
            return
        yield k, a
        prev = abs(a)
        k += 1
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)


def _asymptotic(kind: BesselKind, x: float, scaled: bool) -> float:
    n = kind.order
    fam = kind.family
    if fam in "JY":
        P = Q = 0.0
        for k, a in _asym_coeffs(n, x):
            if k % 2 == 0:
                P += a if k % 4 == 0 else -a
            else:
                Q += a if k % 4 == 1 else -a
        # chi = x - (n/2 + 1/4) pi, expanded so that cos/sin act on x itself
        phase = (0.5 * n + 0.25) * math.pi
        cx, sx = math.cos(x), math.sin(x)
        cp, sp = math.cos(phase), math.sin(phase)
        cchi = cx * cp + sx * sp
        schi = sx * cp - cx * sp
        amp = math.sqrt(2.0 / (math.pi * x))
        if fam == "J":
            return amp * (P * cchi - Q * schi)
        return amp * (P * schi + Q * cchi)
    if fam == "I":
        s = 0.0
        for k, a in _asym_coeffs(n, x):
            s += a if k % 2 == 0 else -a
        val = s / math.sqrt(2.0 * math.pi * x)
        return val if scaled else val * math.exp(x)
    s = 0.0
    for _, a in _asym_coeffs(n, x):
        s += a
    val = s * math.sqrt(math.pi / (2.0 * x))
    return val if scaled else val * math.exp(-x)


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------

def bessel(kind, x: float, scaled: bool = False) -> float:
    """Evaluate a cylindrical Bessel function of order 0 or 1 at real ``x``.

    Parameters
    ----------
    kind : BesselKind or str
        One of J0, J1, Y0, Y1, I0, I1, K0, K1.
    x : float
        Argument; ``x >= 0`` for J and I, ``x > 0`` for Y and K.
    scaled : bool
        Return ``exp(-x) I(x)`` or ``exp(x) K(x)`` for the modified kinds
        (ignored for J and Y).

    Raises
    ------
    BesselDomainError
        Negative argument, or ``x <= 0`` for Y and K.
    BesselOverflowError
        Unscaled I with ``x > 700``.
    """
    kind = _as_kind(kind)
    x = float(x)
    fam = kind.family
    if not math.isfinite(x) or x < 0.0:
        raise BesselDomainError(f"{kind.value} requires x >= 0, got {x}")
    if fam in "YK" and x == 0.0:
        raise BesselDomainError(f"{kind.value} requires x > 0")
    if fam == "I" and not scaled and x > I_OVERFLOW_GUARD:
        raise BesselOverflowError(f"I at x={x} exceeds the overflow guard; use scaled=True")
    if x == 0.0:
        if fam == "J" or fam == "I":
            return 1.0 if kind.order == 0 else 0.0
    if x <= SERIES_CROSSOVER:
        return _series(kind, x, scaled)
    return _asymptotic(kind, x, scaled)


def bessel_array(kind, x, scaled: bool = False) -> np.ndarray:
    """Elementwise :func:`bessel` over an array-like argument."""
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    flat = out.reshape(-1)
    for i, xi in enumerate(arr.reshape(-1)):
        flat[i] = bessel(kind, xi, scaled)
    return out


def J0(x):
    return bessel(BesselKind.J0, x)


def J1(x):
    return bessel(BesselKind.J1, x)


def Y0(x):
    return bessel(BesselKind.Y0, x)


def Y1(x):
    return bessel(BesselKind.Y1, x)


def I0(x, scaled=False):
    return bessel(BesselKind.I0, x, scaled)


def I1(x, scaled=False):
    return bessel(BesselKind.I1, x, scaled)


def K0(x, scaled=False):
    return bessel(BesselKind.K0, x, scaled)


def K1(x, scaled=False):
    return bessel(BesselKind.K1, x, scaled)


def _derivative(kind: BesselKind, x: float) -> float:
    if kind is BesselKind.J0:
        return -J1(x)
    if kind is BesselKind.J1:
        return J0(x) - J1(x) / x
    raise ValueError(kind)


def bessel_zero(kind, n: int) -> float:
    """Return the ``n``-th positive zero of J0 or J1.

    The McMahon estimate brackets each zero to within a fraction of the zero
    spacing; bisection narrows the bracket to ~1e-13 and a final Newton step
    polishes the result.
    """
    kind = _as_kind(kind)
    if kind not in (BesselKind.J0, BesselKind.J1):
        raise ValueError(f"zeros are provided for J0 and J1 only, not {kind.value}")
    n = int(n)
    if n < 1:
        raise ValueError("zero index must be >= 1")
    guess = (n - 0.25) * math.pi if kind is BesselKind.J0 else (n + 0.25) * math.pi
    lo, hi = guess - 0.5, guess + 0.5
    flo = bessel(kind, lo)
    fhi = bessel(kind, hi)
    if flo * fhi > 0:
        raise RuntimeError(f"failed to bracket zero {n} of {kind.value}")
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        fm = bessel(kind, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    return x - bessel(kind, x) / _derivative(kind, x)


J0_FIRST_ZERO = bessel_zero(BesselKind.J0, 1)
J1_FIRST_ZERO = bessel_zero(BesselKind.J1, 1)
