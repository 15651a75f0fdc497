"""Compiled closed forms for the CEV speed measure m(du) = 2 u^(-2p) du on (0, inf).

With x = a / y and q = 2(1 - p) the triangular-kernel integral factorises as
``Phi(y, a) = y**q * g(x)`` where, for p = 1/2,

    g(x) = (1 + x) log(1 + x) + (1 - x) log(1 - x)

and otherwise

    g(x) = (2 - (1 + x)**q - (1 - x)**q) / (-q (q - 1)).

Both are evaluated by their even power series for small x to avoid the
cancellation in the direct formulas. ``g(1)`` uses 0 log 0 = 0.
"""

import math

import numba as nb
import numpy as np

LOG4 = 2.0 * math.log(2.0)
_SERIES_X = 0.125
# Above this z = h / y the reversion series is not used; Newton takes over.
HALF_SERIES_Z = 0.25
# Below this z the series is cut after z**7; the dropped tail is under 1e-18 relative.
HALF_SHORT_Z = 1.0 / 64.0


@nb.njit(cache=True)
def g_half(x):
    if x < _SERIES_X:
        x2 = x * x
        s = 0.0
        t = 1.0
        for k in range(1, 40):
            t *= x2
            term = t / (k * (2.0 * k - 1.0))
            s += term
            if term <= 1e-17 * s:
                break
        return s
    if x >= 1.0:
        return LOG4
    return (1.0 + x) * math.log1p(x) + (1.0 - x) * math.log1p(-x)


@nb.njit(cache=True)
def g_half_prime(x):
    if x >= 1.0:
        return math.inf
    return math.log1p(x) - math.log1p(-x)


@nb.njit(cache=True)
def g_pow(x, q):
    c = q * (q - 1.0)
    if x < _SERIES_X:
        x2 = x * x
        s = 0.0
        b = 1.0
        xn = 1.0
        for n in range(0, 120, 2):
            b = b * (q - n) / (n + 1.0)
            b = b * (q - n - 1.0) / (n + 2.0)
            xn *= x2
            term = b * xn
            s += term
            if abs(term) <= 1e-17 * abs(s):
                break
        return 2.0 * s / c
    if x >= 1.0:
        return (2.0 - 2.0 ** q) / (-c)
    return (2.0 - (1.0 + x) ** q - (1.0 - x) ** q) / (-c)


@nb.njit(cache=True)
def g_pow_prime(x, q):
    c = q * (q - 1.0)
    if x < _SERIES_X:
        x2 = x * x
        s = 0.0
        b = 1.0
        xn = 1.0 / x
        for n in range(0, 120, 2):
            b = b * (q - n) / (n + 1.0)
            b = b * (q - n - 1.0) / (n + 2.0)
            xn *= x2
            term = (n + 2.0) * b * xn
            s += term
            if abs(term) <= 1e-17 * abs(s):
                break
        return 2.0 * s / c
    if x >= 1.0:
        return math.inf if q < 1.0 else -q * 2.0 ** (q - 1.0) / (-c)
    return (q * (1.0 - x) ** (q - 1.0) - q * (1.0 + x) ** (q - 1.0)) / (-c)


@nb.njit(cache=True)
def cev_kernel(y, a, p):
    """Phi(y, a) for the CEV measure; requires 0 <= a <= y."""
    if a <= 0.0:
        return 0.0
    x = a / y
    if x > 1.0:
        x = 1.0
    if p == 0.5:
        return y * g_half(x)
    q = 2.0 * (1.0 - p)
    return y ** q * g_pow(x, q)


@nb.njit(cache=True)
def _invert_g(z, p):
    # g is increasing on [0, 1] with g(x) ~ x^2; safeguarded Newton on x
    q = 2.0 * (1.0 - p)
    lo = 0.0
    hi = 1.0
    x = min(math.sqrt(z), 0.5)
    for _ in range(200):
        if p == 0.5:
            g = g_half(x)
            dg = g_half_prime(x)
        else:
            g = g_pow(x, q)
            dg = g_pow_prime(x, q)
        if g > z:
            hi = x
        else:
            lo = x
        xn = x - (g - z) / dg
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 2e-16 * x:
            return xn
        x = xn
    return x


# Reversion of z = g_half(sqrt(w)): w = z * P(z), exact through z**18.
@nb.njit(inline="always")
def _half_series_poly(z):
    return ((((((((((((((((((-6.915265142255879e-07) * z + (-1.1000544223338188e-06)) * z
            + (-1.7654952912551107e-06)) * z + (-2.8621519122097084e-06)) * z
            + (-4.693914929288627e-06)) * z + (-7.801707993627744e-06)) * z
            + (-1.3172165110500134e-05)) * z + (-2.2658012319999058e-05)) * z
            + (-3.986291151981394e-05)) * z + (-7.210617667053328e-05)) * z
            + (-0.00013508433316634374)) * z + (-0.0002649029395061141)) * z
            + (-0.0005527497194163861)) * z + (-0.0012610229276895943)) * z
            + (-0.0033068783068783067)) * z + (-0.011111111111111112)) * z
            + (-0.16666666666666666)) * z + 1.0)


@nb.njit(inline="always")
def _half_short_poly(z):
    return (((((((-0.00013508433316634374) * z + (-0.0002649029395061141)) * z
            + (-0.0005527497194163861)) * z + (-0.0012610229276895943)) * z
            + (-0.0033068783068783067)) * z + (-0.011111111111111112)) * z
            + (-0.16666666666666666)) * z + 1.0


@nb.njit(inline="always")
def emcel_half_bulk(y, h):
    z = h / y
    return y * math.sqrt(z * _half_short_poly(z))


@nb.njit(inline="always")
def emcel_half_easy(y, h):
    return h < HALF_SHORT_Z * y


@nb.njit(cache=True)
def emcel_half(y, h):
    """EMCEL step for p = 1/2 on (0, inf)."""
    if y <= 0.0:
        return 0.0
    if h < HALF_SHORT_Z * y:
        return emcel_half_bulk(y, h)
    z = h / y
    if h < HALF_SERIES_Z * y:
        return y * math.sqrt(z * _half_series_poly(z))
    if z >= LOG4:
        return y
    return y * _invert_g(z, 0.5)


def pow_reversion(q: float, n_max: int = 24):
    """Coefficients ``r_1 = 1, r_2, ...`` of ``w = sum r_j z^j`` inverting ``z = g_pow(sqrt(w), q)``.

    Returns ``(coeffs, z_bulk)``: the series is cut where the tail is below
    ``1e-18`` for ``z < z_bulk``.
    """
    from numpy.polynomial import polynomial as npoly
    from scipy.special import binom

    c = q * (q - 1.0)
    g = [0.0] + [2.0 / c * binom(q, 2 * k) for k in range(1, n_max + 2)]
    w = np.zeros(n_max + 2)
    w[1] = 1.0
    # fixed point w = z - sum_{k>=2} g_k w^k, one more correct order per pass
    for _ in range(n_max + 2):
        acc = np.zeros(n_max + 2)
        pw = w.copy()
        for k in range(2, n_max + 2):
            pw = npoly.polymul(pw, w)[: n_max + 2]
            acc[: pw.size] += g[k] * pw
        w = -acc
        w[1] += 1.0
    r = w[1:]
    rho = max([abs(r[j]) ** (1.0 / (j + 1)) for j in range(1, r.size) if r[j] != 0.0], default=0.0)
    z_bulk = min(HALF_SHORT_Z, 1.0 / (16.0 * rho)) if rho > 0 else HALF_SHORT_Z
    n = 1
    while n < n_max and abs(rho * z_bulk) ** (n + 1) > 1e-18:
        n += 1
    return r[:n].copy(), z_bulk


@nb.njit(inline="always")
def emcel_pow_bulk(y, h, prm):
    # prm = [p, q, y_bulk, n, r_1, ..., r_n]
    z = h / y ** prm[1]
    n = int(prm[3])
    s = prm[3 + n]
    for j in range(n - 1, 0, -1):
        s = s * z + prm[3 + j]
    return y * math.sqrt(z * s)


@nb.njit(cache=True)
def emcel_pow(y, h, p):
    """EMCEL step for p != 1/2 on (0, inf)."""
    if y <= 0.0:
        return 0.0
    q = 2.0 * (1.0 - p)
    z = h / y ** q
    if z >= g_pow(1.0, q):
        return y
    return y * _invert_g(z, p)


def cev_threshold(p: float, h: float) -> float:
    """Closed-form lower threshold l_h for the CEV measure."""
    if p == 0.5:
        return h / LOG4
    q = 2.0 * (1.0 - p)
    return (h / float(g_pow(1.0, q))) ** (1.0 / q)


def _warm():
    emcel_half(1.0, 0.01)
    emcel_pow(1.0, 0.01, 0.25)
    cev_kernel(1.0, 0.5, 0.5)
    cev_kernel(1.0, 0.5, 0.25)
    g_pow_prime(0.3, 1.5)
