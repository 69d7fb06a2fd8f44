"""Reference computations that share no code with the package.

Z(t) is summed with the Borwein accelerated alternating series for the eta
function, with weights built in log space from scratch here, and the phase
comes from mpmath (scalar) or scipy (bulk grids). Integrals use composite
Simpson on a fixed step.
"""

import math

import mpmath
import numpy as np
from scipy.special import gammaln, loggamma

LN4 = math.log(4.0)


def borwein_terms_needed(t):
    # error ~ (3 + sqrt 8)^-n e^{pi t / 2}; keep ~20 digits of margin
    return int(math.ceil((math.pi * abs(t) / 2 + 46.0) / math.log(3 + math.sqrt(8)))) + 8


def _ratios(n):
    """1 - d_k / d_n for k = 0 .. n-1."""
    i = np.arange(n + 1, dtype=float)
    logt = gammaln(n + i) - gammaln(n - i + 1) - gammaln(2 * i + 1) + i * LN4
    w = np.exp(logt - logt.max())
    d = np.cumsum(w)
    return 1.0 - d[:-1] / d[-1]


def zeta_half(t, n=None):
    """zeta(1/2 + it) for one height."""
    t = float(t)
    n = n or borwein_terms_needed(t)
    k = np.arange(1, n + 1, dtype=float)
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    lk = np.log(k)
    terms = signs * _ratios(n) * np.exp(-0.5 * lk) * np.exp(-1j * t * lk)
    eta = terms.sum()
    s = 0.5 + 1j * t
    return eta / (1 - 2 ** (1 - s))


def theta_mp(t):
    return float(mpmath.siegeltheta(t))


def hardy_z(t):
    """Z(t) for a scalar height, phase from mpmath."""
    val = np.exp(1j * theta_mp(t)) * zeta_half(t)
    return val.real, val.imag


def hardy_z_grid(ts, block=2_000_000):
    """Z on many low heights at once (phase from scipy's complex log-gamma).

    Heights are processed in ascending blocks; each block sums only as many
    series terms as its largest height needs.
    """
    ts = np.asarray(ts, dtype=float)
    order = np.argsort(ts)
    st = ts[order]
    res = np.empty_like(st)
    i = 0
    while i < st.size:
        n = borwein_terms_needed(st[min(i + 2000, st.size - 1)])
        step = max(1, min(2000, block // n))
        t = st[i : i + step]
        n = borwein_terms_needed(t[-1])
        lk = np.log(np.arange(1, n + 1, dtype=float))
        coef = np.where(np.arange(n) % 2 == 0, 1.0, -1.0) * _ratios(n) * np.exp(-0.5 * lk)
        eta = np.exp(-1j * np.outer(t, lk)) @ coef
        s = 0.5 + 1j * t
        zeta = eta / (1 - 2 ** (1 - s))
        th = loggamma(0.25 + 0.5j * t).imag - 0.5 * t * math.log(math.pi)
        res[i : i + step] = (np.exp(1j * th) * zeta).real
        i += step
    out = np.empty_like(res)
    out[order] = res
    return out


def simpson(f_values, h):
    """Composite Simpson on an odd number of equally spaced samples."""
    v = np.asarray(f_values, dtype=float)
    if v.size % 2 == 0:
        raise ValueError("Simpson needs an odd number of samples")
    return h / 3.0 * (v[0] + v[-1] + 4.0 * v[1:-1:2].sum() + 2.0 * v[2:-1:2].sum())


def simpson_z4(a, b, h, weight=None):
    """int_a^b Z^4 (times weight(t) if given) by Simpson with step close to h."""
    m = int(math.ceil((b - a) / h))
    m += m % 2
    ts = np.linspace(a, b, m + 1)
    z = hardy_z_grid(ts)
    f = z**4
    if weight is not None:
        f = f * weight(ts)
    return simpson(f, (b - a) / m)


def central_difference(f, x, h):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def g1(t, y):
    return (t * t / y - 2.0 * t) * math.exp(-t / y)


def g1_min(y):
    """(argmin, min) of g1 in closed form."""
    r = math.sqrt(2.0)
    return (2.0 - r) * y, -2.0 * (r - 1.0) * math.exp(-2.0 + r) * y


def g1_max(y):
    r = math.sqrt(2.0)
    return (2.0 + r) * y, 2.0 * (r + 1.0) * math.exp(-2.0 - r) * y
