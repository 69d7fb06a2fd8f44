"""Taylor coefficients of the Riemann-Siegel correction functions C_0..C_4.

With Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p) (an entire function),
the corrections are the usual Gabcke combinations of derivatives of Psi.
Everything is expanded in powers of x = p - 1/2 and rounded once to binary64.
The series division runs at 120 digits because 1/cos(2 pi x) has poles at
|x| = 1/4, which amplify rounding by roughly 4^n at degree n.
"""

import mpmath
import numpy as np

DEGREE = 72


def _psi_series(deg):
    mp = mpmath.mp
    # Psi(1/2 + x) = cos(2 pi x^2 - 5 pi/8) / (-cos(2 pi x))
    num = [mpmath.mpf(0)] * (deg + 1)
    k = 0
    while 2 * k <= deg:
        num[2 * k] = (2 * mp.pi) ** k / mpmath.factorial(k) * mpmath.cos(-5 * mp.pi / 8 + k * mp.pi / 2)
        k += 1
    den = [mpmath.mpf(0)] * (deg + 1)
    for k in range(deg + 1):
        den[k] = -((2 * mp.pi) ** k) / mpmath.factorial(k) * mpmath.cos(k * mp.pi / 2)
    out = [mpmath.mpf(0)] * (deg + 1)
    for n in range(deg + 1):
        acc = num[n] - sum(out[j] * den[n - j] for j in range(n))
        out[n] = acc / den[0]
    return out


def _deriv(c, m):
    for _ in range(m):
        c = [c[i] * i for i in range(1, len(c))]
    return c


def _combine(terms, deg):
    out = [mpmath.mpf(0)] * (deg + 1)
    for weight, series in terms:
        for i, v in enumerate(series[: deg + 1]):
            out[i] += weight * v
    return out


def correction_coefficients():
    """Array of shape (5, DEGREE + 1): C_k(1/2 + x) = sum_j out[k, j] x^j."""
    with mpmath.workdps(120):
        pi = mpmath.mp.pi
        full = DEGREE + 12
        psi = _psi_series(full)
        d = [_deriv(psi, m) for m in range(13)]
        rows = [
            [(1, d[0])],
            [(-1 / (96 * pi**2), d[3])],
            [(1 / (64 * pi**2), d[2]), (1 / (18432 * pi**4), d[6])],
            [
                (-1 / (64 * pi**2), d[1]),
                (-1 / (3840 * pi**4), d[5]),
                (-1 / (5308416 * pi**6), d[9]),
            ],
            [
                (1 / (128 * pi**2), d[0]),
                (mpmath.mpf(19) / (24576 * pi**4), d[4]),
                (mpmath.mpf(11) / (5898240 * pi**6), d[8]),
                (1 / (2038431744 * pi**8), d[12]),
            ],
        ]
        table = [_combine(r, DEGREE) for r in rows]
        return np.array([[float(v) for v in row] for row in table])


COEFFS = correction_coefficients()

# sup over p in [0, 1) of |C_k(p)|, used for truncation estimates
_grid = np.linspace(-0.5, 0.5, 4001)
C_MAX = np.array(
    [np.abs(np.polynomial.polynomial.polyval(_grid, COEFFS[k])).max() for k in range(5)]
)
del _grid
