"""Compiled inner loops for Z(t).

Two evaluation routes live here:

* ``borwein_rotated`` -- Borwein's accelerated alternating series for
  zeta(1/2+it), rotated by exp(i*theta). Used below the crossover height.
* ``rs_cluster`` -- the Riemann-Siegel main sum plus remainder terms. Nodes are
  grouped by unit cell ``floor(t)``; within a cell the Dirichlet polynomial
  sum_n n^{-1/2} exp(-i t log n) is expanded in a Taylor series about the cell
  centre, so one pass over n serves every node of the cell. The expansion
  centre and order depend only on the cell, so the value returned for a given
  t does not depend on which other nodes were evaluated alongside it.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi
LOG_BORWEIN_RATE = math.log(3.0 + math.sqrt(8.0))


@njit(cache=True, nogil=True)
def _horner(c, x):
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


@njit(cache=True, nogil=True)
def _rs_remainder(t, coeffs, nterms):
    # (-1)^(N-1) a^(-1/2) sum_k C_k(p) a^(-k), a = sqrt(t/2pi), p = frac(a)
    a = math.sqrt(t / TWO_PI)
    n = int(a)
    x = (a - n) - 0.5
    inv_a = 1.0 / a
    acc = 0.0
    scale = 1.0
    for k in range(nterms + 1):
        acc += scale * _horner(coeffs[k], x)
        scale *= inv_a
    sign = 1.0 if (n - 1) % 2 == 0 else -1.0
    return sign * acc / math.sqrt(a)


@njit(cache=True, nogil=True)
def taylor_order(nmax):
    """Number of Taylor terms needed for |s log n| <= log(nmax)/2."""
    x = 0.5 * math.log(max(nmax, 2))
    term = 1.0
    k = 0
    # the e^x factor bounds the tail of the exponential series
    bound = 1e-18 * math.exp(-x)
    while term > bound and k < 80:
        k += 1
        term *= x / k
    return k + 1


@njit(cache=True, nogil=True)
def rs_cluster(ts, thetas, cells, coeffs, nterms, logn, rsqrt, out):
    """Riemann-Siegel Z(t) for ``ts`` sorted by ``cells`` (= floor(t))."""
    m = ts.shape[0]
    i = 0
    mre = np.empty(80)
    mim = np.empty(80)
    while i < m:
        cell = cells[i]
        j = i
        while j < m and cells[j] == cell:
            j += 1
        centre = cell + 0.5
        nlo = int(math.sqrt(cell / TWO_PI))
        kt = taylor_order(nlo)
        for k in range(kt):
            mre[k] = 0.0
            mim[k] = 0.0
        for n in range(1, nlo + 1):
            ln = logn[n]
            ph = centre * ln
            vr = rsqrt[n] * math.cos(ph)
            vi = -rsqrt[n] * math.sin(ph)
            for k in range(kt):
                mre[k] += vr
                mim[k] += vi
                vr *= ln
                vi *= ln
        fact = 1.0
        for k in range(1, kt):
            fact *= k
            mre[k] /= fact
            mim[k] /= fact
        for q in range(i, j):
            t = ts[q]
            s = t - centre
            # Horner in z = -i s
            ar = mre[kt - 1]
            ai = mim[kt - 1]
            for k in range(kt - 2, -1, -1):
                nr = ai * s
                ni = -ar * s
                ar = nr + mre[k]
                ai = ni + mim[k]
            th = thetas[q]
            main = math.cos(th) * ar - math.sin(th) * ai
            nt = int(math.sqrt(t / TWO_PI))
            for n in range(nlo + 1, nt + 1):
                main += rsqrt[n] * math.cos(th - t * logn[n])
            out[q] = 2.0 * main + _rs_remainder(t, coeffs, nterms)
        i = j


@njit(cache=True, nogil=True)
def rs_plain(ts, thetas, coeffs, nterms, logn, rsqrt, out):
    """Textbook Riemann-Siegel sum, one cosine per term. Reference route."""
    for q in range(ts.shape[0]):
        t = ts[q]
        th = thetas[q]
        nt = int(math.sqrt(t / TWO_PI))
        main = 0.0
        for n in range(1, nt + 1):
            main += rsqrt[n] * math.cos(th - t * logn[n])
        out[q] = 2.0 * main + _rs_remainder(t, coeffs, nterms)


@njit(cache=True, nogil=True)
def borwein_terms(t):
    return int(math.ceil((0.5 * math.pi * t + 42.0) / LOG_BORWEIN_RATE))


@njit(cache=True, nogil=True)
def _borwein_weights(n, w):
    # w[k] = (d_n - d_k)/d_n with d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)
    logs = np.empty(n + 1)
    logs[0] = 0.0
    for i in range(1, n + 1):
        r = 4.0 * (n + i - 1) * (n - i + 1) / ((2.0 * i) * (2.0 * i - 1.0))
        logs[i] = logs[i - 1] + math.log(r)
    top = logs.max()
    suffix = 0.0
    total = 0.0
    for i in range(n + 1):
        total += math.exp(logs[i] - top)
    for k in range(n, -1, -1):
        w[k] = suffix / total
        suffix += math.exp(logs[k] - top)


@njit(cache=True, nogil=True)
def borwein_rotated(ts, thetas, out_re, out_im):
    """exp(i theta(t)) zeta(1/2 + i t) by the accelerated alternating series."""
    nmax = borwein_terms(ts.max())
    w = np.empty(nmax + 1)
    logk = np.empty(nmax)
    rsq = np.empty(nmax)
    for k in range(nmax):
        logk[k] = math.log(k + 1.0)
        rsq[k] = 1.0 / math.sqrt(k + 1.0)
    last_n = -1
    ln2 = math.log(2.0)
    for q in range(ts.shape[0]):
        t = ts[q]
        n = borwein_terms(t)
        if n != last_n:
            _borwein_weights(n, w)
            # fold the alternating sign into the weights
            for k in range(1, n, 2):
                w[k] = -w[k]
            last_n = n
        er = 0.0
        ei = 0.0
        for k in range(n):
            mag = w[k] * rsq[k]
            ph = t * logk[k]
            er += mag * math.cos(ph)
            ei -= mag * math.sin(ph)
        # divide eta by 1 - 2^(1-s), s = 1/2 + it
        dr = 1.0 - math.sqrt(2.0) * math.cos(t * ln2)
        di = math.sqrt(2.0) * math.sin(t * ln2)
        den = dr * dr + di * di
        zr = (er * dr + ei * di) / den
        zi = (ei * dr - er * di) / den
        c = math.cos(thetas[q])
        s = math.sin(thetas[q])
        out_re[q] = c * zr - s * zi
        out_im[q] = s * zr + c * zi
