"""Pure-Python/numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function; used when the compiled
extension is not available or ``GIBBSDICE_PURE=1`` is set.
"""

import math

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol, maxiter):
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, f(x), iterations, a, b)`` where ``[a, b]`` is the final
    bracket and ``x`` its midpoint.
    """
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol and it < maxiter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
        it += 1
    x = 0.5 * (a + b)
    return x, f(x), it, a, b


def gibbs_nll(E, n, beta):
    e0 = E.min()
    log_z = -beta * e0 + math.log(np.exp(-beta * (E - e0)).sum())
    return float(n.sum() * log_z + beta * (E * n).sum())


def gibbs_fit(E, n, lo, hi, tol, maxiter):
    return golden_section(lambda b: gibbs_nll(E, n, b), lo, hi, tol, maxiter)


def xxy_nll(ex, ey, N, n, beta):
    m = np.minimum(ex, ey)
    log_z = -beta * m + np.log(np.exp(-beta * (ey - m)) + 2.0 * np.exp(-beta * (ex - m)))
    return float((N * log_z + beta * (n * ey + (N - n) * ex)).sum())


def xxy_fit(ex, ey, N, n, lo, hi, tol, maxiter):
    return golden_section(lambda b: xxy_nll(ex, ey, N, n, b), lo, hi, tol, maxiter)


def xxy_cells(ex, ey, beta):
    """``(p_xx, p_xy)`` computed so neither underflows through ``1 - p``."""
    gap = beta * (ex - ey)
    t = np.exp(-np.abs(gap))
    pos = gap >= 0
    p = np.where(pos, 1.0 / (1.0 + 2.0 * t), t / (t + 2.0))
    q = np.where(pos, 2.0 * t / (1.0 + 2.0 * t), 2.0 / (t + 2.0))
    return p, q


def xxy_chi2(ex, ey, N, n, beta):
    p, q = xxy_cells(ex, ey, beta)
    e1 = N * p
    e2 = N * q
    if np.any(e1 <= 0.0) or np.any(e2 <= 0.0):
        return math.inf
    return float(((e1 - n) ** 2 / e1 + (e2 - (N - n)) ** 2 / e2).sum())
