# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for likelihood evaluation, golden-section fitting and
the xxy Pearson statistic.  Same signatures as ``_pykernels``."""

from libc.math cimport exp, log, fabs, sqrt, INFINITY

cdef double INVPHI = (sqrt(5.0) - 1.0) / 2.0


cdef double _gibbs_nll(const double[::1] E, const double[::1] n, double beta) noexcept nogil:
    cdef Py_ssize_t i, k = E.shape[0]
    cdef double e0 = E[0], z = 0.0, tot = 0.0, dot = 0.0
    for i in range(1, k):
        if E[i] < e0:
            e0 = E[i]
    for i in range(k):
        z += exp(-beta * (E[i] - e0))
        tot += n[i]
        dot += E[i] * n[i]
    return tot * (-beta * e0 + log(z)) + beta * dot


cdef double _xxy_nll(const double[::1] ex, const double[::1] ey, const double[::1] N,
                     const double[::1] n, double beta) noexcept nogil:
    cdef Py_ssize_t j, m = ex.shape[0]
    cdef double acc = 0.0, lo, log_z
    for j in range(m):
        lo = ex[j] if ex[j] < ey[j] else ey[j]
        log_z = -beta * lo + log(exp(-beta * (ey[j] - lo)) + 2.0 * exp(-beta * (ex[j] - lo)))
        acc += N[j] * log_z + beta * (n[j] * ey[j] + (N[j] - n[j]) * ex[j])
    return acc


cdef double _xxy_chi2(const double[::1] ex, const double[::1] ey, const double[::1] N,
                      const double[::1] n, double beta) noexcept nogil:
    cdef Py_ssize_t j, m = ex.shape[0]
    cdef double acc = 0.0, gap, t, p, q, e1, e2
    for j in range(m):
        gap = beta * (ex[j] - ey[j])
        t = exp(-fabs(gap))
        if gap >= 0:
            p = 1.0 / (1.0 + 2.0 * t)
            q = 2.0 * t / (1.0 + 2.0 * t)
        else:
            p = t / (t + 2.0)
            q = 2.0 / (t + 2.0)
        e1 = N[j] * p
        e2 = N[j] * q
        if e1 <= 0.0 or e2 <= 0.0:
            return INFINITY
        acc += (e1 - n[j]) * (e1 - n[j]) / e1 + (e2 - (N[j] - n[j])) * (e2 - (N[j] - n[j])) / e2
    return acc


# golden section over one of the two objectives; kind 0 = gibbs, 1 = xxy
cdef double _objective(int kind, const double[::1] a0, const double[::1] a1,
                       const double[::1] a2, const double[::1] a3, double beta) noexcept nogil:
    if kind == 0:
        return _gibbs_nll(a0, a1, beta)
    return _xxy_nll(a0, a1, a2, a3, beta)


cdef tuple _golden(int kind, const double[::1] a0, const double[::1] a1,
                   const double[::1] a2, const double[::1] a3,
                   double lo, double hi, double tol, long maxiter):
    cdef double a = lo, b = hi, c, d, fc, fd, x, fx
    cdef long it = 0
    with nogil:
        c = b - INVPHI * (b - a)
        d = a + INVPHI * (b - a)
        fc = _objective(kind, a0, a1, a2, a3, c)
        fd = _objective(kind, a0, a1, a2, a3, d)
        while b - a > tol and it < maxiter:
            if fc < fd:
                b = d
                d = c
                fd = fc
                c = b - INVPHI * (b - a)
                fc = _objective(kind, a0, a1, a2, a3, c)
            else:
                a = c
                c = d
                fc = fd
                d = a + INVPHI * (b - a)
                fd = _objective(kind, a0, a1, a2, a3, d)
            it += 1
        x = 0.5 * (a + b)
        fx = _objective(kind, a0, a1, a2, a3, x)
    return x, fx, it, a, b


def gibbs_nll(const double[::1] E, const double[::1] n, double beta):
    cdef double r
    with nogil:
        r = _gibbs_nll(E, n, beta)
    return r


def gibbs_fit(const double[::1] E, const double[::1] n, double lo, double hi,
              double tol, long maxiter):
    return _golden(0, E, n, E, n, lo, hi, tol, maxiter)


def xxy_nll(const double[::1] ex, const double[::1] ey, const double[::1] N,
            const double[::1] n, double beta):
    cdef double r
    with nogil:
        r = _xxy_nll(ex, ey, N, n, beta)
    return r


def xxy_fit(const double[::1] ex, const double[::1] ey, const double[::1] N,
            const double[::1] n, double lo, double hi, double tol, long maxiter):
    return _golden(1, ex, ey, N, n, lo, hi, tol, maxiter)


def xxy_chi2(const double[::1] ex, const double[::1] ey, const double[::1] N,
             const double[::1] n, double beta):
    cdef double r
    with nogil:
        r = _xxy_chi2(ex, ey, N, n, beta)
    return r
