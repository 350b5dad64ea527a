# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Semantics mirror ``_kernels_py`` exactly."""

import numpy as np

from libc.math cimport fabs, erfc

cdef double _INV_SQRT2 = 0.70710678118654752440


cdef inline void _nadd(double* s, double* c, double x) noexcept nogil:
    # Neumaier compensated accumulation, written branch-free
    cdef double t = s[0] + x
    cdef bint big = fabs(s[0]) >= fabs(x)
    cdef double hi = s[0] if big else x
    cdef double lo = x if big else s[0]
    c[0] += (hi - t) + lo
    s[0] = t


cdef void _row_sums(const double[:, ::1] a, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s, c
    for i in range(a.shape[0]):
        s = 0.0; c = 0.0
        for j in range(a.shape[1]):
            _nadd(&s, &c, a[i, j])
        out[i] = s + c


def _powe(m, double e):
    # transcendental powers go through numpy's vectorised ufunc
    if e == 1.0:
        return m
    if e == 2.0:
        return np.multiply(m, m)
    if e == 0.5:
        return np.sqrt(m)
    return np.power(m, e)


def power_sums(g, double p, double q):
    """Row sums of ``m``, ``m**(2/p)`` and ``m**(q/p)`` where ``m = p * g``.

    With ``g ~ Gamma(1/p)`` these are the sums of ``|Z|^p``, ``Z^2`` and
    ``|Z|^q`` for p-Gaussian ``Z``.  Rows of the result are NaN for ``q <= 0``.
    """
    m = np.multiply(np.ascontiguousarray(g, dtype=np.float64), p)
    out = np.empty((3, m.shape[0]), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[:, ::1] mv = m
    cdef double[:, ::1] a2 = _powe(m, 2.0 / p)
    cdef double[:, ::1] aq
    with nogil:
        _row_sums(mv, o[0])
        _row_sums(a2, o[1])
    if q <= 0.0:
        out[2] = np.nan
    elif q == 2.0:
        out[2] = out[1]
    else:
        aq = _powe(m, q / p)
        with nogil:
            _row_sums(aq, o[2])
    return out


def ks_sorted_gaussian(const double[::1] x, double sigma):
    """Exact sup-distance between the step CDF of sorted ``x`` and N(0, sigma^2)."""
    cdef Py_ssize_t m = x.shape[0], i
    cdef double inv_m = 1.0 / m, scale = _INV_SQRT2 / sigma
    cdef double d = 0.0, cdf, up, lo
    with nogil:
        for i in range(m):
            cdf = 0.5 * erfc(-x[i] * scale)
            up = (i + 1) * inv_m - cdf
            lo = cdf - i * inv_m
            if up > d:
                d = up
            if lo > d:
                d = lo
    return d


def ks_two_sorted(const double[::1] a, const double[::1] b):
    """Sup-distance between the step CDFs of two sorted samples (merge scan)."""
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], i = 0, j = 0
    cdef double d = 0.0, t, diff
    cdef double inv_a = 1.0 / na, inv_b = 1.0 / nb
    with nogil:
        while i < na and j < nb:
            t = a[i] if a[i] < b[j] else b[j]
            while i < na and a[i] <= t:
                i += 1
            while j < nb and b[j] <= t:
                j += 1
            diff = fabs(i * inv_a - j * inv_b)
            if diff > d:
                d = diff
    return d
