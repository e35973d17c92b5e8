# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch solver for affine families of dense linear systems."""

import numpy as np

from libc.math cimport fabs
from libc.stdlib cimport malloc, free


cdef int _solve_one(const double[:, :, ::1] parts, const double[::1] coeff,
                    Py_ssize_t rhs_row, double* a, double* m0, double* x,
                    double* resid, double* ratio) noexcept nogil:
    cdef Py_ssize_t k = parts.shape[0]
    cdef Py_ssize_t d = parts.shape[1]
    cdef Py_ssize_t i, j, p, col, piv
    cdef double c, best, t, f, pmax = 0.0, pmin = 1e308, s

    for i in range(d * d):
        a[i] = 0.0
    for p in range(k):
        c = coeff[p]
        if c == 0.0:
            continue
        for i in range(d):
            for j in range(d):
                a[i * d + j] += c * parts[p, i, j]
    for i in range(d * d):
        m0[i] = a[i]
    for i in range(d):
        x[i] = 0.0
    x[rhs_row] = 1.0

    for col in range(d):
        piv = col
        best = fabs(a[col * d + col])
        for i in range(col + 1, d):
            t = fabs(a[i * d + col])
            if t > best:
                best = t
                piv = i
        if piv != col:
            for j in range(d):
                t = a[col * d + j]
                a[col * d + j] = a[piv * d + j]
                a[piv * d + j] = t
            t = x[col]
            x[col] = x[piv]
            x[piv] = t
        if best > pmax:
            pmax = best
        if best < pmin:
            pmin = best
        if best == 0.0:
            ratio[0] = 0.0
            resid[0] = 1e308
            return 1
        for i in range(col + 1, d):
            f = a[i * d + col] / a[col * d + col]
            if f != 0.0:
                a[i * d + col] = f
                for j in range(col + 1, d):
                    a[i * d + j] -= f * a[col * d + j]
                x[i] -= f * x[col]

    for i in range(d - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, d):
            s -= a[i * d + j] * x[j]
        x[i] = s / a[i * d + i]

    best = 0.0
    for i in range(d):
        s = -1.0 if i == rhs_row else 0.0
        for j in range(d):
            s += m0[i * d + j] * x[j]
        if fabs(s) > best:
            best = fabs(s)
    resid[0] = best
    ratio[0] = pmin / pmax
    return 0


def solve_affine(parts, coeffs, Py_ssize_t rhs_row=0):
    """Solve ``(sum_p coeffs[n, p] * parts[p]) x_n = e_rhs`` for every ``n``.

    Gaussian elimination with partial pivoting. Returns ``(x, residual,
    pivot_ratio)`` where ``residual`` is the max-norm of ``M x - e`` and
    ``pivot_ratio`` is min |pivot| / max |pivot|.
    """
    cdef const double[:, :, ::1] P = np.ascontiguousarray(parts, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = C.shape[0]
    cdef Py_ssize_t d = P.shape[1]
    if P.shape[2] != d or C.shape[1] != P.shape[0]:
        raise ValueError("shape mismatch between parts and coefficients")
    if not 0 <= rhs_row < d:
        raise ValueError("rhs_row out of range")

    out = np.empty((n, d))
    res = np.empty(n)
    rat = np.empty(n)
    cdef double[:, ::1] X = out
    cdef double[::1] R = res
    cdef double[::1] Q = rat
    cdef double* a = <double*> malloc(2 * d * d * sizeof(double))
    if a == NULL:
        raise MemoryError()
    cdef double* m0 = a + d * d
    cdef Py_ssize_t idx
    try:
        with nogil:
            for idx in range(n):
                _solve_one(P, C[idx], rhs_row, a, m0, &X[idx, 0], &R[idx], &Q[idx])
    finally:
        free(a)
    return out, res, rat
