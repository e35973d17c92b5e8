"""Pure-numpy fallback for the compiled batch solver.

Same algorithm as ``_kernels.pyx`` (Gaussian elimination with partial
pivoting), vectorised across the batch instead of looping in C.
"""

import numpy as np


def solve_affine(parts, coeffs, rhs_row=0):
    parts = np.asarray(parts, dtype=np.float64)
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    k, d, d2 = parts.shape
    if d2 != d or coeffs.shape[1] != k:
        raise ValueError("shape mismatch between parts and coefficients")
    if not 0 <= rhs_row < d:
        raise ValueError("rhs_row out of range")
    n = coeffs.shape[0]

    m0 = np.einsum("np,pij->nij", coeffs, parts)
    a = m0.copy()
    x = np.zeros((n, d))
    x[:, rhs_row] = 1.0
    rows = np.arange(n)
    pmax = np.zeros(n)
    pmin = np.full(n, np.inf)

    for col in range(d):
        piv = col + np.argmax(np.abs(a[:, col:, col]), axis=1)
        swap = piv != col
        if swap.any():
            r = rows[swap]
            p = piv[swap]
            a[r, col], a[r, p] = a[r, p].copy(), a[r, col].copy()
            x[r, col], x[r, p] = x[r, p], x[r, col]
        diag = a[:, col, col]
        mag = np.abs(diag)
        pmax = np.maximum(pmax, mag)
        pmin = np.minimum(pmin, mag)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = a[:, col + 1:, col] / diag[:, None]
        f[mag == 0] = 0.0
        a[:, col + 1:, col + 1:] -= f[:, :, None] * a[:, col, None, col + 1:]
        a[:, col + 1:, col] = f
        x[:, col + 1:] -= f * x[:, col, None]

    singular = pmin == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(d - 1, -1, -1):
            s = x[:, i] - np.einsum("nj,nj->n", a[:, i, i + 1:], x[:, i + 1:])
            x[:, i] = s / a[:, i, i]
        ratio = np.where(singular, 0.0, pmin / pmax)
        r = np.einsum("nij,nj->ni", m0, x)
        r[:, rhs_row] -= 1.0
        resid = np.abs(r).max(axis=1)
    resid[singular] = np.inf
    return x, resid, ratio
