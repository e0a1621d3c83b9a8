# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Behaviour must match ``_kernels_py`` exactly."""

from libc.math cimport fabs, fabsl, powl
from libc.stdlib cimport malloc, free

import numpy as np


def strip_sum(const int[:] src, const int[:] dst, const int[:] deg,
              int n_nodes, int target, const double[:] points, int max_deg):
    """Sum over chains of horizontal strips ending at node ``target``.

    Node 0 is the empty partition. Each point contributes one step of the
    chain; transition ``t`` multiplies by ``points[n] ** deg[t]``.
    """
    cdef Py_ssize_t n_trans = src.shape[0]
    cdef Py_ssize_t n_pts = points.shape[0]
    cdef Py_ssize_t i, t, n
    cdef double x
    cdef double *cur = <double *> malloc(n_nodes * sizeof(double))
    cdef double *nxt = <double *> malloc(n_nodes * sizeof(double))
    cdef double *pw = <double *> malloc((max_deg + 1) * sizeof(double))
    cdef double *tmp
    cdef double out
    if cur == NULL or nxt == NULL or pw == NULL:
        free(cur); free(nxt); free(pw)
        raise MemoryError()
    try:
        for i in range(n_nodes):
            cur[i] = 0.0
        cur[0] = 1.0
        for n in range(n_pts):
            x = points[n]
            pw[0] = 1.0
            for i in range(1, max_deg + 1):
                pw[i] = pw[i - 1] * x
            for i in range(n_nodes):
                nxt[i] = 0.0
            for t in range(n_trans):
                nxt[dst[t]] += cur[src[t]] * pw[deg[t]]
            tmp = cur
            cur = nxt
            nxt = tmp
        out = cur[target]
    finally:
        free(cur); free(nxt); free(pw)
    return out


cdef double _det3(double[:, ::1] a, int r0, int r1, int r2,
                  int c0, int c1, int c2) nogil:
    return (a[r0, c0] * (a[r1, c1] * a[r2, c2] - a[r1, c2] * a[r2, c1])
            - a[r0, c1] * (a[r1, c0] * a[r2, c2] - a[r1, c2] * a[r2, c0])
            + a[r0, c2] * (a[r1, c0] * a[r2, c1] - a[r1, c1] * a[r2, c0]))


def det(matrix):
    """Determinant: cofactor expansion up to 4x4, partial-pivot LU beyond."""
    cdef double[:, ::1] a = np.array(matrix, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t k = a.shape[0]
    cdef Py_ssize_t i, j, r, p
    cdef double sign, best, f, out
    if a.shape[1] != k:
        raise ValueError("determinant needs a square matrix")
    if k == 0:
        return 1.0
    if k == 1:
        return a[0, 0]
    if k == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if k == 3:
        return _det3(a, 0, 1, 2, 0, 1, 2)
    if k == 4:
        return (a[0, 0] * _det3(a, 1, 2, 3, 1, 2, 3)
                - a[0, 1] * _det3(a, 1, 2, 3, 0, 2, 3)
                + a[0, 2] * _det3(a, 1, 2, 3, 0, 1, 3)
                - a[0, 3] * _det3(a, 1, 2, 3, 0, 1, 2))
    sign = 1.0
    for j in range(k):
        p = j
        best = fabs(a[j, j])
        for r in range(j + 1, k):
            if fabs(a[r, j]) > best:
                best = fabs(a[r, j])
                p = r
        if best == 0.0:
            return 0.0
        if p != j:
            for i in range(k):
                a[j, i], a[p, i] = a[p, i], a[j, i]
            sign = -sign
        for r in range(j + 1, k):
            f = a[r, j] / a[j, j]
            for i in range(j, k):
                a[r, i] -= f * a[j, i]
    out = sign
    for j in range(k):
        out *= a[j, j]
    return out


cdef long double _ldet(long double *a, Py_ssize_t k) noexcept nogil:
    """Extended-precision determinant of the row-major k x k array ``a`` (clobbered)."""
    cdef Py_ssize_t i, j, r, p
    cdef long double sign, best, f, out, tmp
    if k == 0:
        return 1.0
    if k == 1:
        return a[0]
    if k == 2:
        return a[0] * a[3] - a[1] * a[2]
    if k == 3:
        return (a[0] * (a[4] * a[8] - a[5] * a[7])
                - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6]))
    if k == 4:
        return (a[0] * (a[5] * (a[10] * a[15] - a[11] * a[14])
                        - a[6] * (a[9] * a[15] - a[11] * a[13])
                        + a[7] * (a[9] * a[14] - a[10] * a[13]))
                - a[1] * (a[4] * (a[10] * a[15] - a[11] * a[14])
                          - a[6] * (a[8] * a[15] - a[11] * a[12])
                          + a[7] * (a[8] * a[14] - a[10] * a[12]))
                + a[2] * (a[4] * (a[9] * a[15] - a[11] * a[13])
                          - a[5] * (a[8] * a[15] - a[11] * a[12])
                          + a[7] * (a[8] * a[13] - a[9] * a[12]))
                - a[3] * (a[4] * (a[9] * a[14] - a[10] * a[13])
                          - a[5] * (a[8] * a[14] - a[10] * a[12])
                          + a[6] * (a[8] * a[13] - a[9] * a[12])))
    sign = 1.0
    for j in range(k):
        p = j
        best = fabsl(a[j * k + j])
        for r in range(j + 1, k):
            if fabsl(a[r * k + j]) > best:
                best = fabsl(a[r * k + j])
                p = r
        if best == 0.0:
            return 0.0
        if p != j:
            for i in range(k):
                tmp = a[j * k + i]
                a[j * k + i] = a[p * k + i]
                a[p * k + i] = tmp
            sign = -sign
        for r in range(j + 1, k):
            f = a[r * k + j] / a[j * k + j]
            for i in range(j, k):
                a[r * k + i] -= f * a[j * k + i]
    out = sign
    for j in range(k):
        out *= a[j * k + j]
    return out


def bialternant(const double[:] exponents, const double[:] points):
    """``det(G) / prod_{i<j}(t_i - t_j)`` with ``G[i, j] = t_j ** m_i``.

    Entries, determinant and product are carried in ``long double``.
    """
    cdef Py_ssize_t k = points.shape[0]
    cdef Py_ssize_t i, j
    cdef long double num, den
    if exponents.shape[0] != k:
        raise ValueError("one exponent per point required")
    cdef long double *a = <long double *> malloc((k * k + 1) * sizeof(long double))
    if a == NULL:
        raise MemoryError()
    try:
        for i in range(k):
            for j in range(k):
                a[i * k + j] = powl(<long double> points[j], <long double> exponents[i])
        num = _ldet(a, k)
    finally:
        free(a)
    den = 1.0
    for i in range(k):
        for j in range(i + 1, k):
            den *= (<long double> points[i]) - (<long double> points[j])
    return <double> (num / den)
