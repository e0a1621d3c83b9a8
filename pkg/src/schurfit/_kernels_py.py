"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def strip_sum(src, dst, deg, n_nodes, target, points, max_deg):
    cur = [0.0] * n_nodes
    cur[0] = 1.0
    triples = list(zip(src.tolist(), dst.tolist(), deg.tolist()))
    for x in np.asarray(points, dtype=np.float64).tolist():
        pw = [1.0] * (max_deg + 1)
        for i in range(1, max_deg + 1):
            pw[i] = pw[i - 1] * x
        nxt = [0.0] * n_nodes
        for s, d, e in triples:
            nxt[d] += cur[s] * pw[e]
        cur = nxt
    return cur[target]


def _det3(a, r0, r1, r2, c0, c1, c2):
    return (a[r0][c0] * (a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1])
            - a[r0][c1] * (a[r1][c0] * a[r2][c2] - a[r1][c2] * a[r2][c0])
            + a[r0][c2] * (a[r1][c0] * a[r2][c1] - a[r1][c1] * a[r2][c0]))


def det(matrix):
    a = np.array(matrix, dtype=np.float64).tolist()
    if any(len(row) != len(a) for row in a):
        raise ValueError("determinant needs a square matrix")
    return _det(a)


def _det(a):
    # works on lists of floats or of np.longdouble scalars
    k = len(a)
    if k == 0:
        return 1.0
    if k == 1:
        return a[0][0]
    if k == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    if k == 3:
        return _det3(a, 0, 1, 2, 0, 1, 2)
    if k == 4:
        return (a[0][0] * _det3(a, 1, 2, 3, 1, 2, 3)
                - a[0][1] * _det3(a, 1, 2, 3, 0, 2, 3)
                + a[0][2] * _det3(a, 1, 2, 3, 0, 1, 3)
                - a[0][3] * _det3(a, 1, 2, 3, 0, 1, 2))
    sign = 1.0
    for j in range(k):
        p = max(range(j, k), key=lambda r: abs(a[r][j]))
        if a[p][j] == 0.0:
            return 0.0
        if p != j:
            a[j], a[p] = a[p], a[j]
            sign = -sign
        for r in range(j + 1, k):
            f = a[r][j] / a[j][j]
            for i in range(j, k):
                a[r][i] -= f * a[j][i]
    out = sign
    for j in range(k):
        out *= a[j][j]
    return out


def bialternant(exponents, points):
    pts = [np.longdouble(t) for t in np.asarray(points, dtype=np.float64)]
    exps = [np.longdouble(m) for m in np.asarray(exponents, dtype=np.float64)]
    if len(exps) != len(pts):
        raise ValueError("one exponent per point required")
    num = _det([[np.power(t, m) for t in pts] for m in exps])
    den = np.longdouble(1.0)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            den *= pts[i] - pts[j]
    return float(num / den)
