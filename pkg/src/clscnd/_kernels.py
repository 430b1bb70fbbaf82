"""Compiled inner loop of the float dual simplex.

The matrix ``[A | I]`` is passed in compressed-column form; the basis
inverse is dense.  The kernel pivots in place until the basis is primal
feasible, the dual ratio test finds no entering column, the step budget
runs out, or a refactorisation is due.
"""

import numpy as np
from numba import njit

AT_LOWER, AT_UPPER, FREE, BASIC = 0, 1, 2, 3

DUAL_OPTIMAL, DUAL_INFEASIBLE, DUAL_BUDGET, DUAL_REFACTOR = 0, 1, 2, 3


@njit(cache=True)
def dual_pivots(Binv, basis, status, x, lo, hi, d, indptr, indices, data,
                pivot_tol, feas_tol, max_steps, pivots_left):
    """Returns ``(code, steps, row)``; ``row`` is the blocking row on infeasibility."""
    m = Binv.shape[0]
    w = x.shape[0]
    alpha = np.empty(w)
    col = np.empty(m)
    steps = 0
    while True:
        # leaving row: largest bound violation, first on ties
        r = -1
        worst = feas_tol
        for i in range(m):
            v = basis[i]
            xi = x[v]
            viol = lo[v] - xi
            if xi - hi[v] > viol:
                viol = xi - hi[v]
            if viol > worst:
                worst = viol
                r = i
        if r < 0:
            return DUAL_OPTIMAL, steps, -1
        if steps >= max_steps:
            return DUAL_BUDGET, steps, r
        if pivots_left <= 0:
            return DUAL_REFACTOR, steps, r
        steps += 1
        leaving = basis[r]
        below = x[leaving] < lo[leaving]
        target = lo[leaving] if below else hi[leaving]

        # row r of the tableau
        for j in range(w):
            s = 0.0
            for k in range(indptr[j], indptr[j + 1]):
                s += Binv[r, indices[k]] * data[k]
            alpha[j] = s
        for i in range(m):
            alpha[basis[i]] = 0.0
        alpha[leaving] = 1.0

        # dual ratio test
        best = np.inf
        for j in range(w):
            st = status[j]
            if st == BASIC or hi[j] <= lo[j]:
                continue
            a = alpha[j]
            ok = False
            if st == FREE:
                ok = abs(a) > pivot_tol
            elif below:
                ok = (st == AT_LOWER and a < -pivot_tol) or (st == AT_UPPER and a > pivot_tol)
            else:
                ok = (st == AT_LOWER and a > pivot_tol) or (st == AT_UPPER and a < -pivot_tol)
            if ok:
                ratio = abs(d[j]) / abs(a)
                if ratio < best:
                    best = ratio
        if best == np.inf:
            return DUAL_INFEASIBLE, steps, r
        limit = best * (1 + 1e-9) + 1e-12
        q = -1
        qa = 0.0
        for j in range(w):
            st = status[j]
            if st == BASIC or hi[j] <= lo[j]:
                continue
            a = alpha[j]
            ok = False
            if st == FREE:
                ok = abs(a) > pivot_tol
            elif below:
                ok = (st == AT_LOWER and a < -pivot_tol) or (st == AT_UPPER and a > pivot_tol)
            else:
                ok = (st == AT_LOWER and a > pivot_tol) or (st == AT_UPPER and a < -pivot_tol)
            if ok and abs(d[j]) / abs(a) <= limit and abs(a) > qa:
                qa = abs(a)
                q = j

        # entering column
        for i in range(m):
            col[i] = 0.0
        for k in range(indptr[q], indptr[q + 1]):
            c = data[k]
            src = indices[k]
            for i in range(m):
                col[i] += Binv[i, src] * c

        delta = (x[leaving] - target) / alpha[q]
        for i in range(m):
            x[basis[i]] -= delta * col[i]
        x[q] += delta
        x[leaving] = target
        status[leaving] = AT_LOWER if below else AT_UPPER

        # basis update
        piv = col[r]
        for k in range(m):
            Binv[r, k] /= piv
        for i in range(m):
            f = col[i]
            if i != r and f != 0.0:
                for k in range(m):
                    Binv[i, k] -= f * Binv[r, k]
        ratio = d[q] / alpha[q]
        for j in range(w):
            d[j] -= ratio * alpha[j]
        d[q] = 0.0
        basis[r] = q
        status[q] = BASIC
        pivots_left -= 1
