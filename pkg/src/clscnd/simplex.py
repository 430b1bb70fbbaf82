"""Bounded-variable simplex, in float and exact rational flavours.

Every row ``a.x (sense) b`` gets a logical variable ``s`` so that
``a.x + s = b`` with ``s`` in ``[0, inf)`` for ``<=``, ``(-inf, 0]`` for
``>=`` and ``[0, 0]`` for ``=``.  Nonbasic variables sit at a finite bound
(or at zero when free).  Phase one adds an artificial column only for rows
whose logical cannot start inside its bounds.

The float engine is a revised simplex that keeps an explicit basis inverse
and forms tableau rows and columns on demand.  It prices with Dantzig's
rule and switches to Bland's rule after ``stall_window`` iterations without
objective progress.  It also offers a dual-simplex re-solve from a parent
basis after bounds are tightened, which is how branch-and-bound children
are evaluated.

The rational engine uses gmpy2 ``mpq`` arithmetic and Bland's rule
throughout.  It is meant as a correctness oracle for small models.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from ._kernels import DUAL_BUDGET, DUAL_INFEASIBLE, DUAL_OPTIMAL, dual_pivots
from .milp import DenseForm, LinearModel

mpq = gmpy2.mpq

AT_LOWER, AT_UPPER, FREE, BASIC = 0, 1, 2, 3
SHORT_RUN = 50   # pivots after which a final solve refactors instead of refreshing x_B


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SimplexStalled(RuntimeError):
    """Iteration cap hit before the simplex reached a verdict."""

    def __init__(self, iterations: int):
        super().__init__(f"simplex stalled after {iterations} iterations")
        self.iterations = iterations


class SimplexNumericalError(RuntimeError):
    """The basis matrix became singular and a Bland restart did not help."""


class _Fallback(Exception):
    pass


@dataclass(frozen=True)
class WarmStart:
    """Basis over structural + logical columns, reusable after bound changes.

    ``inverse`` optionally caches the basis inverse so that several children
    of one node share a single factorisation.
    """

    basis: tuple[int, ...]
    status: bytes
    inverse: np.ndarray | None = field(default=None, compare=False, repr=False)


@dataclass
class LpResult:
    status: LpStatus
    objective_value: object = None
    values: object = None
    iterations: int = 0
    duals: object = None
    reduced_costs: object = None
    warm: WarmStart | None = None
    arithmetic: str = "float"
    bland_engaged: bool = False

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def float_values(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=float)


def _logical_bounds(senses, inf):
    lo = [0.0 if s in ("<=", "=") else -inf for s in senses]
    hi = [inf if s == "<=" else 0.0 for s in senses]
    return lo, hi


# ---------------------------------------------------------------------------
# float engine
# ---------------------------------------------------------------------------


class FloatSimplex:
    """Prepared float LP data; ``solve`` may be called concurrently."""

    def __init__(
        self,
        form: DenseForm,
        *,
        pivot_tol: float = 1e-8,
        feas_tol: float = 1e-7,
        opt_tol: float = 1e-9,
        stall_window: int = 50,
        max_iter: int | None = None,
        refactor_every: int = 100,
    ):
        A = np.asarray(form.A, dtype=float)
        m, n = A.shape
        scale = np.abs(A).max(axis=1) if n else np.zeros(m)
        scale[scale == 0.0] = 1.0
        self.row_scale = 1.0 / scale
        self.m, self.n = m, n
        self.A = A * self.row_scale[:, None]
        self.b = np.asarray(form.b, dtype=float) * self.row_scale
        self.M = np.hstack([self.A, np.eye(m)])
        self.MT = np.ascontiguousarray(self.M.T)   # fast row pricing
        cols, rows = np.nonzero(self.MT)               # compressed columns for the dual kernel
        self.col_ptr = np.searchsorted(cols, np.arange(n + m + 1)).astype(np.int64)
        self.col_rows = rows.astype(np.int64)
        self.col_vals = self.MT[cols, rows].copy()
        lo, hi = _logical_bounds(form.senses, math.inf)
        self.log_lo, self.log_hi = np.array(lo), np.array(hi)
        self.form = form
        self.pivot_tol = pivot_tol
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.stall_window = stall_window
        self.max_iter = max_iter if max_iter is not None else 20 * (m + n) + 1000
        self.refactor_every = refactor_every

    def solve(self, cost, lower=None, upper=None, warm: WarmStart | None = None) -> LpResult:
        lower = self.form.lower if lower is None else np.asarray(lower, dtype=float)
        upper = self.form.upper if upper is None else np.asarray(upper, dtype=float)
        cost = np.asarray(cost, dtype=float)
        if np.any(lower > upper):
            return LpResult(LpStatus.INFEASIBLE)
        run = _FloatRun(self, cost, lower, upper)
        if warm is not None:
            try:
                return run.result(run.from_warm(warm))
            except _Fallback:
                pass
            iters, engaged = run.iterations, run.bland_engaged
            run = _FloatRun(self, cost, lower, upper)
            run.iterations, run.bland_engaged = iters, engaged
        try:
            return run.result(run.cold())
        except _Fallback:
            pass
        # singular basis: restart with Bland's rule from the first pivot
        run = _FloatRun(self, cost, lower, upper)
        run.bland = run.bland_engaged = run.force_bland = True
        try:
            return run.result(run.cold())
        except _Fallback:
            raise SimplexNumericalError("basis matrix became singular") from None

    def factorize(self, warm: WarmStart) -> WarmStart:
        """Attach the basis inverse to ``warm`` (None if the basis is singular)."""
        if warm.inverse is not None:
            return warm
        try:
            inv = np.linalg.inv(self.M[:, list(warm.basis)])
        except np.linalg.LinAlgError:
            return warm
        if not np.all(np.isfinite(inv)):
            return warm
        return WarmStart(warm.basis, warm.status, inv)


class _FloatRun:
    def __init__(self, lp: FloatSimplex, cost, lower, upper):
        self.lp = lp
        m = lp.m
        cmax = float(np.abs(cost).max()) if cost.size else 0.0
        self.cost_scale = 1.0 / cmax if cmax > 0 else 1.0
        self.c = np.concatenate([cost * self.cost_scale, np.zeros(m)])
        self.lo = np.concatenate([lower, lp.log_lo])
        self.hi = np.concatenate([upper, lp.log_hi])
        self.M = lp.M
        self.MT = lp.MT
        self.b_full = lp.b
        self.iterations = 0
        self.bland = False
        self.bland_engaged = False
        self.force_bland = False
        self.n_art = 0

    # -- shared machinery ---------------------------------------------------

    def refactor(self):
        try:
            Binv = np.linalg.inv(self.M[:, self.basis])
        except np.linalg.LinAlgError:
            raise _Fallback from None
        if not np.all(np.isfinite(Binv)):
            raise _Fallback
        self.Binv = Binv
        self.since_refactor = 0
        self.refresh_x()

    def refresh_x(self):
        """Recompute basic values from the nonbasic ones with the current inverse."""
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b_full - self.M @ xn)

    def reduced_costs(self, c):
        d = c - self.MT @ (c[self.basis] @ self.Binv)
        d[self.basis] = 0.0
        return d

    def row(self, r):
        alpha = self.MT @ self.Binv[r]
        alpha[self.basis] = 0.0
        alpha[self.basis[r]] = 1.0
        return alpha

    def column(self, q):
        return self.Binv @ self.M[:, q]

    def pivot(self, r, q, col, d=None, alpha=None):
        """Basis change: column ``q`` replaces the variable basic in row ``r``."""
        Binv = self.Binv
        Binv[r] /= col[r]
        f = col.copy()
        f[r] = 0.0
        nz = np.flatnonzero(f)
        if nz.size:
            Binv[nz] -= np.outer(f[nz], Binv[r])
        if d is not None:
            d -= (d[q] / alpha[q]) * alpha
            d[q] = 0.0
        self.basis[r] = q
        self.status[q] = BASIC
        self.since_refactor += 1

    def _check_iter(self):
        self.iterations += 1
        if self.iterations > self.lp.max_iter:
            raise SimplexStalled(self.iterations)

    def primal(self, c) -> LpStatus:
        lp = self.lp
        d = self.reduced_costs(c)
        best = c @ self.x
        since_best = 0
        movable = self.hi > self.lo
        while True:
            nonbasic = movable & (self.status != BASIC)
            score = np.where(self.status == AT_LOWER, -d, np.where(self.status == AT_UPPER, d, np.abs(d)))
            elig = nonbasic & (score > lp.opt_tol)
            if not elig.any():
                return LpStatus.OPTIMAL
            self._check_iter()
            q = int(np.argmax(elig)) if self.bland else int(np.argmax(np.where(elig, score, -1.0)))
            direction = 1.0 if d[q] < 0 else -1.0
            col = self.column(q)
            rate = -direction * col
            xb = self.x[self.basis]
            lb, ub = self.lo[self.basis], self.hi[self.basis]
            ratios = np.full(lp.m, math.inf)
            with np.errstate(invalid="ignore", over="ignore"):
                dec = rate < -lp.pivot_tol
                ratios[dec] = (xb[dec] - lb[dec]) / -rate[dec]
                inc = rate > lp.pivot_tol
                ratios[inc] = (ub[inc] - xb[inc]) / rate[inc]
            np.maximum(ratios, 0.0, out=ratios)
            theta_row = ratios.min() if lp.m else math.inf
            flip = self.hi[q] - self.lo[q] if self.status[q] != FREE else math.inf
            if not math.isfinite(min(theta_row, flip)):
                return LpStatus.UNBOUNDED
            if flip <= theta_row:
                self.x[self.basis] -= direction * flip * col
                if self.status[q] == AT_LOWER:
                    self.status[q], self.x[q] = AT_UPPER, self.hi[q]
                else:
                    self.status[q], self.x[q] = AT_LOWER, self.lo[q]
            else:
                if self.bland:
                    ties = np.flatnonzero(ratios <= theta_row * (1 + 1e-9) + 1e-12)
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    # Harris two-pass: bounds relaxed by feas_tol fix the step,
                    # then the largest pivot within that step leaves
                    relaxed = np.full(lp.m, math.inf)
                    with np.errstate(invalid="ignore", over="ignore"):
                        relaxed[dec] = (xb[dec] - lb[dec] + lp.feas_tol) / -rate[dec]
                        relaxed[inc] = (ub[inc] - xb[inc] + lp.feas_tol) / rate[inc]
                    cand = np.flatnonzero(ratios <= max(relaxed.min(), 0.0))
                    r = int(cand[np.argmax(np.abs(col[cand]))])
                theta = ratios[r]
                self.x[self.basis] -= direction * theta * col
                self.x[q] += direction * theta
                leaving = self.basis[r]
                if rate[r] < 0:
                    self.status[leaving], self.x[leaving] = AT_LOWER, self.lo[leaving]
                else:
                    self.status[leaving], self.x[leaving] = AT_UPPER, self.hi[leaving]
                self.pivot(r, q, col, d, self.row(r))
                if self.since_refactor >= lp.refactor_every:
                    self.refactor()
                    d = self.reduced_costs(c)
            obj = c @ self.x
            if obj < best - 1e-12 * (1.0 + abs(best)):
                best, since_best = obj, 0
            else:
                since_best += 1
                if since_best >= lp.stall_window and not self.bland:
                    self.bland = self.bland_engaged = True

    # -- cold start -----------------------------------------------------------

    def cold(self) -> LpStatus:
        lp = self.lp
        m, n = lp.m, lp.n
        lo, hi = self.lo, self.hi
        x = np.where(np.isfinite(lo[:n]), lo[:n], np.where(np.isfinite(hi[:n]), hi[:n], 0.0))
        status = np.where(np.isfinite(lo[:n]), AT_LOWER, np.where(np.isfinite(hi[:n]), AT_UPPER, FREE))
        resid = lp.b - lp.A @ x
        feasible_row = (resid >= lp.log_lo) & (resid <= lp.log_hi)
        art_rows = np.flatnonzero(~feasible_row)
        k = art_rows.size
        self.n_art = k
        sign = np.ones(m)
        sign[art_rows] = np.sign(resid[art_rows])
        E = np.zeros((m, k))
        E[art_rows, np.arange(k)] = sign[art_rows]
        self.M = np.hstack([lp.M, E]) if k else lp.M
        self.MT = np.ascontiguousarray(self.M.T) if k else lp.MT
        self.lo = np.concatenate([lo, np.zeros(k)])
        self.hi = np.concatenate([hi, np.full(k, math.inf)])
        self.c = np.concatenate([self.c, np.zeros(k)])
        w = n + m + k
        self.x = np.zeros(w)
        self.x[:n] = x
        self.status = np.empty(w, dtype=np.int8)
        self.status[:n] = status
        log_status = np.where(lp.log_hi == 0.0, AT_UPPER, AT_LOWER)
        log_status[lp.log_lo == 0.0] = AT_LOWER
        self.status[n:n + m] = log_status
        self.basis = np.arange(n, n + m)
        self.basis[art_rows] = n + m + np.arange(k)
        self.status[self.basis] = BASIC
        self.x[n:n + m] = np.where(feasible_row, resid, 0.0)
        self.x[n + m:] = np.abs(resid[art_rows])
        self.Binv = np.diag(sign)   # basis columns are e_i or sign_i * e_i
        self.since_refactor = 0

        if k:
            c1 = np.zeros(w)
            c1[n + m:] = 1.0
            self.primal(c1)
            self.refactor()
            infeas = float(self.x[n + m:].sum())
            if infeas > lp.feas_tol * (1.0 + float(np.abs(lp.b).max(initial=0.0))):
                return LpStatus.INFEASIBLE
            self._drive_out_artificials()
            self.bland = self.force_bland
        return self._phase_two()

    def _drive_out_artificials(self):
        lp = self.lp
        n, m = lp.n, lp.m
        self.x[n + m:] = 0.0
        self.hi[n + m:] = 0.0
        for r in range(m):
            if self.basis[r] < n + m:
                continue
            alpha = np.abs(self.row(r)[:n + m])
            alpha[self.basis[self.basis < n + m]] = 0.0
            q = int(np.argmax(alpha))
            if alpha[q] <= lp.pivot_tol:
                continue  # redundant row; artificial stays basic at zero
            leaving = self.basis[r]
            self.status[leaving] = AT_LOWER
            self.pivot(r, q, self.column(q))
        if np.all(self.basis < n + m):
            w = n + m
            self.M, self.MT = lp.M, lp.MT
            self.x, self.lo, self.hi = self.x[:w], self.lo[:w], self.hi[:w]
            self.c, self.status = self.c[:w], self.status[:w]
            self.n_art = 0
        self.refactor()

    def _phase_two(self) -> LpStatus:
        status = self.primal(self.c)
        if status is LpStatus.OPTIMAL:
            if self.since_refactor > SHORT_RUN:
                self.refactor()
            else:
                self.refresh_x()
        return status

    # -- warm start -------------------------------------------------------------

    def from_warm(self, warm: WarmStart) -> LpStatus:
        lp = self.lp
        m = lp.m
        self.basis = np.array(warm.basis, dtype=np.int64)
        st = self.status = np.frombuffer(warm.status, dtype=np.int8).copy()
        fin_lo, fin_hi = np.isfinite(self.lo), np.isfinite(self.hi)
        st[(st == FREE) & fin_lo] = AT_LOWER
        st[(st == FREE) & ~fin_lo & fin_hi] = AT_UPPER
        if np.any((st == AT_LOWER) & ~fin_lo) or np.any((st == AT_UPPER) & ~fin_hi):
            raise _Fallback
        self.x = np.where(st == AT_LOWER, self.lo, np.where(st == AT_UPPER, self.hi, 0.0))
        if warm.inverse is not None:
            self.Binv = warm.inverse.copy()
            self.since_refactor = 0
            self.refresh_x()
        else:
            self.refactor()
        d = self.reduced_costs(self.c)
        # restore dual feasibility by bound flips where possible
        movable = self.hi > self.lo
        to_hi = movable & (st == AT_LOWER) & (d < -lp.opt_tol)
        to_lo = movable & (st == AT_UPPER) & (d > lp.opt_tol)
        if np.any(to_hi & ~fin_hi) or np.any(to_lo & ~fin_lo):
            raise _Fallback
        if np.any(movable & (st == FREE) & (np.abs(d) > lp.opt_tol)):
            raise _Fallback
        if to_hi.any() or to_lo.any():
            st[to_hi], st[to_lo] = AT_UPPER, AT_LOWER
            self.x[to_hi], self.x[to_lo] = self.hi[to_hi], self.lo[to_lo]
            self.refresh_x()
        status = self.dual(d, max_iter=10 * m + 100)
        if status is LpStatus.INFEASIBLE:
            if self._infeasible_row_proven():
                return status
            raise _Fallback
        return self._phase_two()

    def dual(self, d, max_iter) -> LpStatus:
        lp = self.lp
        budget = max_iter
        while True:
            code, steps, r = dual_pivots(
                self.Binv, self.basis, self.status, self.x, self.lo, self.hi, d,
                lp.col_ptr, lp.col_rows, lp.col_vals, lp.pivot_tol, lp.feas_tol,
                budget, lp.refactor_every - self.since_refactor,
            )
            self.iterations += steps
            self.since_refactor += steps
            budget -= steps
            if self.iterations > lp.max_iter:
                raise SimplexStalled(self.iterations)
            if code == DUAL_OPTIMAL:
                return LpStatus.OPTIMAL
            if code == DUAL_INFEASIBLE:
                self.infeasible_row = r
                return LpStatus.INFEASIBLE
            if code == DUAL_BUDGET:
                raise _Fallback
            self.refactor()
            d[:] = self.reduced_costs(self.c)

    def _infeasible_row_proven(self) -> bool:
        """Check the dual ray from a fresh factorisation.

        Basic variable ``r`` equals ``beta_r - sum_j alpha_j x_j`` over the
        nonbasic columns.  If its attainable range over their bounds misses
        its own bounds by a clear margin, the LP is infeasible.
        """
        lp = self.lp
        r = self.infeasible_row
        e = np.zeros(lp.m)
        e[r] = 1.0
        try:
            y = np.linalg.solve(self.M[:, self.basis].T, e)
        except np.linalg.LinAlgError:
            return False
        alpha = y @ self.M
        alpha[self.basis] = 0.0
        alpha[np.abs(alpha) <= lp.pivot_tol] = 0.0   # same threshold as the ratio test
        beta = float(y @ self.b_full)
        nb = np.flatnonzero(alpha)
        at_min = np.where(alpha[nb] > 0, self.hi[nb], self.lo[nb])
        at_max = np.where(alpha[nb] > 0, self.lo[nb], self.hi[nb])
        with np.errstate(invalid="ignore"):
            reach_lo = beta - alpha[nb] @ at_min
            reach_hi = beta - alpha[nb] @ at_max
        vb = self.basis[r]
        margin = 10 * lp.feas_tol * (1.0 + abs(beta))
        return reach_hi < self.lo[vb] - margin or reach_lo > self.hi[vb] + margin

    # -- result -------------------------------------------------------------------

    def result(self, status: LpStatus) -> LpResult:
        lp = self.lp
        if status is not LpStatus.OPTIMAL:
            return LpResult(status, iterations=self.iterations, bland_engaged=self.bland_engaged)
        n, m = lp.n, lp.m
        x = np.clip(self.x[:n], self.lo[:n], self.hi[:n])
        cost = self.c[:n] / self.cost_scale
        objective = float(cost @ x) + 0.0
        y_scaled = self.c[self.basis] @ self.Binv
        duals = y_scaled * lp.row_scale / self.cost_scale
        reduced = (self.c[:n] - y_scaled @ lp.A) / self.cost_scale
        warm = None
        if self.n_art == 0 and len(self.status) == n + m:
            warm = WarmStart(tuple(self.basis.tolist()), self.status.astype(np.int8).tobytes())
        return LpResult(
            LpStatus.OPTIMAL, objective, x, self.iterations, duals, reduced, warm, "float", self.bland_engaged
        )


# ---------------------------------------------------------------------------
# exact rational engine
# ---------------------------------------------------------------------------


def _q(v):
    return None if v is None or (isinstance(v, float) and math.isinf(v)) else mpq(v)


class RationalSimplex:
    """Two-phase bounded simplex over exact rationals with Bland's rule."""

    def __init__(self, form: DenseForm, max_iter: int | None = None):
        self.form = form
        A = form.A
        self.m, self.n = A.shape
        self.rows = [[mpq(float(a)) for a in A[i]] for i in range(self.m)]
        self.b = [mpq(float(v)) for v in form.b]
        lo, hi = _logical_bounds(form.senses, math.inf)
        self.log_lo = [_q(v) for v in lo]
        self.log_hi = [_q(v) for v in hi]
        self.max_iter = max_iter if max_iter is not None else 200 * (self.m + self.n) + 1000

    def solve(self, cost, lower=None, upper=None) -> LpResult:
        lower = self.form.lower if lower is None else lower
        upper = self.form.upper if upper is None else upper
        return _RationalRun(self, cost, lower, upper).run()


class _RationalRun:
    def __init__(self, lp: RationalSimplex, cost, lower, upper):
        self.lp = lp
        n, m = lp.n, lp.m
        self.cost = [mpq(float(c)) for c in cost]
        self.lo = [_q(float(v)) for v in lower] + list(lp.log_lo)
        self.hi = [_q(float(v)) for v in upper] + list(lp.log_hi)
        self.iterations = 0

    def run(self) -> LpResult:
        lp = self.lp
        n, m = lp.n, lp.m
        for j in range(n):
            if self.lo[j] is not None and self.hi[j] is not None and self.lo[j] > self.hi[j]:
                return LpResult(LpStatus.INFEASIBLE, arithmetic="rational")
        zero = mpq(0)
        x = []
        status = []
        for j in range(n):
            if self.lo[j] is not None:
                x.append(self.lo[j]); status.append(AT_LOWER)
            elif self.hi[j] is not None:
                x.append(self.hi[j]); status.append(AT_UPPER)
            else:
                x.append(zero); status.append(FREE)
        resid = []
        for i in range(m):
            row = lp.rows[i]
            acc = lp.b[i]
            for j in range(n):
                if row[j] and x[j]:
                    acc -= row[j] * x[j]
            resid.append(acc)
        art_rows = [
            i for i in range(m)
            if not ((lp.log_lo[i] is None or resid[i] >= lp.log_lo[i])
                    and (lp.log_hi[i] is None or resid[i] <= lp.log_hi[i]))
        ]
        k = len(art_rows)
        w = n + m + k
        art_of_row = {i: idx for idx, i in enumerate(art_rows)}
        T = []
        basis = []
        for i in range(m):
            sgn = 1
            if i in art_of_row:
                sgn = 1 if resid[i] > 0 else -1
            row = [v * sgn if v else zero for v in lp.rows[i]]
            row += [mpq(sgn) if jj == i else zero for jj in range(m)]
            row += [zero] * k
            if i in art_of_row:
                row[n + m + art_of_row[i]] = mpq(1)
                basis.append(n + m + art_of_row[i])
            else:
                basis.append(n + i)
            T.append(row)
        self.lo += [zero] * k
        self.hi += [None] * k
        for i in range(m):
            if lp.log_hi[i] == 0 and lp.log_lo[i] is None:
                status.append(AT_UPPER)
            else:
                status.append(AT_LOWER)
            x.append(resid[i] if i not in art_of_row else zero)
        status += [AT_LOWER] * k
        x += [abs(resid[i]) for i in art_rows]
        for j in basis:
            status[j] = BASIC
        self.T, self.x, self.status, self.basis, self.w = T, x, status, basis, w

        if k:
            c1 = [zero] * (n + m) + [mpq(1)] * k
            self.primal(c1)
            if sum((self.x[j] for j in range(n + m, w)), zero) > 0:
                return LpResult(LpStatus.INFEASIBLE, iterations=self.iterations, arithmetic="rational")
            self._drive_out(n + m)
        c2 = self.cost + [zero] * (w - n)
        st = self.primal(c2)
        if st is not LpStatus.OPTIMAL:
            return LpResult(st, iterations=self.iterations, arithmetic="rational")
        values = self.x[:n]
        obj = sum((self.cost[j] * values[j] for j in range(n) if self.cost[j]), zero)
        cb = [c2[j] for j in self.basis]
        duals = [sum((cb[r] * self.T[r][n + i] for r in range(m) if cb[r]), zero) for i in range(m)]
        reduced = [
            c2[j] - sum((cb[r] * self.T[r][j] for r in range(m) if cb[r]), zero) for j in range(n)
        ]
        return LpResult(
            LpStatus.OPTIMAL, obj, list(values), self.iterations, duals, reduced, None, "rational", True
        )

    def _drive_out(self, first_art):
        for r in range(self.lp.m):
            if self.basis[r] < first_art:
                continue
            row = self.T[r]
            q = next(
                (j for j in range(first_art) if row[j] != 0 and self.status[j] != BASIC), None
            )
            leaving = self.basis[r]
            if q is None:
                self.hi[leaving] = mpq(0)
                continue
            self.status[leaving] = AT_LOWER
            self._pivot(r, q, None)
        for j in range(first_art, self.w):
            self.hi[j] = mpq(0)
            if self.status[j] != BASIC:
                self.x[j] = mpq(0)

    def _pivot(self, r, q, d):
        T = self.T
        prow = T[r]
        piv = prow[q]
        if piv != 1:
            inv = 1 / piv
            for j in range(self.w):
                if prow[j]:
                    prow[j] *= inv
        nz = [j for j in range(self.w) if prow[j]]
        for i in range(self.lp.m):
            if i == r:
                continue
            f = T[i][q]
            if f:
                row = T[i]
                for j in nz:
                    row[j] -= f * prow[j]
        if d is not None:
            f = d[q]
            if f:
                for j in nz:
                    d[j] -= f * prow[j]
        self.basis[r] = q
        self.status[q] = BASIC

    def primal(self, c) -> LpStatus:
        m, w = self.lp.m, self.w
        T, x, lo, hi, status, basis = self.T, self.x, self.lo, self.hi, self.status, self.basis
        d = list(c)
        for r in range(m):
            cb = c[basis[r]]
            if cb:
                row = T[r]
                for j in range(w):
                    if row[j]:
                        d[j] -= cb * row[j]
        while True:
            q = None
            for j in range(w):
                st = status[j]
                if st == BASIC or (lo[j] is not None and hi[j] is not None and lo[j] == hi[j]):
                    continue
                dj = d[j]
                if (st == AT_LOWER and dj < 0) or (st == AT_UPPER and dj > 0) or (st == FREE and dj != 0):
                    q = j
                    break
            if q is None:
                return LpStatus.OPTIMAL
            self.iterations += 1
            if self.iterations > self.lp.max_iter:
                raise SimplexStalled(self.iterations)
            direction = 1 if d[q] < 0 else -1
            theta, r = None, None
            for i in range(m):
                a = T[i][q]
                if not a:
                    continue
                vb = basis[i]
                if direction * a > 0:   # basic variable decreases
                    if lo[vb] is None:
                        continue
                    ratio = (x[vb] - lo[vb]) / abs(a)
                else:
                    if hi[vb] is None:
                        continue
                    ratio = (hi[vb] - x[vb]) / abs(a)
                if theta is None or ratio < theta or (ratio == theta and vb < basis[r]):
                    theta, r = ratio, i
            flip = hi[q] - lo[q] if (lo[q] is not None and hi[q] is not None) else None
            if theta is None and flip is None:
                return LpStatus.UNBOUNDED
            if flip is not None and (theta is None or flip <= theta):
                step = flip * direction
                for i in range(m):
                    a = T[i][q]
                    if a:
                        x[basis[i]] -= step * a
                x[q] += step
                status[q] = AT_UPPER if status[q] == AT_LOWER else AT_LOWER
                continue
            step = theta * direction
            if step:
                for i in range(m):
                    a = T[i][q]
                    if a:
                        x[basis[i]] -= step * a
                x[q] += step
            leaving = basis[r]
            if direction * T[r][q] > 0:
                status[leaving], x[leaving] = AT_LOWER, lo[leaving]
            else:
                status[leaving], x[leaving] = AT_UPPER, hi[leaving]
            self._pivot(r, q, d)


# ---------------------------------------------------------------------------


def lp_solve(
    model: LinearModel,
    arithmetic: str = "float",
    objective: int = 0,
    **options,
) -> LpResult:
    """Solve the LP relaxation of ``model`` for one objective.

    Integrality flags are ignored.  Raises ``SimplexStalled`` if the
    iteration cap is reached.
    """
    if not model.objectives:
        raise ValueError("model has no objective")
    form = model.dense
    cost = form.costs[objective]
    const = float(form.cost_constants[objective])
    if arithmetic == "float":
        res = FloatSimplex(form, **options).solve(cost)
        if res.optimal:
            res.objective_value += const
        return res
    if arithmetic == "rational":
        res = RationalSimplex(form, **options).solve(cost)
        if res.optimal:
            res.objective_value += mpq(const)
        return res
    raise ValueError(f"unknown arithmetic {arithmetic!r}")
