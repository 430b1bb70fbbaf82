"""Exact single-objective MILP solve by LP-based branch-and-bound.

Only the integral (binary) variables are branched on.  Nodes are evaluated
eagerly with a dual-simplex re-solve from the parent basis and kept in a
best-bound heap; ties go to the deeper node, then to creation order.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Solution
from .milp import LinearModel, solution_from_values
from .simplex import FloatSimplex, LpStatus, RationalSimplex

log = logging.getLogger(__name__)

DEFAULT_NODE_LIMIT = 200_000
ORACLE_MAX_BINARIES = 22


class MilpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass
class MilpResult:
    status: MilpStatus
    objective: float | None = None
    values: np.ndarray | None = None
    nodes_explored: int = 0
    bound: float | None = None          # proven lower bound at termination
    root_bound: float | None = None
    objective_index: int = 0
    model: LinearModel | None = None
    alternatives: list = field(default_factory=list)   # tied binary assignments, if collected

    @property
    def optimal(self) -> bool:
        return self.status is MilpStatus.OPTIMAL

    def binaries(self) -> tuple[int, ...]:
        return tuple(int(round(self.values[v])) for v in self.model.integral_ids)

    def solution(self) -> Solution:
        return solution_from_values(self.model, self.values)


class NodeLimitReached(RuntimeError):
    def __init__(self, bound: float, incumbent: MilpResult | None, nodes: int):
        inc = "none" if incumbent is None else f"{incumbent.objective:.10g}"
        super().__init__(f"node limit reached after {nodes} nodes (bound {bound:.10g}, incumbent {inc})")
        self.bound = bound
        self.incumbent = incumbent
        self.nodes = nodes


class OracleTooLarge(ValueError):
    pass


def _cutoff(incumbent: float) -> float:
    """Bounds at or above this cannot improve the incumbent."""
    if math.isinf(incumbent):
        return incumbent
    return incumbent - 1e-9 * max(1.0, abs(incumbent))


def solve_single_objective(
    model: LinearModel,
    objective_index: int = 0,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    int_tol: float = 1e-6,
    lp: FloatSimplex | None = None,
    tie_band: float | None = None,
) -> MilpResult:
    """Globally minimise one objective of ``model`` subject to all rows and integrality.

    With ``tie_band`` set, the search also collects every binary assignment
    whose best completion lies within the band of the optimum (the band never
    drops below the usual 1e-9 relative tolerance).  Integral nodes inside the
    band keep branching on their free binaries so that no tied assignment is
    lost; ``MilpResult.alternatives`` lists them in discovery order.
    """
    form = model.dense
    lp = lp or FloatSimplex(form)
    cost = form.costs[objective_index]
    const = float(form.cost_constants[objective_index])
    int_ids = np.asarray(model.integral_ids, dtype=np.int64)
    base_lo, base_hi = form.lower.copy(), form.upper.copy()
    seq = itertools.count()
    nodes = 0
    collect = tie_band is not None
    found: dict[tuple[int, ...], float] = {}

    def keep_limit(value):
        return value + max(tie_band, 1e-9 * max(1.0, abs(value)))

    def pruned(bound):
        if collect:
            return bound > keep_limit(inc_value)
        return bound >= _cutoff(inc_value)

    def evaluate(lo_int, hi_int, warm):
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            bound = min([h[0] for h in heap] + [active, inc_value])
            raise NodeLimitReached(bound, incumbent, nodes - 1)
        lower, upper = base_lo.copy(), base_hi.copy()
        lower[int_ids], upper[int_ids] = lo_int, hi_int
        return lp.solve(cost, lower, upper, warm)

    def accept_integral(res):
        """Re-solve with the rounded binaries pinned to get clean flows."""
        nonlocal incumbent, inc_value
        fixed = np.rint(res.values[int_ids])
        clean = evaluate(fixed, fixed, res.warm)
        if not clean.optimal:
            return
        value = clean.objective_value + const
        if collect:
            found.setdefault(tuple(int(v) for v in fixed), value)
        if value < _cutoff(inc_value):
            values = clean.values.copy()
            values[int_ids] = fixed
            incumbent = MilpResult(MilpStatus.OPTIMAL, value, values, objective_index=objective_index,
                                   model=model)
            inc_value = value
            log.debug("incumbent %.10g after %d nodes", value, nodes)

    def fractional(res):
        vals = res.values[int_ids]
        dist = np.abs(vals - np.rint(vals))
        if np.all(dist <= int_tol):
            return None
        return int(np.argmax(dist))  # first maximum = lowest index on ties

    heap: list = []
    incumbent: MilpResult | None = None
    inc_value = math.inf
    active = -math.inf      # bound of the node being expanded

    root = evaluate(base_lo[int_ids], base_hi[int_ids], None)
    if root.status is LpStatus.UNBOUNDED:
        raise ValueError("LP relaxation is unbounded")
    if not root.optimal:
        return MilpResult(MilpStatus.INFEASIBLE, nodes_explored=nodes, objective_index=objective_index,
                          model=model)
    root_bound = active = root.objective_value + const

    def consider(res, lo_int, hi_int, depth):
        bound = res.objective_value + const
        if pruned(bound):
            return
        branch = fractional(res)
        if branch is None:
            accept_integral(res)
            if not collect:
                return
            free = np.flatnonzero(lo_int < hi_int)
            if free.size == 0 or pruned(bound):
                return
            branch = int(free[0])
        heapq.heappush(heap, (bound, -depth, next(seq), lo_int, hi_int, res.warm, branch))

    consider(root, base_lo[int_ids].copy(), base_hi[int_ids].copy(), 0)
    while heap:
        bound, neg_depth, _, lo_int, hi_int, warm, branch = heapq.heappop(heap)
        if pruned(bound):
            continue
        active = bound
        if warm is not None:
            warm = lp.factorize(warm)   # one factorisation shared by both children
        for value in (0.0, 1.0):
            c_lo, c_hi = lo_int.copy(), hi_int.copy()
            c_lo[branch] = c_hi[branch] = value
            child = evaluate(c_lo, c_hi, warm)
            if child.status is LpStatus.OPTIMAL:
                consider(child, c_lo, c_hi, 1 - neg_depth)

    if incumbent is None:
        return MilpResult(MilpStatus.INFEASIBLE, nodes_explored=nodes, root_bound=root_bound,
                          objective_index=objective_index, model=model)
    incumbent.nodes_explored = nodes
    incumbent.bound = inc_value
    incumbent.root_bound = root_bound
    if collect:
        limit = keep_limit(inc_value)
        incumbent.alternatives = [cfg for cfg, v in found.items() if v <= limit]
    return incumbent


def enumerate_oracle(model: LinearModel, objective_index: int = 0) -> MilpResult:
    """Try every binary assignment, solving each LP exactly over the rationals."""
    int_ids = list(model.integral_ids)
    if len(int_ids) > ORACLE_MAX_BINARIES:
        raise OracleTooLarge(f"{len(int_ids)} binaries exceed the oracle limit of {ORACLE_MAX_BINARIES}")
    form = model.dense
    lp = RationalSimplex(form)
    cost = form.costs[objective_index]
    const = float(form.cost_constants[objective_index])
    best = None
    best_values = None
    count = 0
    for assignment in itertools.product((0.0, 1.0), repeat=len(int_ids)):
        count += 1
        lower, upper = form.lower.copy(), form.upper.copy()
        lower[int_ids] = upper[int_ids] = assignment
        res = lp.solve(cost, lower, upper)
        if res.status is LpStatus.UNBOUNDED:
            raise ValueError("LP with fixed binaries is unbounded")
        if res.optimal and (best is None or res.objective_value < best):
            best, best_values = res.objective_value, res.values
    if best is None:
        return MilpResult(MilpStatus.INFEASIBLE, nodes_explored=count, objective_index=objective_index,
                          model=model)
    value = float(best) + const
    return MilpResult(
        MilpStatus.OPTIMAL,
        value,
        np.array([float(v) for v in best_values]),
        nodes_explored=count,
        bound=value,
        objective_index=objective_index,
        model=model,
    )
