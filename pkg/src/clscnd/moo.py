"""Multi-objective layer: payoff table, ranges, grid and augmented ε-constraint.

One objective is kept (economic by default) and the other two become
constraints ``f_i <= e_i`` on an evenly spaced grid over their payoff ranges.

The augmented objective ``f_kept - epsilon * sum(s_i / r_i)`` adds a term
that is orders of magnitude below float resolution at realistic scales
(about 1e-10 of the economic value for epsilon = 1e-4).  It is therefore
solved as its epsilon -> 0 limit, lexicographically and exactly:

1. branch-and-bound minimises ``f_kept`` under the e-bounds and collects
   every binary assignment whose optimum lies within the band where the
   augmentation could still change the answer;
2. for each collected assignment an LP minimises a strictly positive
   weighted sum of all objectives with ``f_kept`` held inside that band.

The minimiser of step 2 is efficient: anything dominating it would satisfy
the same bounds with a lower weighted sum.  The displayed-sign variant
``f_kept + epsilon * sum(s_i / r_i)`` with ``f_i - s_i = e_i`` is kept as a
compatibility mode and solved directly.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bnb import (
    DEFAULT_NODE_LIMIT,
    ORACLE_MAX_BINARIES,
    MilpStatus,
    NodeLimitReached,
    OracleTooLarge,
    enumerate_oracle,
    solve_single_objective,
)
from .domain import OBJECTIVE_NAMES, ObjectiveTriple, Solution, evaluate_objectives
from .milp import Constraint, LinearExpr, LinearModel, solution_from_values
from .simplex import FloatSimplex, RationalSimplex

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-4
DUPLICATE_TOL = 1e-9
DOMINANCE_TOL = 1e-6
SHORT_NAMES = ("econ", "env", "soc")
SIGNS = ("standard", "literal")


class PayoffInfeasible(RuntimeError):
    """A single-objective trial has no feasible solution."""


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PayoffTable:
    """Row k holds every objective's value at the optimum of trial k."""

    values: tuple[tuple[float, ...], ...]
    solutions: tuple[Solution | None, ...] = ()
    names: tuple[str, ...] = OBJECTIVE_NAMES
    binaries: tuple[tuple[int, ...], ...] = ()

    def column(self, i: int) -> tuple[float, ...]:
        return tuple(row[i] for row in self.values)

    def to_dict(self) -> dict:
        rows = []
        for k, row in enumerate(self.values):
            entry = {"trial": k + 1, "minimized": self.names[k], "values": dict(zip(self.names, row))}
            if self.solutions and self.solutions[k] is not None:
                entry["open"] = self.solutions[k].open_bits()
            rows.append(entry)
        return {"objectives": list(self.names), "rows": rows}


@dataclass(frozen=True)
class ObjectiveRanges:
    indices: tuple[int, ...]
    f_min: tuple[float, ...]
    f_max: tuple[float, ...]

    @property
    def r(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.f_min, self.f_max))

    def of(self, index: int) -> tuple[float, float, float]:
        """(f_min, f_max, r) of one objective."""
        pos = self.indices.index(index)
        return self.f_min[pos], self.f_max[pos], self.r[pos]

    def subset(self, indices: Sequence[int]) -> "ObjectiveRanges":
        picked = [self.of(i) for i in indices]
        return ObjectiveRanges(tuple(indices), tuple(p[0] for p in picked), tuple(p[1] for p in picked))

    def to_dict(self, names=OBJECTIVE_NAMES) -> dict:
        return {
            names[i]: {"min": lo, "max": hi, "range": r}
            for i, lo, hi, r in zip(self.indices, self.f_min, self.f_max, self.r)
        }


@dataclass(frozen=True)
class GridSpec:
    m: int
    constrained: tuple[int, ...]
    epsilon: float
    points: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("grid needs at least 2 cuts per objective")
        if not 1e-6 <= self.epsilon <= 1e-3:
            raise ValueError(f"epsilon must lie in [1e-6, 1e-3], got {self.epsilon}")

    @property
    def p(self) -> int:
        return len(self.constrained)


@dataclass
class SubproblemResult:
    status: str                                # "optimal" | "infeasible" | "node-limit"
    e: tuple[float, ...]
    triple: ObjectiveTriple | None = None
    solution: Solution | None = None
    values: np.ndarray | None = None           # original model space
    binaries: tuple[int, ...] = ()
    nodes: int = 0
    candidates: int = 0                        # tied assignments compared in the second stage


@dataclass
class Cell:
    index: int
    e: tuple[float, ...]
    status: str                                # optimal | infeasible | skipped-duplicate | node-limit
    triple: ObjectiveTriple | None = None
    solution: Solution | None = None
    nodes: int = 0
    in_front: bool = False


@dataclass(frozen=True)
class FrontMember:
    cell: int
    e: tuple[float, ...]
    triple: ObjectiveTriple
    solution: Solution | None


@dataclass
class ParetoFront:
    members: list[FrontMember]
    payoff: PayoffTable
    ranges: ObjectiveRanges
    grid: GridSpec
    cells: list[Cell]
    kept: int = 0
    sign: str = "standard"
    partial: bool = False

    def triples(self) -> list[ObjectiveTriple]:
        return [mem.triple for mem in self.members]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.cells:
            out[c.status] = out.get(c.status, 0) + 1
        out["front"] = len(self.members)
        return out

    def to_report(self) -> dict:
        names = OBJECTIVE_NAMES
        return {
            "kept": names[self.kept],
            "constrained": [names[i] for i in self.grid.constrained],
            "sign": self.sign,
            "partial": self.partial,
            "payoff": self.payoff.to_dict(),
            "ranges": self.ranges.to_dict(),
            "grid": {
                "m": self.grid.m,
                "p": self.grid.p,
                "epsilon": self.grid.epsilon,
                "subproblems": len(self.grid.points),
            },
            "cells": [
                {
                    "index": c.index,
                    "e": dict(zip((names[i] for i in self.grid.constrained), c.e)),
                    "status": c.status,
                    "objectives": None if c.triple is None else dict(zip(names, c.triple.as_tuple())),
                    "open": None if c.solution is None else c.solution.open_bits(),
                    "nodes": c.nodes,
                    "in_front": c.in_front,
                }
                for c in self.cells
            ],
            "counts": self.counts(),
            "front": [
                {
                    "cell": mem.cell,
                    "objectives": dict(zip(names, mem.triple.as_tuple())),
                    "open": None if mem.solution is None else mem.solution.open_bits(),
                }
                for mem in self.members
            ],
        }

    def to_csv(self) -> str:
        e_cols = [f"e_{SHORT_NAMES[i]}" for i in self.grid.constrained]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*OBJECTIVE_NAMES, *e_cols, "open_P", "open_W", "open_C", "open_D"])
        for mem in self.members:
            bits = mem.solution.open_bits() if mem.solution is not None else {}
            writer.writerow([
                *(repr(float(v)) for v in mem.triple.as_tuple()),
                *(repr(float(v)) for v in mem.e),
                *(bits.get(code, "") for code in ("P", "W", "C", "D")),
            ])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _band(value: float, floor: float = 0.0) -> float:
    return max(floor, 1e-9 * max(1.0, abs(value)))


def _objective_row(expr: LinearExpr, bound: float, tag: str) -> Constraint:
    return Constraint(LinearExpr(expr.terms, 0.0), "<=", bound - expr.constant, tag)


def _triple(model: LinearModel, values: np.ndarray, solution: Solution | None) -> ObjectiveTriple:
    if solution is not None and model.instance is not None:
        return evaluate_objectives(model.instance, solution)
    return ObjectiveTriple(*model.objective_values(values)[:3])


def _solution(model: LinearModel, values) -> Solution | None:
    if model.instance is None:
        return None
    sol = solution_from_values(model, values)
    return sol.with_objectives(evaluate_objectives(model.instance, sol))


def _lexicographic(model: LinearModel, configs, levels, arithmetic: str = "float"):
    """Lexicographic LP over fixed binary assignments.

    ``levels`` is a sequence of ``(expr, band)``.  Each level minimises its
    expression over the surviving assignments, then adds the row
    ``expr <= best + band`` before the next level.  Returns the winning
    assignment (first on ties) and its final LP values, or ``(None, None)``
    when no assignment is feasible.
    """
    int_ids = list(model.integral_ids)
    survivors = list(configs)
    rows: list[Constraint] = []
    final = {}
    for depth, (expr, band) in enumerate(levels):
        level_model = model.with_constraints(rows).with_objectives([expr])
        form = level_model.dense
        solver = FloatSimplex(form) if arithmetic == "float" else RationalSimplex(form)
        cost = form.costs[0]
        results = {}
        for cfg in survivors:
            lower, upper = form.lower.copy(), form.upper.copy()
            lower[int_ids] = upper[int_ids] = cfg
            res = solver.solve(cost, lower, upper)
            if res.optimal:
                results[cfg] = res
        if not results:
            return None, None
        value = {cfg: res.objective_value for cfg, res in results.items()}
        best = min(value.values())
        if arithmetic == "float":
            limit = best + _band(float(best) + expr.constant, band)
            rhs = limit
        else:
            limit = best
            rhs = float(best)
            if rhs < best:   # never let rounding cut off the exact optimum
                rhs = math.nextafter(rhs, math.inf)
        survivors = [cfg for cfg in survivors if cfg in value and value[cfg] <= limit]
        final = results
        rows.append(Constraint(LinearExpr(expr.terms, 0.0), "<=", rhs, f"lex{depth}"))
    win = survivors[0]
    res = final[win]
    values = res.values if arithmetic == "float" else res.float_values()
    values = np.array(values, dtype=float)
    values[int_ids] = win
    return win, values


def _all_configs(model: LinearModel):
    return list(itertools.product((0, 1), repeat=len(model.integral_ids)))


# ---------------------------------------------------------------------------
# payoff table and ranges
# ---------------------------------------------------------------------------


def payoff_table(
    model: LinearModel,
    *,
    lexicographic: bool = True,
    solver: str = "bnb",
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> PayoffTable:
    """Minimise each objective in turn and tabulate all objectives at each optimum.

    With ``lexicographic`` on, trial k then minimises the remaining
    objectives in index order while holding the earlier ones at their optima.
    ``solver="oracle"`` does the same by exhaustive enumeration with exact
    rational LPs (small models only).
    """
    k_obj = len(model.objectives)
    rows, sols, bins = [], [], []
    for k in range(k_obj):
        order = [k] + [i for i in range(k_obj) if i != k] if lexicographic else [k]
        levels = [(model.objectives[i], 0.0) for i in order]
        if solver == "oracle":
            if len(model.integral_ids) > ORACLE_MAX_BINARIES:
                raise OracleTooLarge(f"{len(model.integral_ids)} binaries exceed the oracle limit")
            cfg, values = _lexicographic(model, _all_configs(model), levels, "rational")
        elif solver == "bnb":
            res = solve_single_objective(model, k, node_limit=node_limit,
                                         tie_band=0.0 if lexicographic else None)
            if res.status is not MilpStatus.OPTIMAL:
                cfg, values = None, None
            elif lexicographic:
                cfg, values = _lexicographic(model, res.alternatives, levels)
            else:
                cfg, values = res.binaries(), res.values
        else:
            raise ValueError(f"unknown solver {solver!r}")
        if cfg is None:
            raise PayoffInfeasible(f"trial {k + 1} ({model.objective_names[k]}) is infeasible")
        sol = _solution(model, values)
        triple = _triple(model, values, sol) if k_obj == 3 else None
        rows.append(triple.as_tuple() if triple else model.objective_values(values))
        sols.append(sol)
        bins.append(tuple(int(v) for v in cfg))
    names = OBJECTIVE_NAMES if k_obj == 3 else tuple(model.objective_names)
    return PayoffTable(tuple(tuple(float(v) for v in r) for r in rows), tuple(sols), names, tuple(bins))


def objective_ranges(table: PayoffTable, constrained: Sequence[int] | None = None) -> ObjectiveRanges:
    """Per objective, the extremes of its payoff column."""
    idx = tuple(range(len(table.values[0]))) if constrained is None else tuple(constrained)
    cols = [table.column(i) for i in idx]
    return ObjectiveRanges(idx, tuple(min(c) for c in cols), tuple(max(c) for c in cols))


def grid_levels(f_min: float, f_max: float, m: int, n_steps: int | None = None) -> list[float]:
    """``m`` evenly spaced levels from f_min to f_max inclusive.

    ``n_steps`` selects the alternative convention with ``n_steps + 1``
    levels at spacing ``r / n_steps`` (the displayed-formula reading).
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    r = f_max - f_min
    if n_steps is None:
        return [f_max if n == m - 1 else f_min + n * r / (m - 1) for n in range(m)]
    return [f_max if n == n_steps else f_min + n * r / n_steps for n in range(n_steps + 1)]


def grid_points(ranges: ObjectiveRanges, m: int, n_steps: int | None = None) -> list[tuple[float, ...]]:
    """Cartesian product of per-objective levels, first objective varying slowest."""
    per = [grid_levels(lo, hi, m, n_steps) for lo, hi in zip(ranges.f_min, ranges.f_max)]
    return [tuple(p) for p in itertools.product(*per)]


# ---------------------------------------------------------------------------
# augmented subproblem
# ---------------------------------------------------------------------------


def augmented_model(
    model: LinearModel,
    e: Sequence[float],
    epsilon: float,
    ranges: ObjectiveRanges,
    *,
    kept: int = 0,
    sign: str = "standard",
) -> LinearModel:
    """Add slack variables and e-rows; append the augmented objective.

    Standard sign: ``f_i + s_i = e_i`` and objective ``f_kept - eps * sum s_i/r_i``.
    Literal sign: ``f_i - s_i = e_i`` and objective ``f_kept + eps * sum s_i/r_i``.
    Objectives 0..2 are the originals; index 3 is the augmented one.
    """
    if sign not in SIGNS:
        raise ValueError(f"sign must be one of {SIGNS}")
    constrained = [i for i in range(len(model.objectives)) if i != kept]
    if len(e) != len(constrained):
        raise ValueError(f"e-vector needs {len(constrained)} entries")
    first = model.n_vars
    aug = model.with_variables((f"s[{SHORT_NAMES[i]}]", 0.0, math.inf, False) for i in constrained)
    rows = []
    slack_sign = 1.0 if sign == "standard" else -1.0
    terms = list(model.objectives[kept].terms)
    for pos, (i, level) in enumerate(zip(constrained, e)):
        expr = model.objectives[i]
        sid = first + pos
        rows.append(Constraint(LinearExpr.from_pairs([*expr.terms, (sid, slack_sign)]), "=",
                               float(level) - expr.constant, f"e_{SHORT_NAMES[i]}"))
        r = ranges.of(i)[2]
        if r > 0:
            terms.append((sid, -slack_sign * epsilon / r))
    objective = LinearExpr.from_pairs(terms, model.objectives[kept].constant)
    names = tuple(model.objective_names) + ("augmented",)
    return aug.with_constraints(rows).with_objectives([*model.objectives, objective], names)


def augmented_subproblem(
    model: LinearModel,
    e: Sequence[float],
    epsilon: float,
    ranges: ObjectiveRanges,
    *,
    kept: int = 0,
    sign: str = "standard",
    node_limit: int = DEFAULT_NODE_LIMIT,
    solver: str = "bnb",
) -> SubproblemResult:
    """Solve one grid cell; infeasibility is a normal outcome, not an error.

    ``ranges`` must cover every objective (the kept one included).
    ``solver="oracle"`` enumerates all binary assignments with exact LPs.
    """
    e = tuple(float(v) for v in e)
    aug = augmented_model(model, e, epsilon, ranges, kept=kept, sign=sign)
    constrained = [i for i in range(len(model.objectives)) if i != kept]
    if sign == "standard":
        slack_room = sum((lvl - ranges.of(i)[0]) / ranges.of(i)[2]
                         for i, lvl in zip(constrained, e) if ranges.of(i)[2] > 0)
        band = epsilon * max(slack_room, 0.0)
        weights = {i: 1.0 / ranges.of(i)[2] for i in constrained if ranges.of(i)[2] > 0}
        r_kept = ranges.of(kept)[2]
        weights[kept] = 1.0 / r_kept if r_kept > 0 else 1.0
        second = LinearExpr.from_pairs(
            (vid, w * c) for i, w in weights.items() for vid, c in model.objectives[i].terms
        )
        levels = [(aug.objectives[kept], band), (second, 0.0)]
        if solver == "oracle":
            if len(aug.integral_ids) > ORACLE_MAX_BINARIES:
                raise OracleTooLarge(f"{len(aug.integral_ids)} binaries exceed the oracle limit")
            cfg, values = _lexicographic(aug, _all_configs(aug), levels, "rational")
            nodes, n_cand = 2 ** len(aug.integral_ids), None
        else:
            res = solve_single_objective(aug, kept, node_limit=node_limit, tie_band=band)
            nodes = res.nodes_explored
            if not res.optimal:
                return SubproblemResult("infeasible", e, nodes=nodes)
            n_cand = len(res.alternatives)
            cfg, values = _lexicographic(aug, res.alternatives, levels)
        if cfg is None:
            return SubproblemResult("infeasible", e, nodes=nodes)
    else:
        if solver == "oracle":
            res = enumerate_oracle(aug, 3)
        else:
            res = solve_single_objective(aug, 3, node_limit=node_limit)
        nodes, n_cand = res.nodes_explored, 1
        if not res.optimal:
            return SubproblemResult("infeasible", e, nodes=nodes)
        cfg, values = res.binaries(), np.asarray(res.values, dtype=float)
    values = np.asarray(values[: model.n_vars], dtype=float)
    sol = _solution(model, values)
    return SubproblemResult(
        "optimal", e, _triple(model, values, sol), sol, values,
        tuple(int(v) for v in cfg), nodes, n_cand or 1,
    )


# ---------------------------------------------------------------------------
# filtering
# ---------------------------------------------------------------------------


def dominates(a: Sequence[float], b: Sequence[float], tol: float = DOMINANCE_TOL) -> bool:
    """``a`` is no worse anywhere and better by more than ``tol`` somewhere."""
    return all(x <= y + tol for x, y in zip(a, b)) and any(x < y - tol for x, y in zip(a, b))


def _same(a, b, tol):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def nondominated_indices(points: Sequence[Sequence[float]], tol: float = DOMINANCE_TOL) -> list[int]:
    """Indices of points no other point dominates; of equal points the first survives."""
    pts = [tuple(float(v) for v in p) for p in points]
    keep = []
    for j, b in enumerate(pts):
        beaten = False
        for i, a in enumerate(pts):
            if i == j:
                continue
            if dominates(a, b, tol) or (i < j and _same(a, b, tol)):
                beaten = True
                break
        if not beaten:
            keep.append(j)
    return keep


def dominance_filter(points: Sequence, tol: float = DOMINANCE_TOL) -> list:
    """Non-dominated subset of ``points`` (minimisation), in input order."""
    seqs = [p.as_tuple() if isinstance(p, ObjectiveTriple) else p for p in points]
    return [points[i] for i in nondominated_indices(seqs, tol)]


# ---------------------------------------------------------------------------
# the front
# ---------------------------------------------------------------------------


def _cell_task(args):
    model, e, epsilon, ranges, kept, sign, node_limit = args
    try:
        return augmented_subproblem(model, e, epsilon, ranges, kept=kept, sign=sign, node_limit=node_limit)
    except NodeLimitReached as exc:
        log.warning("grid point %s: %s", e, exc)
        return SubproblemResult("node-limit", tuple(e), nodes=exc.nodes)


def pareto_front(
    model: LinearModel,
    m: int,
    epsilon: float = DEFAULT_EPSILON,
    *,
    kept: int = 0,
    sign: str = "standard",
    jobs: int = 1,
    node_limit: int = DEFAULT_NODE_LIMIT,
    n_steps: int | None = None,
    payoff: PayoffTable | None = None,
    progress=None,
) -> ParetoFront:
    """Payoff table, ranges, grid, one subproblem per grid point, then filtering.

    Cells run in parallel when ``jobs > 1``; results are merged in grid order
    so the output does not depend on completion order.
    """
    if len(model.objectives) != 3:
        raise ValueError("pareto_front expects a three-objective model")
    payoff = payoff or payoff_table(model, node_limit=node_limit)
    ranges = objective_ranges(payoff)
    constrained = tuple(i for i in range(3) if i != kept)
    points = grid_points(ranges.subset(constrained), m, n_steps)
    grid = GridSpec(m, constrained, epsilon, tuple(points))
    tasks = [(model, e, epsilon, ranges, kept, sign, node_limit) for e in points]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = []
            for idx, res in enumerate(pool.map(_cell_task, tasks)):
                results.append(res)
                if progress:
                    progress(idx, res)
    else:
        results = []
        for idx, task in enumerate(tasks):
            res = _cell_task(task)
            results.append(res)
            if progress:
                progress(idx, res)

    cells: list[Cell] = []
    kept_triples: list[tuple[float, ...]] = []
    for idx, res in enumerate(results):
        status = res.status
        if status == "optimal":
            tri = res.triple.as_tuple()
            if any(_same(tri, t, DUPLICATE_TOL) for t in kept_triples):
                status = "skipped-duplicate"
            else:
                kept_triples.append(tri)
        cells.append(Cell(idx, res.e, status, res.triple, res.solution, res.nodes))

    distinct = [c for c in cells if c.status == "optimal"]
    survivors = nondominated_indices([c.triple.as_tuple() for c in distinct])
    members = []
    for pos in survivors:
        c = distinct[pos]
        c.in_front = True
        members.append(FrontMember(c.index, c.e, c.triple, c.solution))
    partial = any(c.status == "node-limit" for c in cells)
    return ParetoFront(members, payoff, ranges, grid, cells, kept, sign, partial)


def efficiency_gap(
    model: LinearModel,
    triple: Sequence[float],
    ranges: ObjectiveRanges,
    tol: float = 1e-7,
) -> float:
    """How far an exact search can push the normalised sum below ``triple``.

    Minimises ``sum f_i / r_i`` subject to ``f <= triple`` by enumeration
    with exact LPs.  A gap above ``tol`` (relative) means some feasible
    solution dominates ``triple``; zero means it is efficient.
    """
    weights = [1.0 / r if r > 0 else 1.0 for r in (ranges.of(i)[2] for i in range(3))]
    rows = [_objective_row(model.objectives[i], float(triple[i]) + 1e-9 * max(1.0, abs(triple[i])), f"z{i}")
            for i in range(3)]
    combo = LinearExpr.from_pairs(
        (vid, w * c) for i, w in enumerate(weights) for vid, c in model.objectives[i].terms
    )
    const = sum(w * model.objectives[i].constant for i, w in enumerate(weights))
    bounded = model.with_constraints(rows).with_objectives([combo])
    res = enumerate_oracle(bounded, 0)
    if not res.optimal:
        return 0.0
    target = sum(w * float(t) for w, t in zip(weights, triple))
    gap = target - (res.objective + const)
    return max(0.0, gap / max(1.0, abs(target)) - tol)


def is_efficient(model: LinearModel, triple: Sequence[float], ranges: ObjectiveRanges,
                 tol: float = 1e-7) -> bool:
    return efficiency_gap(model, triple, ranges, tol) == 0.0
