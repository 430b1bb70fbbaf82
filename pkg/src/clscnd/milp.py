"""Solver-agnostic linear model and the translator from an ``Instance``.

Variables are addressed by id (their position in ``LinearModel.variables``)
and by a bracketed semantic name such as ``"X[2][5][1]"``.  Objectives are
kept as separate expressions so callers can add rows or slack terms without
rebuilding the network part.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import ARCS, FACILITIES, OBJECTIVE_NAMES, Instance, Solution

COEF_DROP = 1e-15
SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    lower: float = 0.0
    upper: float = math.inf
    integral: bool = False

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper) or self.lower > self.upper:
            raise ValueError(f"bad bounds for {self.name}: [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class LinearExpr:
    terms: tuple[tuple[int, float], ...] = ()
    constant: float = 0.0

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], constant: float = 0.0) -> "LinearExpr":
        acc: dict[int, float] = {}
        for vid, coef in pairs:
            acc[vid] = acc.get(vid, 0.0) + float(coef)
        for coef in acc.values():
            if not math.isfinite(coef):
                raise ValueError("expression coefficients must be finite")
        terms = tuple(sorted((v, c) for v, c in acc.items() if abs(c) >= COEF_DROP))
        return cls(terms, float(constant))

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        return LinearExpr.from_pairs(self.terms + other.terms, self.constant + other.constant)

    def scaled(self, factor: float) -> "LinearExpr":
        return LinearExpr.from_pairs(((v, c * factor) for v, c in self.terms), self.constant * factor)

    def coefficient(self, vid: int) -> float:
        for v, c in self.terms:
            if v == vid:
                return c
        return 0.0

    def evaluate(self, values: Sequence[float]) -> float:
        return self.constant + math.fsum(c * values[v] for v, c in self.terms)

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for v, c in self.terms:
            out[v] = c
        return out


@dataclass(frozen=True)
class Constraint:
    expr: LinearExpr
    sense: str
    rhs: float
    tag: int | str

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        if not math.isfinite(self.rhs):
            raise ValueError("constraint rhs must be finite")

    def residual(self, values: Sequence[float]) -> float:
        """Amount by which the row is violated (0 when satisfied)."""
        lhs = self.expr.evaluate(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class DenseForm:
    """Row-wise dense arrays consumed by the simplex code."""

    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    costs: np.ndarray      # one row per objective
    cost_constants: np.ndarray
    integral: np.ndarray   # bool mask


@dataclass(frozen=True)
class LinearModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objectives: tuple[LinearExpr, ...]
    objective_names: tuple[str, ...] = ()
    instance: Instance | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.variables)
        for idx, var in enumerate(self.variables):
            if var.id != idx:
                raise ValueError("variable ids must equal their positions")
        for expr in itertools.chain((c.expr for c in self.constraints), self.objectives):
            for vid, _ in expr.terms:
                if not 0 <= vid < n:
                    raise ValueError(f"expression references unknown variable id {vid}")
        if not self.objective_names:
            object.__setattr__(
                self, "objective_names", tuple(f"obj{k}" for k in range(len(self.objectives)))
            )

    @cached_property
    def var_index(self) -> dict[str, int]:
        return {v.name: v.id for v in self.variables}

    @cached_property
    def integral_ids(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.variables if v.integral)

    @cached_property
    def dense(self) -> DenseForm:
        n = len(self.variables)
        A = np.zeros((len(self.constraints), n))
        for row, con in enumerate(self.constraints):
            for vid, coef in con.expr.terms:
                A[row, vid] = coef
        b = np.array([c.rhs - c.expr.constant for c in self.constraints], dtype=float)
        costs = np.array([o.dense(n) for o in self.objectives]).reshape(len(self.objectives), n)
        for arr in (A, b, costs):
            arr.setflags(write=False)
        return DenseForm(
            A=A,
            senses=tuple(c.sense for c in self.constraints),
            b=b,
            lower=np.array([v.lower for v in self.variables]),
            upper=np.array([v.upper for v in self.variables]),
            costs=costs,
            cost_constants=np.array([o.constant for o in self.objectives]),
            integral=np.array([v.integral for v in self.variables], dtype=bool),
        )

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def objective_values(self, values: Sequence[float]) -> tuple[float, ...]:
        return tuple(o.evaluate(values) for o in self.objectives)

    def max_residual(self, values: Sequence[float]) -> float:
        return max((c.residual(values) for c in self.constraints), default=0.0)

    # derived copies ---------------------------------------------------------

    def with_bounds(self, bounds: Mapping[int, tuple[float, float]]) -> "LinearModel":
        variables = list(self.variables)
        for vid, (lo, hi) in bounds.items():
            variables[vid] = dataclasses.replace(variables[vid], lower=float(lo), upper=float(hi))
        return dataclasses.replace(self, variables=tuple(variables))

    def with_variables(self, specs: Iterable[tuple[str, float, float, bool]]) -> "LinearModel":
        variables = list(self.variables)
        for name, lo, hi, integral in specs:
            variables.append(Variable(len(variables), name, lo, hi, integral))
        return dataclasses.replace(self, variables=tuple(variables))

    def with_constraints(self, extra: Iterable[Constraint]) -> "LinearModel":
        return dataclasses.replace(self, constraints=self.constraints + tuple(extra))

    def with_objectives(self, objectives: Sequence[LinearExpr], names: Sequence[str] = ()) -> "LinearModel":
        return dataclasses.replace(self, objectives=tuple(objectives), objective_names=tuple(names))

    def relax_integrality(self) -> "LinearModel":
        return dataclasses.replace(
            self, variables=tuple(dataclasses.replace(v, integral=False) for v in self.variables)
        )


def _index_names(prefix: str, shape: tuple[int, ...]) -> list[str]:
    return [prefix + "".join(f"[{n}]" for n in idx) for idx in itertools.product(*map(range, shape))]


def build_model(inst: Instance) -> LinearModel:
    """Translate an instance into the tri-objective MILP.

    Rows appear family by family in the order (1)..(12) and carry the
    family number as their tag; (13) and (14) are variable bounds.
    """
    sz = inst.sizes
    variables: list[Variable] = []
    ids: dict[str, np.ndarray] = {}

    def add_block(prefix, shape, lower, upper, integral):
        start = len(variables)
        for name in _index_names(prefix, shape):
            variables.append(Variable(len(variables), name, lower, upper, integral))
        ids[prefix] = np.arange(start, len(variables)).reshape(shape)

    for code in FACILITIES:
        add_block(code, (sz.facility_count(code),), 0.0, 1.0, True)
    for a in ARCS:
        add_block(a.flow, sz.arc_shape(a), 0.0, math.inf, False)

    def objective(fixed, transport):
        pairs = []
        for code in FACILITIES:
            pairs += zip(ids[code].ravel(), fixed(code).ravel())
        for a in ARCS:
            pairs += zip(ids[a.flow].ravel(), transport(a.code).ravel())
        return LinearExpr.from_pairs((int(v), float(c)) for v, c in pairs)

    objectives = (
        objective(lambda c: inst.fixed_cost[c], lambda a: inst.transport_cost[a]),
        objective(lambda c: inst.fixed_emission[c], lambda a: inst.transport_emission[a]),
        objective(inst.facility_social, inst.arc_social),
    )

    X, Y, Z = ids["X"], ids["Y"], ids["Z"]
    RM, RC, DS = ids["RM"], ids["RC"], ids["DS"]
    cap = inst.capacity
    rows: list[Constraint] = []

    def row(tag, parts, sense, rhs):
        pairs = []
        for block, coef in parts:
            pairs += ((int(v), coef) for v in np.ravel(block))
        rows.append(Constraint(LinearExpr.from_pairs(pairs), sense, float(rhs), tag))

    K, J, I = sz.customers, sz.dist_centers, sz.plants
    for k in range(K):
        row(1, [(Y[:, k, :], 1.0)], ">=", inst.demand[k])
    for j in range(J):
        row(2, [(X[:, j, :], 1.0), (Y[j], -1.0)], ">=", 0.0)
    for i in range(I):
        row(3, [(X[i], 1.0), (ids["P"][i], -cap["CPF"][i])], "<=", 0.0)
    for j in range(J):
        row(4, [(Y[j], 1.0), (ids["W"][j], -cap["CWF"][j])], "<=", 0.0)
    for k in range(K):
        row(5, [(Z[k], 1.0)], ">=", inst.alpha * inst.demand[k])
    for j in range(J):
        row(6, [(Z[:, j, :], 1.0), (ids["W"][j], -cap["CWR"][j])], "<=", 0.0)
    for j in range(J):
        row(7, [(RM[j], 1.0), (Z[:, j, :], -inst.beta)], ">=", 0.0)
    for i in range(I):
        row(8, [(RM[:, i, :], 1.0), (ids["P"][i], -cap["CPR"][i])], "<=", 0.0)
    for j in range(J):
        row(9, [(RC[j], 1.0), (Z[:, j, :], -inst.delta)], ">=", 0.0)
    for r in range(sz.recycles):
        row(10, [(RC[:, r, :], 1.0), (ids["C"][r], -cap["CRC"][r])], "<=", 0.0)
    for j in range(J):
        row(11, [(DS[j], 1.0), (Z[:, j, :], -inst.disposal_fraction)], ">=", 0.0)
    for s in range(sz.disposals):
        row(12, [(DS[:, s, :], 1.0), (ids["D"][s], -cap["CDS"][s])], "<=", 0.0)

    return LinearModel(tuple(variables), tuple(rows), objectives, OBJECTIVE_NAMES, inst)


def expected_counts(sizes) -> tuple[int, int, int]:
    """(binaries, continuous variables, rows) implied by the echelon sizes."""
    I, J, K, R, S, T = sizes.tuple()
    binaries = I + J + R + S
    continuous = T * (I * J + J * K + K * J + J * I + J * R + J * S)
    rows = K + J + I + J + K + J + J + I + J + R + J + S
    return binaries, continuous, rows


def fix_binaries(model: LinearModel, assignment: Sequence[int]) -> LinearModel:
    """Pin every integral variable (in id order) to the given 0/1 value."""
    ids = model.integral_ids
    if len(assignment) != len(ids):
        raise ValueError(f"assignment has {len(assignment)} entries, model has {len(ids)} integral variables")
    bounds = {}
    for vid, value in zip(ids, assignment):
        if value not in (0, 1):
            raise ValueError(f"binary assignment values must be 0 or 1, got {value!r}")
        bounds[vid] = (float(value), float(value))
    return model.with_bounds(bounds)


def solution_from_values(model: LinearModel, values: Sequence[float], inst: Instance | None = None) -> Solution:
    """Map a model-space vector back onto the network decision variables."""
    inst = inst or model.instance
    if inst is None:
        raise ValueError("model carries no instance; pass one explicitly")
    vals = np.asarray(values, dtype=float)
    idx = model.var_index
    sz = inst.sizes
    opened = {}
    for code in FACILITIES:
        n = sz.facility_count(code)
        opened[code] = np.rint([vals[idx[f"{code}[{q}]"]] for q in range(n)]).astype(np.int8)
    flows = {}
    for a in ARCS:
        shape = sz.arc_shape(a)
        start = idx[a.flow + "[0][0][0]"]
        block = vals[start:start + int(np.prod(shape))].reshape(shape)
        flows[a.flow] = np.where(block < 0.0, 0.0, block)
    return Solution(opened, flows)


def values_from_solution(model: LinearModel, sol: Solution) -> np.ndarray:
    vals = np.zeros(model.n_vars)
    idx = model.var_index
    for code in FACILITIES:
        for q, v in enumerate(sol.open[code]):
            vals[idx[f"{code}[{q}]"]] = float(v)
    for a in ARCS:
        block = sol.flow[a.flow]
        start = idx[a.flow + "[0][0][0]"]
        vals[start:start + block.size] = block.ravel()
    return vals


def _fmt(x: float) -> str:
    return repr(float(x))


def _lp_expr(expr: LinearExpr, names) -> str:
    if not expr.terms:
        return "0 " + names[0] if names else "0"
    parts = []
    for vid, coef in expr.terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {names[vid]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp_text(model: LinearModel, objective: int = 0) -> str:
    """Render the model in CPLEX-style LP text, one row per line."""
    names = [v.name for v in model.variables]
    counts: dict = {}
    lines = ["\\ objective: " + model.objective_names[objective], "Minimize"]
    obj = model.objectives[objective]
    lines.append(" obj: " + _lp_expr(obj, names))
    if obj.constant:
        lines.append(f"\\ objective constant {_fmt(obj.constant)}")
    lines.append("Subject To")
    for con in model.constraints:
        n = counts.get(con.tag, 0)
        counts[con.tag] = n + 1
        label = f"c{con.tag}_{n}" if isinstance(con.tag, int) else f"{con.tag}_{n}"
        rhs = con.rhs - con.expr.constant
        lines.append(f" {label}: {_lp_expr(con.expr, names)} {con.sense} {_fmt(rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        lo = "-inf" if v.lower == -math.inf else _fmt(v.lower)
        hi = "+inf" if v.upper == math.inf else _fmt(v.upper)
        if v.lower == v.upper:
            lines.append(f" {v.name} = {lo}")
        else:
            lines.append(f" {lo} <= {v.name} <= {hi}")
    ints = [v.name for v in model.variables if v.integral]
    if ints:
        lines.append("General")
        lines.extend(" " + n for n in ints)
    lines.append("End")
    return "\n".join(lines) + "\n"
