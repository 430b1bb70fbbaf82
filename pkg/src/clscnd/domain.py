"""Network instance, solutions, objective evaluation and the constraint auditor.

Index conventions (zero-based everywhere):

    i  plants (manufacturing / remanufacturing)     binary P[i]
    j  distribution / inspection centres           binary W[j]
    k  customers
    r  recycling centres                           binary C[r]
    s  disposal centres                            binary D[s]
    t  transport modes

Arc parameters are keyed by arc code and flows by flow name:

    flow  arc  shape       direction
    X     PW   (I, J, T)   plant -> distribution centre
    Y     WC   (J, K, T)   distribution centre -> customer
    Z     CW   (K, J, T)   customer -> inspection centre
    RM    WP   (J, I, T)   inspection centre -> remanufacturing
    RC    WR   (J, R, T)   inspection centre -> recycling
    DS    WD   (J, S, T)   inspection centre -> disposal

Risk data carries a trailing axis of length four ordered
(accident, psychosocial, physical, mental overload), matching ``theta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

RISK_CATEGORIES = ("accident", "psychosocial", "physical", "mental_overload")

# facility code -> (size attribute, index letter)
FACILITIES = {
    "P": ("plants", "i"),
    "W": ("dist_centers", "j"),
    "C": ("recycles", "r"),
    "D": ("disposals", "s"),
}


@dataclass(frozen=True)
class Arc:
    flow: str
    code: str
    src: str
    dst: str


ARCS = (
    Arc("X", "PW", "plants", "dist_centers"),
    Arc("Y", "WC", "dist_centers", "customers"),
    Arc("Z", "CW", "customers", "dist_centers"),
    Arc("RM", "WP", "dist_centers", "plants"),
    Arc("RC", "WR", "dist_centers", "recycles"),
    Arc("DS", "WD", "dist_centers", "disposals"),
)
ARC_BY_FLOW = {a.flow: a for a in ARCS}

CAPACITY_KEYS = ("CPF", "CPR", "CWF", "CWR", "CRC", "CDS")
_CAPACITY_SIZE = {
    "CPF": "plants",
    "CPR": "plants",
    "CWF": "dist_centers",
    "CWR": "dist_centers",
    "CRC": "recycles",
    "CDS": "disposals",
}

_LETTER = {
    "plants": "i",
    "dist_centers": "j",
    "customers": "k",
    "recycles": "r",
    "disposals": "s",
}


class ShapeError(ValueError):
    """Array dimensions disagree with the echelon sizes."""


class InstanceError(ValueError):
    """Instance data violates a domain invariant."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EchelonSizes:
    plants: int
    dist_centers: int
    customers: int
    recycles: int
    disposals: int
    modes: int

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if int(value) != value or value < 1:
                raise InstanceError(f"{name} must be an integer >= 1, got {value!r}")

    def as_dict(self) -> dict[str, int]:
        return {
            "plants": self.plants,
            "dist_centers": self.dist_centers,
            "customers": self.customers,
            "recycles": self.recycles,
            "disposals": self.disposals,
            "modes": self.modes,
        }

    def facility_count(self, code: str) -> int:
        return getattr(self, FACILITIES[code][0])

    def arc_shape(self, arc: Arc) -> tuple[int, int, int]:
        return (getattr(self, arc.src), getattr(self, arc.dst), self.modes)

    def tuple(self) -> tuple[int, ...]:
        return tuple(self.as_dict().values())


@dataclass(frozen=True)
class Instance:
    """Full parameterisation of the six-echelon closed-loop network."""

    sizes: EchelonSizes
    demand: np.ndarray
    fixed_cost: Mapping[str, np.ndarray]
    transport_cost: Mapping[str, np.ndarray]
    fixed_emission: Mapping[str, np.ndarray]
    transport_emission: Mapping[str, np.ndarray]
    theta: tuple[float, float, float, float]
    facility_risk: Mapping[str, np.ndarray]
    transport_risk: Mapping[str, np.ndarray]
    capacity: Mapping[str, np.ndarray]
    alpha: float
    beta: float
    delta: float
    mode_names: tuple[str, ...] = ()

    def __post_init__(self):
        sz = self.sizes
        set_ = lambda name, value: object.__setattr__(self, name, value)

        set_("demand", _check(_frozen(self.demand), (sz.customers,), "demand"))
        for family in ("fixed_cost", "fixed_emission"):
            data = getattr(self, family)
            set_(family, {
                code: _check(_frozen(data[code]), (sz.facility_count(code),), f"{family}.{code}")
                for code in FACILITIES
            })
        for family in ("transport_cost", "transport_emission"):
            data = getattr(self, family)
            set_(family, {
                a.code: _check(_frozen(data[a.code]), sz.arc_shape(a), f"{family}.{a.code}")
                for a in ARCS
            })
        set_("facility_risk", {
            code: _check(
                _frozen(self.facility_risk[code]), (sz.facility_count(code), 4), f"facility_risk.{code}"
            )
            for code in FACILITIES
        })
        set_("transport_risk", {
            a.code: _check(
                _frozen(self.transport_risk[a.code]), sz.arc_shape(a) + (4,), f"transport_risk.{a.code}"
            )
            for a in ARCS
        })
        set_("capacity", {
            key: _check(_frozen(self.capacity[key]), (getattr(sz, _CAPACITY_SIZE[key]),), f"capacity.{key}")
            for key in CAPACITY_KEYS
        })
        set_("theta", tuple(float(v) for v in self.theta))
        set_("alpha", float(self.alpha))
        set_("beta", float(self.beta))
        set_("delta", float(self.delta))
        names = tuple(self.mode_names) or tuple(f"mode{t}" for t in range(sz.modes))
        if len(names) != sz.modes:
            raise ShapeError(f"mode_names has {len(names)} entries, expected {sz.modes}")
        set_("mode_names", names)
        self._validate_values()

    def _validate_values(self):
        if len(self.theta) != 4:
            raise ShapeError("theta must have four weights")
        if any(w < 0 for w in self.theta) or abs(sum(self.theta) - 1.0) > 1e-9:
            raise InstanceError(f"risk weights must be nonnegative and sum to 1, got {self.theta}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InstanceError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.beta < 0 or self.delta < 0 or self.beta + self.delta > 1.0 + 1e-12:
            raise InstanceError(f"need beta, delta >= 0 and beta + delta <= 1, got {self.beta}, {self.delta}")
        for name, arr in self.iter_arrays():
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InstanceError(f"{name} must be finite and nonnegative")

    def iter_arrays(self):
        yield "demand", self.demand
        for family in (
            "fixed_cost", "transport_cost", "fixed_emission", "transport_emission",
            "facility_risk", "transport_risk", "capacity",
        ):
            for key, arr in getattr(self, family).items():
                yield f"{family}.{key}", arr

    @property
    def disposal_fraction(self) -> float:
        return 1.0 - self.beta - self.delta

    def facility_social(self, code: str) -> np.ndarray:
        """theta-weighted worker count for opening each facility of one type."""
        return self.facility_risk[code] @ np.asarray(self.theta)

    def arc_social(self, arc_code: str) -> np.ndarray:
        """theta-weighted worker count per product shipped on each arc-mode."""
        return self.transport_risk[arc_code] @ np.asarray(self.theta)


def _check(arr: np.ndarray, shape: tuple, name: str) -> np.ndarray:
    if arr.shape != tuple(shape):
        raise ShapeError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


@dataclass(frozen=True)
class ObjectiveTriple:
    economic: float
    environmental: float
    social: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not math.isfinite(v):
                raise ValueError(f"objective values must be finite, got {self}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.economic, self.environmental, self.social)

    def __getitem__(self, idx: int) -> float:
        return self.as_tuple()[idx]


OBJECTIVE_NAMES = ("economic", "environmental", "social")


@dataclass(frozen=True)
class Solution:
    """Facility-open decisions plus arc-mode flows.

    ``open`` maps facility code to an int8 0/1 vector, ``flow`` maps flow
    name to its (src, dst, mode) tensor.
    """

    open: Mapping[str, np.ndarray]
    flow: Mapping[str, np.ndarray]
    objectives: ObjectiveTriple | None = None

    def __post_init__(self):
        opened = {}
        for code in FACILITIES:
            raw = np.asarray(self.open[code])
            as_int = np.rint(raw).astype(np.int8) if raw.dtype.kind == "f" else raw.astype(np.int8)
            if raw.dtype.kind == "f" and not np.array_equal(as_int, raw):
                raise ValueError(f"open[{code}] must hold exact 0/1 values")
            opened[code] = _frozen(as_int, np.int8)
        object.__setattr__(self, "open", opened)
        object.__setattr__(self, "flow", {a.flow: _frozen(self.flow[a.flow]) for a in ARCS})

    def check_shapes(self, sizes: EchelonSizes) -> None:
        for code in FACILITIES:
            _check(self.open[code], (sizes.facility_count(code),), f"open.{code}")
        for a in ARCS:
            _check(self.flow[a.flow], sizes.arc_shape(a), f"flow.{a.flow}")

    def with_objectives(self, objectives: ObjectiveTriple) -> "Solution":
        return Solution(self.open, self.flow, objectives)

    def open_bits(self) -> dict[str, str]:
        return {code: "".join(str(int(v)) for v in self.open[code]) for code in FACILITIES}


def empty_solution(sizes: EchelonSizes) -> Solution:
    """Nothing open, no flow."""
    return Solution(
        open={code: np.zeros(sizes.facility_count(code), dtype=np.int8) for code in FACILITIES},
        flow={a.flow: np.zeros(sizes.arc_shape(a)) for a in ARCS},
    )


def evaluate_objectives(inst: Instance, sol: Solution) -> ObjectiveTriple:
    sol.check_shapes(inst.sizes)
    econ = env = soc = 0.0
    for code in FACILITIES:
        y = sol.open[code].astype(float)
        econ += float(inst.fixed_cost[code] @ y)
        env += float(inst.fixed_emission[code] @ y)
        soc += float(inst.facility_social(code) @ y)
    for a in ARCS:
        f = sol.flow[a.flow]
        econ += float(np.sum(inst.transport_cost[a.code] * f))
        env += float(np.sum(inst.transport_emission[a.code] * f))
        soc += float(np.sum(inst.arc_social(a.code) * f))
    return ObjectiveTriple(econ, env, soc)


@dataclass(frozen=True)
class Violation:
    constraint: int
    entity: str
    residual: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    def by_constraint(self) -> dict[int, list[Violation]]:
        out: dict[int, list[Violation]] = {}
        for v in self.violations:
            out.setdefault(v.constraint, []).append(v)
        return out

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": [
                {"constraint": v.constraint, "entity": v.entity, "residual": v.residual}
                for v in self.violations
            ],
        }


def flow_balances(inst: Instance, sol: Solution) -> dict[str, np.ndarray]:
    """Aggregated in/out quantities used by constraint families (1)-(12)."""
    X, Y, Z = sol.flow["X"], sol.flow["Y"], sol.flow["Z"]
    RM, RC, DS = sol.flow["RM"], sol.flow["RC"], sol.flow["DS"]
    return {
        "delivered": Y.sum(axis=(0, 2)),      # per customer
        "dc_in": X.sum(axis=(0, 2)),          # per distribution centre
        "dc_out": Y.sum(axis=(1, 2)),
        "plant_out": X.sum(axis=(1, 2)),
        "returned": Z.sum(axis=(1, 2)),       # per customer
        "insp_in": Z.sum(axis=(0, 2)),        # per inspection centre
        "reman_out": RM.sum(axis=(1, 2)),
        "reman_in": RM.sum(axis=(0, 2)),      # per plant
        "recyc_out": RC.sum(axis=(1, 2)),
        "recyc_in": RC.sum(axis=(0, 2)),      # per recycling centre
        "disp_out": DS.sum(axis=(1, 2)),
        "disp_in": DS.sum(axis=(0, 2)),       # per disposal centre
    }


def mode_usage(inst: Instance, sol: Solution, tol: float = 1e-6) -> dict[str, int]:
    """Number of (arc, mode) flow entries above ``tol``, per transport mode."""
    counts = np.zeros(inst.sizes.modes, dtype=int)
    for a in ARCS:
        counts += (sol.flow[a.flow] > tol).sum(axis=(0, 1))
    names = inst.mode_names or tuple(f"mode{t}" for t in range(inst.sizes.modes))
    return {name: int(c) for name, c in zip(names, counts)}


def check_feasibility(inst: Instance, sol: Solution, tol: float = 1e-6) -> FeasibilityReport:
    """Audit a solution against all fourteen constraint families.

    Residuals are the absolute amount by which an inequality is violated;
    anything above ``tol`` is reported.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    sol.check_shapes(inst.sizes)
    b = flow_balances(inst, sol)
    op = {code: sol.open[code].astype(float) for code in FACILITIES}
    cap = inst.capacity
    # (id, letter, lhs - rhs for "<=" rows)
    rows = [
        (1, "k", inst.demand - b["delivered"]),
        (2, "j", b["dc_out"] - b["dc_in"]),
        (3, "i", b["plant_out"] - cap["CPF"] * op["P"]),
        (4, "j", b["dc_out"] - cap["CWF"] * op["W"]),
        (5, "k", inst.alpha * inst.demand - b["returned"]),
        (6, "j", b["insp_in"] - cap["CWR"] * op["W"]),
        (7, "j", inst.beta * b["insp_in"] - b["reman_out"]),
        (8, "i", b["reman_in"] - cap["CPR"] * op["P"]),
        (9, "j", inst.delta * b["insp_in"] - b["recyc_out"]),
        (10, "r", b["recyc_in"] - cap["CRC"] * op["C"]),
        (11, "j", inst.disposal_fraction * b["insp_in"] - b["disp_out"]),
        (12, "s", b["disp_in"] - cap["CDS"] * op["D"]),
    ]
    violations = []
    for cid, letter, excess in rows:
        for idx in np.flatnonzero(~(excess <= tol)):
            res = float(excess[idx]) if np.isfinite(excess[idx]) else math.inf
            violations.append(Violation(cid, f"{letter}={idx}", res))
    for a in ARCS:
        f = sol.flow[a.flow]
        for idx in zip(*np.nonzero(~(f >= -tol))):
            val = f[idx]
            res = float(-val) if np.isfinite(val) else math.inf
            violations.append(Violation(13, a.flow + "".join(f"[{n}]" for n in idx), res))
    for code in FACILITIES:
        for idx, v in enumerate(sol.open[code]):
            if v not in (0, 1):
                violations.append(Violation(14, f"{code}[{idx}]", float(min(abs(v), abs(v - 1)))))
    return FeasibilityReport(not violations, tuple(violations))


# -- serialisation -----------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    return {
        "sizes": inst.sizes.as_dict(),
        "mode_names": list(inst.mode_names),
        "demand": inst.demand.tolist(),
        "fixed_cost": {k: v.tolist() for k, v in inst.fixed_cost.items()},
        "transport_cost": {k: v.tolist() for k, v in inst.transport_cost.items()},
        "fixed_emission": {k: v.tolist() for k, v in inst.fixed_emission.items()},
        "transport_emission": {k: v.tolist() for k, v in inst.transport_emission.items()},
        "theta": list(inst.theta),
        "facility_risk": {k: v.tolist() for k, v in inst.facility_risk.items()},
        "transport_risk": {k: v.tolist() for k, v in inst.transport_risk.items()},
        "capacity": {k: v.tolist() for k, v in inst.capacity.items()},
        "alpha": inst.alpha,
        "beta": inst.beta,
        "delta": inst.delta,
    }


def instance_from_dict(d: Mapping) -> Instance:
    try:
        return Instance(
            sizes=EchelonSizes(**d["sizes"]),
            demand=d["demand"],
            fixed_cost=d["fixed_cost"],
            transport_cost=d["transport_cost"],
            fixed_emission=d["fixed_emission"],
            transport_emission=d["transport_emission"],
            theta=tuple(d["theta"]),
            facility_risk=d["facility_risk"],
            transport_risk=d["transport_risk"],
            capacity=d["capacity"],
            alpha=d["alpha"],
            beta=d["beta"],
            delta=d["delta"],
            mode_names=tuple(d.get("mode_names", ())),
        )
    except KeyError as exc:
        raise InstanceError(f"instance document is missing key {exc}") from None


def solution_to_dict(sol: Solution) -> dict:
    out = {
        "open": {k: v.tolist() for k, v in sol.open.items()},
        "flow": {k: v.tolist() for k, v in sol.flow.items()},
    }
    if sol.objectives is not None:
        out["objectives"] = dict(zip(OBJECTIVE_NAMES, sol.objectives.as_tuple()))
    return out


def solution_from_dict(d: Mapping) -> Solution:
    obj = d.get("objectives")
    triple = ObjectiveTriple(*(obj[n] for n in OBJECTIVE_NAMES)) if obj else None
    return Solution(
        open={k: np.asarray(v) for k, v in d["open"].items()},
        flow={k: np.asarray(v, dtype=float) for k, v in d["flow"].items()},
        objectives=triple,
    )


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def save_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(dumps(instance_to_dict(inst)))


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_solution(sol: Solution, path: str | Path) -> None:
    Path(path).write_text(dumps(solution_to_dict(sol)))


def load_solution(path: str | Path) -> Solution:
    return solution_from_dict(json.loads(Path(path).read_text()))
