"""Shared fixtures: the hand-computed one-of-everything instance and helpers."""

import numpy as np
import pytest

from clscnd.domain import ARCS, FACILITIES, CAPACITY_KEYS, EchelonSizes, Instance, Solution

ONES = EchelonSizes(1, 1, 1, 1, 1, 1)
BIG = 1e4


def hand_instance(*, alpha=0.0, demand=10.0, risks=True, capacity=BIG) -> Instance:
    """1 plant (fixed 100), 1 DC (fixed 50), 1 customer, one mode.

    Shipping costs 2/unit plant->DC and 3/unit DC->customer; every other
    cost, emission and transport risk is zero.  With ``risks`` the plant
    and DC carry the accident/psychosocial/physical/mental counts (3,6,6,4)
    and (2,4,4,3).
    """
    sz = ONES
    zeros_arc = {a.code: np.zeros(sz.arc_shape(a)) for a in ARCS}
    cost = dict(zeros_arc)
    cost["PW"] = np.full((1, 1, 1), 2.0)
    cost["WC"] = np.full((1, 1, 1), 3.0)
    fac_risk = {code: np.zeros((1, 4)) for code in FACILITIES}
    if risks:
        fac_risk["P"] = np.array([[3.0, 6.0, 6.0, 4.0]])
        fac_risk["W"] = np.array([[2.0, 4.0, 4.0, 3.0]])
    return Instance(
        sizes=sz,
        demand=np.array([demand]),
        fixed_cost={"P": [100.0], "W": [50.0], "C": [0.0], "D": [0.0]},
        transport_cost=cost,
        fixed_emission={code: [0.0] for code in FACILITIES},
        transport_emission=dict(zeros_arc),
        theta=(0.4, 0.2, 0.2, 0.2),
        facility_risk=fac_risk,
        transport_risk={a.code: np.zeros(sz.arc_shape(a) + (4,)) for a in ARCS},
        capacity={key: [capacity] for key in CAPACITY_KEYS},
        alpha=alpha,
        beta=0.4,
        delta=0.3,
        mode_names=("road",),
    )


def hand_solution(x=10.0, y=10.0, open_p=1, open_w=1) -> Solution:
    flow = {a.flow: np.zeros(ONES.arc_shape(a)) for a in ARCS}
    flow["X"][0, 0, 0] = x
    flow["Y"][0, 0, 0] = y
    return Solution(
        open={"P": np.array([open_p]), "W": np.array([open_w]), "C": np.array([0]), "D": np.array([0])},
        flow=flow,
    )


@pytest.fixture
def hand():
    return hand_instance()


# -- small LP models -------------------------------------------------------------

import math  # noqa: E402

from clscnd.milp import Constraint, LinearExpr, LinearModel, Variable  # noqa: E402


def lp_model(A, senses, b, c, lower=None, upper=None, integral=None) -> LinearModel:
    n = len(c)
    lower = [0.0] * n if lower is None else lower
    upper = [math.inf] * n if upper is None else upper
    integral = [False] * n if integral is None else integral
    variables = tuple(Variable(j, f"x{j}", float(lower[j]), float(upper[j]), bool(integral[j])) for j in range(n))
    rows = tuple(
        Constraint(LinearExpr.from_pairs((j, float(a)) for j, a in enumerate(row)), s, float(rhs), i)
        for i, (row, s, rhs) in enumerate(zip(A, senses, b))
    )
    return LinearModel(variables, rows, (LinearExpr.from_pairs((j, float(v)) for j, v in enumerate(c)),))


def random_lp(rng, m=None, n=None) -> LinearModel:
    """Small integer-data LP; mixes senses, free-ish and boxed variables."""
    m = int(rng.integers(1, 7)) if m is None else m
    n = int(rng.integers(1, 8)) if n is None else n
    lower, upper = [], []
    for _ in range(n):
        lo = 0.0 if rng.random() < 0.8 else float(rng.integers(-3, 1))
        hi = math.inf if rng.random() < 0.6 else lo + float(rng.integers(0, 5))
        lower.append(lo)
        upper.append(hi)
    A = rng.integers(-5, 6, size=(m, n)) * (rng.random((m, n)) < 0.6)
    senses = [str(s) for s in rng.choice(["<=", ">=", "="], size=m, p=[0.5, 0.3, 0.2])]
    b = rng.integers(-5, 10, size=m)
    c = rng.integers(-4, 6, size=n)
    return lp_model(A, senses, b, c, lower, upper)


def beale_lp() -> LinearModel:
    """Classic example on which textbook Dantzig pricing cycles; optimum -5/4."""
    return lp_model(
        [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]],
        ["<=", "<=", "<="],
        [0, 0, 1],
        [-0.75, 20, -0.5, 6],
    )


def kuhn_lp() -> LinearModel:
    """Kuhn's degenerate cycling example; optimum -2."""
    return lp_model(
        [[-2, -9, 1, 9], [1 / 3, 1, -1 / 3, -2], [2, 3, -1, -12]],
        ["<=", "<=", "<="],
        [0, 0, 2],
        [-2, -3, 1, 12],
    )


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
