import math

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clscnd.simplex import FloatSimplex, LpStatus, SimplexStalled, lp_solve

from conftest import beale_lp, kuhn_lp, lp_model, random_lp


def _agree(model):
    f = lp_solve(model, "float")
    q = lp_solve(model, "rational")
    assert f.status is q.status
    if q.optimal:
        exact = float(q.objective_value)
        assert f.objective_value == pytest.approx(exact, rel=1e-6, abs=1e-9)
    return f, q


def test_symmetric_corner():
    model = lp_model([[1, 1]], [">="], [1], [1, 1])
    for arithmetic in ("float", "rational"):
        res = lp_solve(model, arithmetic)
        assert res.optimal and float(res.objective_value) == pytest.approx(1.0)


def test_contradictory_rows_are_infeasible():
    model = lp_model([[1], [1]], [">=", "<="], [1, 0], [0])
    assert lp_solve(model, "float").status is LpStatus.INFEASIBLE
    assert lp_solve(model, "rational").status is LpStatus.INFEASIBLE


def test_unbounded_ray():
    model = lp_model([[1, -1]], ["<="], [1], [-1, 0])
    assert lp_solve(model, "float").status is LpStatus.UNBOUNDED
    assert lp_solve(model, "rational").status is LpStatus.UNBOUNDED


def test_crossed_bounds_are_infeasible():
    model = lp_model([[1]], ["<="], [5], [1])
    lp = FloatSimplex(model.dense)
    assert lp.solve(model.dense.costs[0], [2.0], [1.0]).status is LpStatus.INFEASIBLE


def test_rational_result_is_exact():
    model = lp_model([[3, 1], [1, 3]], [">=", ">="], [1, 1], [1, 1])
    res = lp_solve(model, "rational")
    assert res.arithmetic == "rational"
    assert res.objective_value == gmpy2.mpq(1, 2)


@pytest.mark.parametrize("build, optimum", [(beale_lp, -1.25), (kuhn_lp, -2.0)])
def test_cycling_examples_terminate(build, optimum):
    f, q = _agree(build())
    assert float(q.objective_value) == optimum
    # a one-step stall window forces the Bland switch almost immediately
    forced = lp_solve(build(), "float", stall_window=1)
    assert forced.optimal and forced.objective_value == pytest.approx(optimum, abs=1e-9)
    assert forced.iterations <= FloatSimplex(build().dense).max_iter


def test_iteration_cap_raises():
    with pytest.raises(SimplexStalled):
        lp_solve(beale_lp(), "float", max_iter=1)


def test_float_matches_rational_on_200_random_lps():
    rng = np.random.default_rng(20240)
    statuses = set()
    for _ in range(200):
        f, q = _agree(random_lp(rng))
        statuses.add(q.status)
    assert statuses == {LpStatus.OPTIMAL, LpStatus.INFEASIBLE, LpStatus.UNBOUNDED}


def _dual_bound(model, y, tol=1e-9):
    """Lagrangian lower bound from row multipliers ``y`` (reduced = c - A^T y)."""
    form = model.dense
    for yi, s in zip(y, form.senses):
        if (s == "<=" and yi > tol) or (s == ">=" and yi < -tol):
            return -math.inf
    d = form.costs[0] - y @ form.A
    bound = float(y @ form.b)
    for dj, lo, hi in zip(d, form.lower, form.upper):
        if dj > tol:
            bound += dj * lo
        elif dj < -tol:
            bound += dj * hi
    return bound


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_weak_and_strong_duality(seed):
    rng = np.random.default_rng(seed)
    model = random_lp(rng)
    res = lp_solve(model, "float")
    if not res.optimal:
        return
    g = _dual_bound(model, np.asarray(res.duals))
    assert g == pytest.approx(res.objective_value, rel=1e-7, abs=1e-7)
    # any other feasible point costs at least the dual bound
    other_cost = rng.integers(-4, 6, size=model.n_vars)
    other = FloatSimplex(model.dense).solve(other_cost)
    if other.optimal:
        assert float(model.dense.costs[0] @ other.values) >= g - 1e-7 * (1 + abs(g))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_warm_start_matches_cold_after_bound_change(seed):
    rng = np.random.default_rng(seed)
    model = random_lp(rng, m=int(rng.integers(2, 7)), n=int(rng.integers(2, 8)))
    form = model.dense
    lp = FloatSimplex(form)
    cost = form.costs[0]
    parent = lp.solve(cost)
    if not parent.optimal or parent.warm is None:
        return
    j = int(rng.integers(form.A.shape[1]))
    lower, upper = form.lower.copy(), form.upper.copy()
    v = parent.values[j]
    if rng.random() < 0.5:
        upper[j] = math.floor(v) if v > lower[j] else lower[j]
    else:
        lower[j] = math.ceil(v) + 1
        upper[j] = max(upper[j], lower[j])
    for warm in (parent.warm, lp.factorize(parent.warm)):
        hot = lp.solve(cost, lower, upper, warm)
        cold = lp.solve(cost, lower, upper)
        assert hot.status is cold.status
        if cold.optimal:
            assert hot.objective_value == pytest.approx(cold.objective_value, rel=1e-7, abs=1e-7)
