from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clscnd.bnb import (
    MilpStatus,
    NodeLimitReached,
    OracleTooLarge,
    enumerate_oracle,
    solve_single_objective,
)
from clscnd.domain import check_feasibility
from clscnd.instgen import tiny_instance
from clscnd.milp import build_model, fix_binaries
from clscnd.simplex import lp_solve

from conftest import hand_instance, lp_model, random_lp


def test_hand_economic_optimum_is_200_with_plant_and_dc_open():
    model = build_model(hand_instance())
    res = solve_single_objective(model, 0)
    assert res.optimal and res.objective == pytest.approx(200.0, abs=1e-9)
    sol = res.solution()
    assert sol.open["P"].tolist() == [1] and sol.open["W"].tolist() == [1]
    oracle = enumerate_oracle(model, 0)
    assert oracle.objective == pytest.approx(res.objective, abs=1e-12)


def test_hand_social_optimum_is_7_4():
    res = solve_single_objective(build_model(hand_instance()), 2)
    assert res.objective == pytest.approx(7.4, abs=1e-9)


def test_capacity_below_demand_is_infeasible():
    model = build_model(hand_instance(capacity=5.0))
    assert solve_single_objective(model, 0).status is MilpStatus.INFEASIBLE
    assert enumerate_oracle(model, 0).status is MilpStatus.INFEASIBLE


def test_zero_demand_opens_nothing():
    model = build_model(tiny_instance(3, demand_range=(0, 0)))
    for solver in (solve_single_objective, enumerate_oracle):
        res = solver(model, 0)
        assert res.objective == 0.0
        assert res.binaries() == (0,) * 6


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("k", range(3))
def test_matches_oracle_on_tiny_instances(seed, k):
    model = build_model(tiny_instance(seed))
    got = solve_single_objective(model, k)
    want = enumerate_oracle(model, k)
    assert got.status is want.status
    assert got.objective == pytest.approx(want.objective, rel=1e-6)
    assert got.bound == got.objective
    assert got.root_bound <= got.objective + 1e-9 * abs(got.objective)
    assert check_feasibility(model.instance, got.solution()).feasible


def test_incumbent_is_the_lp_optimum_of_its_own_assignment():
    model = build_model(tiny_instance(7))
    res = solve_single_objective(model, 0)
    pinned = lp_solve(fix_binaries(model, res.binaries()), "rational")
    assert float(pinned.objective_value) == pytest.approx(res.objective, rel=1e-9)


def test_node_limit_reports_valid_bound():
    model = build_model(tiny_instance(0))
    optimum = enumerate_oracle(model, 0).objective
    with pytest.raises(NodeLimitReached) as info:
        solve_single_objective(model, 0, node_limit=2)
    assert info.value.nodes == 2
    assert info.value.bound <= optimum + 1e-6


def test_oracle_refuses_more_than_22_binaries():
    k = 23
    model = lp_model([[1] * k], [">="], [1], [1] * k, upper=[1] * k, integral=[True] * k)
    with pytest.raises(OracleTooLarge):
        enumerate_oracle(model, 0)


def test_tie_band_collects_every_tied_assignment():
    # two identical binaries covering one unit of demand: both singletons tie
    model = lp_model([[1, 1]], [">="], [1], [3, 3], upper=[1, 1], integral=[True, True])
    res = solve_single_objective(model, 0, tie_band=0.0)
    assert res.objective == 3.0
    assert sorted(res.alternatives) == [(0, 1), (1, 0)]
    wide = solve_single_objective(model, 0, tie_band=3.0)
    assert sorted(wide.alternatives) == [(0, 1), (1, 0), (1, 1)]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000))
def test_random_mixed_binary_programs_match_oracle(seed):
    rng = np.random.default_rng(seed)
    base = random_lp(rng, m=int(rng.integers(1, 5)), n=int(rng.integers(2, 7)))
    n_int = int(rng.integers(1, base.n_vars + 1))
    variables = tuple(replace(v, lower=0.0, upper=1.0, integral=True) if v.id < n_int else v
                      for v in base.variables)
    model = replace(base, variables=variables)
    relax = lp_solve(model, "rational")
    if relax.status.value == "unbounded":
        return
    try:
        want = enumerate_oracle(model, 0)
    except ValueError:      # unbounded once binaries are fixed
        return
    got = solve_single_objective(model, 0)
    assert got.status is want.status
    if want.optimal:
        assert got.objective == pytest.approx(want.objective, rel=1e-6, abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 9), factor=st.floats(1.0, 1.5))
def test_economic_optimum_grows_with_demand(seed, factor):
    base = tiny_instance(seed)
    scaled = replace(base, demand=base.demand * factor)
    lo = solve_single_objective(build_model(base), 0)
    hi = solve_single_objective(build_model(scaled), 0)
    if hi.optimal:
        assert hi.objective >= lo.objective - 1e-6 * abs(lo.objective)
