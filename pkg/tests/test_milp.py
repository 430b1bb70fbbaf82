import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clscnd.domain import ARCS, FACILITIES, Solution, evaluate_objectives
from clscnd.instgen import REFERENCE_SIZES, reference_instance, tiny_instance
from clscnd.milp import (
    Constraint,
    LinearExpr,
    LinearModel,
    Variable,
    build_model,
    expected_counts,
    fix_binaries,
    solution_from_values,
    to_lp_text,
    values_from_solution,
)
from clscnd.simplex import LpStatus, lp_solve

from conftest import ONES, hand_instance, hand_solution


def _counts(model):
    binaries = sum(v.integral for v in model.variables)
    return binaries, model.n_vars - binaries, len(model.constraints)


def test_unit_sizes_give_4_binaries_6_flows_12_rows():
    model = build_model(hand_instance())
    assert _counts(model) == (4, 6, 12) == expected_counts(ONES)


def test_reference_sizes_counts():
    model = build_model(reference_instance(0))
    assert _counts(model) == expected_counts(REFERENCE_SIZES)
    assert _counts(model)[:2] == (19, 3 * (40 + 160 + 160 + 40 + 24 + 24))


def test_rows_tagged_in_family_order():
    tags = [c.tag for c in build_model(tiny_instance(0)).constraints]
    assert tags == sorted(tags)
    assert set(tags) == set(range(1, 13))


def test_binaries_and_flows_have_domain_bounds():
    model = build_model(tiny_instance(0))
    for v in model.variables:
        assert v.lower == 0.0
        assert v.upper == (1.0 if v.integral else math.inf)


def test_social_coefficient_of_x_is_theta_weighted_risk():
    inst = tiny_instance(2)
    model = build_model(inst)
    risk = inst.transport_risk["PW"]
    for (i, j, t) in [(0, 0, 0), (1, 1, 1), (0, 1, 1)]:
        vid = model.var_index[f"X[{i}][{j}][{t}]"]
        expected = sum(w * r for w, r in zip(inst.theta, risk[i, j, t]))
        assert model.objectives[2].coefficient(vid) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("arithmetic", ["float", "rational"])
def test_hand_all_open_lp_is_200(arithmetic):
    model = fix_binaries(build_model(hand_instance()), [1, 1, 1, 1])
    res = lp_solve(model, arithmetic, objective=0)
    assert res.status is LpStatus.OPTIMAL
    assert float(res.objective_value) == pytest.approx(200.0, abs=1e-9)


def test_all_closed_with_demand_is_infeasible():
    model = fix_binaries(build_model(tiny_instance(1)), [0] * 6)
    assert lp_solve(model, "rational").status is LpStatus.INFEASIBLE


def test_fix_then_relax_leaves_objectives_untouched():
    model = build_model(tiny_instance(1))
    again = fix_binaries(model, [1, 0, 1, 0, 1, 1]).relax_integrality()
    assert again.objectives == model.objectives
    assert again.constraints == model.constraints


def test_fix_binaries_validates_assignment():
    model = build_model(hand_instance())
    with pytest.raises(ValueError):
        fix_binaries(model, [1, 1])
    with pytest.raises(ValueError):
        fix_binaries(model, [1, 1, 2, 0])


def test_expression_merges_duplicates_and_drops_zeros():
    e = LinearExpr.from_pairs([(0, 1.0), (1, 2.0), (0, -1.0), (1, 0.5)], 3.0)
    assert e.terms == ((1, 2.5),)
    assert e.evaluate([7.0, 2.0]) == 8.0


def test_model_validation():
    with pytest.raises(ValueError):
        Variable(0, "x", 1.0, 0.0)
    with pytest.raises(ValueError):
        Constraint(LinearExpr(), "<", 0.0, 1)
    with pytest.raises(ValueError):
        LinearModel((Variable(0, "x"),), (), (LinearExpr(((1, 1.0),)),))


def test_hand_solution_round_trips_through_model_space():
    inst = hand_instance()
    model = build_model(inst)
    sol = hand_solution()
    vals = values_from_solution(model, sol)
    back = solution_from_values(model, vals)
    for code in FACILITIES:
        assert np.array_equal(back.open[code], sol.open[code])
    for a in ARCS:
        assert np.array_equal(back.flow[a.flow], sol.flow[a.flow])
    assert model.objective_values(vals)[0] == pytest.approx(200.0)
    assert model.max_residual(vals) == 0.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), inst_seed=st.integers(0, 9))
def test_model_objectives_match_domain_evaluation(seed, inst_seed):
    inst = tiny_instance(inst_seed)
    model = build_model(inst)
    rng = np.random.default_rng(seed)
    sz = inst.sizes
    sol = Solution(
        {code: rng.integers(0, 2, sz.facility_count(code)) for code in FACILITIES},
        {a.flow: rng.uniform(0, 100, sz.arc_shape(a)) for a in ARCS},
    )
    got = model.objective_values(values_from_solution(model, sol))
    want = evaluate_objectives(inst, sol).as_tuple()
    for g, w in zip(got, want):
        assert g == pytest.approx(w, rel=1e-9)


# -- LP text ---------------------------------------------------------------------

ROW = re.compile(r"^ (c\d+_\d+): (.+) (<=|>=|=) (\S+)$")
TERM = re.compile(r"^[+-]? ?(\S+) (\S+)$")


def test_lp_text_layout_and_rows():
    model = build_model(hand_instance())
    text = to_lp_text(model, objective=0)
    lines = text.splitlines()
    assert lines[0] == "\\ objective: economic"
    assert lines[1] == "Minimize"
    sections = [l for l in lines if not l.startswith(" ") and not l.startswith("\\")]
    assert sections == ["Minimize", "Subject To", "Bounds", "General", "End"]
    rows = [ROW.match(l) for l in lines if ROW.match(l)]
    assert len(rows) == len(model.constraints)
    assert rows[0].group(1) == "c1_0"
    assert " P[0] " in text and " 0.0 <= X[0][0][0] <= +inf" in text


def test_lp_text_rows_evaluate_like_the_model():
    """Parse each row back and check it against the hand solution's values."""
    model = build_model(hand_instance(alpha=0.0))
    vals = values_from_solution(model, hand_solution())
    by_name = {v.name: vals[v.id] for v in model.variables}
    for line in to_lp_text(model).splitlines():
        m = ROW.match(line)
        if not m:
            continue
        lhs = 0.0
        for chunk in re.split(r" (?=[+-] )", m.group(2)):
            sign = -1.0 if chunk.startswith("-") else 1.0
            coef, name = TERM.match(chunk).groups()
            lhs += sign * float(coef) * by_name[name]
        rhs = float(m.group(4))
        sense = m.group(3)
        assert (lhs <= rhs + 1e-9) if sense == "<=" else (lhs >= rhs - 1e-9) if sense == ">=" else \
            abs(lhs - rhs) <= 1e-9
