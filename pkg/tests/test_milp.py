import math
import random

import pytest

from helpers import pattern_enumeration_optimum
from rlnd.milp import (EmbeddedSolver, LinExpr, MilpModel, ModelError, RowTag,
                       Status, solve_lp, solve_milp)

TAG = RowTag("row")


def _model(name="m"):
    return MilpModel(name)


def test_simple_lp():
    m = _model()
    m.add_variable("x")
    m.add_variable("y")
    m.add_row(LinExpr({"x": 1.0, "y": 1.0}), "<=", 1.0, TAG)
    m.set_objective(LinExpr({"x": -1.0, "y": -2.0}))
    sol = solve_lp(m)
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(-2.0, abs=1e-9)
    assert sol.value("y") == pytest.approx(1.0, abs=1e-9)


def test_lp_with_equality_and_free_variable():
    # min x + 2|y|-ish: y free, x >= 0, x - y == 3, x + y >= 1
    m = _model()
    m.add_variable("x")
    m.add_variable("y", lb=-math.inf)
    m.add_row(LinExpr({"x": 1.0, "y": -1.0}), "==", 3.0, TAG)
    m.add_row(LinExpr({"x": 1.0, "y": 1.0}), ">=", 1.0, RowTag("row2"))
    m.set_objective(LinExpr({"x": 1.0, "y": 2.0}))
    sol = solve_lp(m)
    assert sol.status is Status.OPTIMAL
    # substituting y = x - 3: minimize 3x - 6 s.t. 2x >= 4 -> x = 2, y = -1
    assert sol.objective == pytest.approx(0.0, abs=1e-8)
    assert sol.value("x") == pytest.approx(2.0, abs=1e-8)
    assert sol.value("y") == pytest.approx(-1.0, abs=1e-8)


def test_lp_respects_variable_bounds():
    m = _model()
    m.add_variable("x", lb=1.5, ub=4.0)
    m.set_objective(LinExpr({"x": 1.0}))
    sol = solve_lp(m)
    assert sol.value("x") == pytest.approx(1.5, abs=1e-9)
    sol = solve_lp(m, bounds={"x": (2.5, 4.0)})
    assert sol.value("x") == pytest.approx(2.5, abs=1e-9)


def test_infeasible_lp():
    m = _model()
    m.add_variable("x", ub=1.0)
    m.add_row(LinExpr({"x": 1.0}), ">=", 2.0, TAG)
    m.set_objective(LinExpr({"x": 1.0}))
    assert solve_lp(m).status is Status.INFEASIBLE


def test_unbounded_lp():
    m = _model()
    m.add_variable("x")
    m.set_objective(LinExpr({"x": -1.0}))
    assert solve_lp(m).status is Status.UNBOUNDED


def test_objective_constant_carries_through():
    m = _model()
    m.add_variable("x", ub=2.0)
    m.set_objective(LinExpr({"x": 1.0}, constant=10.0))
    assert solve_lp(m).objective == pytest.approx(10.0, abs=1e-9)


def test_row_constant_folds_into_rhs():
    m = _model()
    m.add_variable("x")
    expr = LinExpr({"x": 1.0}, constant=5.0)
    m.add_row(expr, "<=", 7.0, TAG)  # means x <= 2
    m.set_objective(LinExpr({"x": -1.0}))
    assert solve_lp(m).value("x") == pytest.approx(2.0, abs=1e-9)


def test_unknown_variable_rejected():
    m = _model()
    m.add_variable("x")
    with pytest.raises(ModelError):
        m.add_row(LinExpr({"ghost": 1.0}), "<=", 1.0, TAG)
    with pytest.raises(ModelError):
        m.set_objective(LinExpr({"ghost": 1.0}))
    with pytest.raises(ModelError):
        m.add_variable("x")


def test_knapsack_against_enumeration():
    values = [6.0, 10.0, 12.0, 7.0, 3.0]
    weights = [1.0, 2.0, 3.0, 2.0, 1.0]
    m = _model("knapsack")
    load = LinExpr()
    gain = LinExpr()
    for k, (v, w) in enumerate(zip(values, weights)):
        name = m.add_variable(f"z{k}", binary=True)
        load.add(name, w)
        gain.add(name, -v)
    m.add_row(load, "<=", 5.0, TAG)
    m.set_objective(gain)
    sol = solve_milp(m)
    status, best = pattern_enumeration_optimum(m)
    assert sol.status is status is Status.OPTIMAL
    assert sol.objective == pytest.approx(best, abs=1e-9)
    assert all(abs(x - round(x)) <= 1e-6 for x in sol.values.values())


def test_infeasible_milp():
    m = _model()
    a = m.add_variable("a", binary=True)
    b = m.add_variable("b", binary=True)
    m.add_row(LinExpr({a: 1.0, b: 1.0}), ">=", 3.0, TAG)
    m.set_objective(LinExpr({a: 1.0}))
    assert solve_milp(m).status is Status.INFEASIBLE


def test_budget_exhaustion_reports_bound():
    m = _model()
    load = LinExpr()
    gain = LinExpr()
    for k in range(8):
        name = m.add_variable(f"z{k}", binary=True)
        load.add(name, 1.0 + 0.1 * k)
        gain.add(name, -(2.0 + 0.3 * k))
    m.add_row(load, "<=", 4.55, TAG)
    m.set_objective(gain)
    sol = solve_milp(m, node_budget=1)
    assert sol.status is Status.BUDGET_EXCEEDED
    assert sol.bound is not None
    full = solve_milp(m)
    assert full.status is Status.OPTIMAL
    assert sol.bound <= full.objective + 1e-9


def test_determinism():
    rng = random.Random(7)
    m = _model()
    total = LinExpr()
    obj = LinExpr()
    for k in range(6):
        name = m.add_variable(f"z{k}", binary=True)
        total.add(name, rng.uniform(0.5, 2.0))
        obj.add(name, -rng.uniform(0.5, 2.0))
    m.add_row(total, "<=", 3.0, TAG)
    m.set_objective(obj)
    first = EmbeddedSolver().solve(m)
    second = EmbeddedSolver().solve(m)
    assert first.values == second.values
    assert first.objective == second.objective


def test_random_mixed_models_match_enumeration():
    rng = random.Random(20240815)
    for trial in range(30):
        m = _model(f"rand{trial}")
        n_bin, n_cont = rng.randint(1, 5), rng.randint(0, 3)
        names = [m.add_variable(f"z{k}", binary=True) for k in range(n_bin)]
        names += [m.add_variable(f"x{k}", ub=rng.uniform(1.0, 5.0))
                  for k in range(n_cont)]
        for r in range(rng.randint(1, 4)):
            expr = LinExpr({v: rng.uniform(-2.0, 3.0) for v in names
                            if rng.random() < 0.8})
            if not expr.terms:
                continue
            m.add_row(expr, rng.choice(["<=", ">=", "<="]),
                      rng.uniform(-1.0, 6.0), RowTag("r", (str(r),)))
        m.set_objective(LinExpr({v: rng.uniform(-3.0, 3.0) for v in names}))
        sol = solve_milp(m)
        status, best = pattern_enumeration_optimum(m)
        assert sol.status is status, f"trial {trial}: {sol.status} vs {status}"
        if status is Status.OPTIMAL:
            scale = max(1.0, abs(best))
            assert abs(sol.objective - best) <= 1e-6 * scale, f"trial {trial}"


def test_incumbent_history_is_monotone():
    rng = random.Random(99)
    m = _model()
    load, obj = LinExpr(), LinExpr()
    for k in range(10):
        name = m.add_variable(f"z{k}", binary=True)
        load.add(name, rng.uniform(0.5, 2.0))
        obj.add(name, -rng.uniform(0.1, 3.0))
    m.add_row(load, "<=", 6.0, TAG)
    m.set_objective(obj)
    sol = solve_milp(m)
    hist = sol.stats.incumbent_history
    assert hist == sorted(hist, reverse=True)
    assert sol.status is Status.OPTIMAL
    assert sol.gap == pytest.approx(0.0, abs=1e-9)


def test_lp_format_dump_mentions_tags():
    m = _model("dumped")
    m.add_variable("x", ub=1.0)
    m.add_row(LinExpr({"x": 1.0}), "<=", 1.0, RowTag("capacity", ("dropoff", "a", "b")))
    m.set_objective(LinExpr({"x": -1.0}))
    text = m.to_lp_format()
    assert "capacity[dropoff,a,b]" in text
    assert "Minimize" in text and "Subject To" in text and "Bounds" in text
