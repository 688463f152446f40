import pytest

from helpers import three_plan_tradeoff
from rlnd.milp import DEFAULT_SOLVER, LinExpr, MilpModel, RowTag, Status, solve_milp
from rlnd.multiobjective import (ExpressionFamily, SystemEpsilonFamily,
                                 UserEpsilonFamily, epsilon_sweep)


def test_three_plan_front_is_exact():
    factory, expected = three_plan_tradeoff()
    front = epsilon_sweep(ExpressionFamily(factory), points=10, theta=1e-4)
    got = {(round(p.total_cost, 9), round(p.total_emission, 9)) for p in front}
    assert got == expected
    assert len(front) == 3
    assert front.skipped == []
    # every surviving point honours its own emission cap
    for p in front:
        assert p.total_emission <= p.epsilon + 1e-9
    # grid endpoints recover the single-objective anchors
    by_v = {p.v: p for p in front.points}
    assert by_v[0].total_emission == pytest.approx(front.emission_anchor[1])
    assert by_v[10].total_cost == pytest.approx(front.cost_anchor[0])


def test_three_plan_front_none_dominated():
    factory, _ = three_plan_tradeoff()
    front = epsilon_sweep(ExpressionFamily(factory), points=10, theta=1e-4)
    pts = list(front)
    for p in pts:
        for q in pts:
            if q is p:
                continue
            assert not (q.total_cost <= p.total_cost
                        and q.total_emission <= p.total_emission
                        and (q.total_cost < p.total_cost
                             or q.total_emission < p.total_emission))


def test_weighted_sum_oracle_lands_on_front():
    factory, expected = three_plan_tradeoff()
    found = set()
    for k in range(1001):
        w = k / 1000.0
        model, cost, emission = factory()
        combo = cost.scaled(w)
        combo.add_expr(emission, 1.0 - w)
        model.set_objective(combo)
        sol = solve_milp(model)
        assert sol.status is Status.OPTIMAL
        found.add((round(cost.evaluate(sol.values), 9),
                   round(emission.evaluate(sol.values), 9)))
    # all three efficient points are supported, so scalarization finds each,
    # and nothing outside the known front ever wins
    assert found == expected


def test_coarse_grid_misses_interior_point():
    factory, _ = three_plan_tradeoff()
    front = epsilon_sweep(ExpressionFamily(factory), points=1, theta=1e-4)
    got = {(p.total_cost, p.total_emission) for p in front}
    assert got == {(30.0, 10.0), (10.0, 30.0)}


def test_degenerate_single_point_front():
    def factory():
        model = MilpModel("aligned")
        plans = {"z1": (10.0, 10.0), "z2": (20.0, 20.0)}
        cost, emission, pick = LinExpr(), LinExpr(), LinExpr()
        for name, (c, e) in plans.items():
            model.add_variable(name, binary=True)
            cost.add(name, c)
            emission.add(name, e)
            pick.add(name, 1.0)
        model.add_row(pick, "==", 1.0, RowTag("pick-one"))
        model.set_objective(cost)
        return model, cost, emission

    front = epsilon_sweep(ExpressionFamily(factory), points=10)
    assert len(front) == 1
    assert front.points[0].total_cost == pytest.approx(10.0)


def test_parameter_validation():
    factory, _ = three_plan_tradeoff()
    family = ExpressionFamily(factory)
    with pytest.raises(ValueError):
        epsilon_sweep(family, theta=1e-2)
    with pytest.raises(ValueError):
        epsilon_sweep(family, theta=0.0)
    with pytest.raises(ValueError):
        epsilon_sweep(family, points=0)


def test_front_csv(tmp_path):
    factory, _ = three_plan_tradeoff()
    front = epsilon_sweep(ExpressionFamily(factory))
    path = tmp_path / "front.csv"
    front.to_csv(path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "v,epsilon,total_cost,total_emission"
    assert len(lines) == 1 + len(front)


def test_system_family_on_slack_instance(bundled):
    # cost and emission optima coincide here, so the front is one point
    front = epsilon_sweep(SystemEpsilonFamily(bundled), points=4)
    assert len(front) == 1
    assert front.cost_anchor == pytest.approx(front.emission_anchor)


def test_system_family_on_tight_instance(tight40):
    front = epsilon_sweep(SystemEpsilonFamily(tight40), points=10)
    assert len(front) >= 2
    assert front.skipped == []
    pts = sorted(front, key=lambda p: p.v)
    for a, b in zip(pts, pts[1:]):
        assert b.total_cost <= a.total_cost + 1e-6
        assert b.total_emission >= a.total_emission - 1e-6
    for p in pts:
        assert p.total_emission <= p.epsilon + 1e-6
    assert pts[0].total_emission == pytest.approx(front.emission_anchor[1], rel=1e-9)
    assert pts[-1].total_cost == pytest.approx(front.cost_anchor[0], rel=1e-9)
    # the augmented solve may only improve on the raw emission anchor's cost
    assert pts[0].total_cost <= front.emission_anchor[0] + 1e-6


def test_user_family_on_tight_instance(tight40):
    front = epsilon_sweep(UserEpsilonFamily(tight40), points=10)
    assert len(front) >= 2
    for p in front:
        assert p.total_emission <= p.epsilon + 1e-6
    system = epsilon_sweep(SystemEpsilonFamily(tight40), points=10)
    # a composed two-phase plan is feasible for the one-shot model, so the
    # decentralized cost anchor cannot beat the centralized one
    assert front.cost_anchor[0] >= system.cost_anchor[0] - 1e-6
    assert front.emission_anchor[1] >= system.emission_anchor[1] - 1e-6
