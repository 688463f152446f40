"""Agreement between the bundled branch-and-bound solver and HiGHS."""

import pytest

from rlnd.builders import build_system_model, build_user_model_i
from rlnd.external import ScipySolver
from rlnd.milp import LinExpr, MilpModel, RowTag, Status, solve_milp
from rlnd.robust import capacity_preset, robustify_artifacts

scipy_solver = ScipySolver()


def agree(model, rel=1e-6):
    ours = solve_milp(model)
    theirs = scipy_solver.solve(model)
    assert theirs.status is ours.status
    if ours.status is Status.OPTIMAL:
        assert theirs.objective == pytest.approx(ours.objective, rel=rel)
    return ours, theirs


def test_system_models_agree(bundled, tight40):
    for instance in (bundled, tight40):
        for objective in ("cost", "emission"):
            agree(build_system_model(instance, objective).model)


def test_user_phase_agrees(bundled):
    agree(build_user_model_i(bundled).model)


def test_robust_model_agrees(tight40):
    art = build_system_model(tight40, "cost")
    preset = capacity_preset(art, fraction=0.1, gamma=1.0)
    agree(robustify_artifacts(art, preset).model)


def test_infeasible_and_unbounded_statuses_agree():
    bad = MilpModel("bad")
    bad.add_variable("x", 0.0, 1.0)
    bad.add_row(LinExpr({"x": 1.0}), ">=", 2.0, RowTag("impossible"))
    bad.set_objective(LinExpr({"x": 1.0}))
    agree(bad)

    free = MilpModel("free")
    free.add_variable("x", float("-inf"), float("inf"))
    free.set_objective(LinExpr({"x": 1.0}))
    ours = solve_milp(free)
    theirs = scipy_solver.solve(free)
    assert ours.status is Status.UNBOUNDED
    assert theirs.status is Status.UNBOUNDED


def test_values_are_usable(bundled):
    model = build_system_model(bundled, "cost").model
    theirs = scipy_solver.solve(model)
    assert theirs.status is Status.OPTIMAL
    assert set(theirs.values) == set(model.variables)
    assert theirs.objective == pytest.approx(model.objective.evaluate(theirs.values))
