"""Named planning scenarios and centralized-vs-decentralized comparisons.

A scenario is the bundled (or a user-supplied) instance plus light
overrides: a different supply mix, a per-area trip factor, or primary-tier
throughput caps expressed as a fraction of the throughput the unconstrained
network actually uses.  `run_scenario` solves the whole-network program and
the two-phase program on the materialized instance and reports both as
per-stage breakdowns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

from .builders import (ModelArtifacts, build_system_model, build_user_model_i,
                       build_user_model_ii)
from .domain import (NetworkInstance, with_supply_mass, with_total_capacity,
                     with_trip_factor)
from .io import load_bundled_instance
from .milp import DEFAULT_SOLVER, ModelError, Solution, Solver, Status
from .objectives import (StageBreakdown, VariableMap, breakdown_from_solution,
                         collected_quantities, compose_user_totals,
                         effective_opens, facility_inflows)

SCENARIO_ORDER = ("baseline", "capacity-80", "capacity-40", "supply-mix-1",
                  "supply-mix-2")


@dataclass(frozen=True)
class ScenarioSpec:
    """Overrides applied to a base instance before solving."""

    name: str
    description: str = ""
    supply_mass: dict[str, dict[str, float]] | None = None
    trip_factor: float | None = None
    total_capacity_fraction: float | None = None  # of solved base throughput
    total_capacity: dict[str, float] | None = None


def builtin_scenarios() -> dict[str, ScenarioSpec]:
    """The five standard what-if cases for the bundled two-area instance."""
    return {
        "baseline": ScenarioSpec(
            "baseline", "the instance as given"),
        "capacity-80": ScenarioSpec(
            "capacity-80", "every primary capped at 80% of the busiest "
            "primary's baseline throughput",
            total_capacity_fraction=0.80),
        "capacity-40": ScenarioSpec(
            "capacity-40", "every primary capped at 40% of the busiest "
            "primary's baseline throughput",
            total_capacity_fraction=0.40),
        "supply-mix-1": ScenarioSpec(
            "supply-mix-1", "second area generates most of both products",
            supply_mass={"prod1": {"area1": 600.0, "area2": 1050.0},
                         "prod2": {"area1": 600.0, "area2": 1050.0}}),
        "supply-mix-2": ScenarioSpec(
            "supply-mix-2", "each area leads on a different product",
            supply_mass={"prod1": {"area1": 1050.0, "area2": 600.0},
                         "prod2": {"area1": 600.0, "area2": 1050.0}}),
    }


def load_scenario_spec(path: str | Path) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return ScenarioSpec(
        name=data["name"],
        description=data.get("description", ""),
        supply_mass=data.get("supply_mass"),
        trip_factor=data.get("trip_factor"),
        total_capacity_fraction=data.get("total_capacity_fraction"),
        total_capacity=data.get("total_capacity"),
    )


# ----------------------------------------------------------------------
# materialization
# ----------------------------------------------------------------------

def _solved(model_artifacts: ModelArtifacts, solver: Solver, label: str) -> Solution:
    solution = solver.solve(model_artifacts.model)
    if solution.status is not Status.OPTIMAL:
        raise ModelError(f"{label} ended {solution.status.value}")
    return solution


def derive_throughput(instance: NetworkInstance,
                      solver: Solver | None = None) -> tuple[str, float, dict[str, float]]:
    """Busiest primary under the cost-optimal whole-network plan.

    Returns (facility, inflow, all primary inflows); ties break toward the
    earlier facility in the instance's primary ordering.
    """
    solver = solver or DEFAULT_SOLVER
    artifacts = build_system_model(instance, "cost")
    solution = _solved(artifacts, solver, "throughput solve")
    inflows = facility_inflows(instance, artifacts.vars, solution.values)
    per_primary = {p: inflows.get(p, 0.0) for p in instance.primaries}
    busiest = max(instance.primaries, key=lambda p: per_primary[p])
    return busiest, per_primary[busiest], per_primary


def materialize(spec: ScenarioSpec, base: NetworkInstance | None = None,
                solver: Solver | None = None) -> NetworkInstance:
    """Apply a scenario's overrides to the base instance.

    Throughput-fraction caps are computed against the *unmodified* base, so
    "80% capacity" always means 80% of what the unconstrained network used.
    """
    instance = base if base is not None else load_bundled_instance()
    out = instance
    if spec.trip_factor is not None:
        out = with_trip_factor(out, spec.trip_factor)
    if spec.supply_mass is not None:
        out = with_supply_mass(out, spec.supply_mass)
    if spec.total_capacity_fraction is not None:
        _, throughput, _ = derive_throughput(instance, solver)
        caps = {p: spec.total_capacity_fraction * throughput for p in instance.primaries}
        out = with_total_capacity(out, caps)
    if spec.total_capacity is not None:
        out = with_total_capacity(out, spec.total_capacity)
    if spec.name and spec.name != instance.name:
        out = replace(out, name=f"{instance.name}:{spec.name}")
    return out


# ----------------------------------------------------------------------
# solving and reporting
# ----------------------------------------------------------------------

@dataclass
class SideResult:
    """One decision mode's solved outcome on a scenario."""

    breakdown: StageBreakdown
    opens: dict[str, bool]
    values: dict[str, float]

    @property
    def fixed_cost(self) -> float:
        return sum(self.breakdown.fixed_cost.values())

    @property
    def revenue(self) -> float:
        return sum(self.breakdown.resale_revenue.values())

    @property
    def offset(self) -> float:
        return sum(self.breakdown.emission_offset.values())

    @property
    def total_cost(self) -> float:
        return self.breakdown.total_cost

    @property
    def total_emission(self) -> float:
        return self.breakdown.total_emission


@dataclass
class ScenarioResult:
    name: str
    objective: str
    instance: NetworkInstance
    system: SideResult
    user: SideResult

    def rows(self) -> list[tuple[str, str, str, float]]:
        out = []
        for mode, side in (("system", self.system), ("user", self.user)):
            for metric, stage, value in side.breakdown.rows():
                out.append((mode, metric, stage, value))
            out.append((mode, "fixed_cost_total", "all", side.fixed_cost))
            out.append((mode, "revenue_total", "all", side.revenue))
            out.append((mode, "offset_total", "all", side.offset))
        return out

    def format_text(self) -> str:
        lines = [f"scenario {self.name} ({self.objective} objective)"]
        header = (f"{'':10s} {'fixed':>10s} {'revenue':>10s} {'cost':>12s} "
                  f"{'offset':>10s} {'emission':>12s}")
        lines.append(header)
        for mode, side in (("system", self.system), ("user", self.user)):
            lines.append(f"{mode:10s} {side.fixed_cost:10.2f} {side.revenue:10.2f} "
                         f"{side.total_cost:12.2f} {side.offset:10.2f} "
                         f"{side.total_emission:12.2f}")
        return "\n".join(lines)


def solve_system(instance: NetworkInstance, objective: str = "cost",
                 solver: Solver | None = None,
                 include_policy: bool = True) -> SideResult:
    """One decision maker routes everything."""
    solver = solver or DEFAULT_SOLVER
    artifacts = build_system_model(instance, objective, include_policy)
    solution = _solved(artifacts, solver, f"whole-network {objective} solve")
    breakdown = breakdown_from_solution(instance, artifacts.vars, solution)
    opens = effective_opens(instance, artifacts.vars, solution.values)
    return SideResult(breakdown, opens, dict(solution.values))


def solve_user(instance: NetworkInstance, objective: str = "cost",
               solver: Solver | None = None,
               include_policy: bool = True) -> SideResult:
    """Residents choose dropoffs first; the operator routes what arrives."""
    solver = solver or DEFAULT_SOLVER
    phase1 = build_user_model_i(instance, objective, include_policy)
    s1 = _solved(phase1, solver, f"collection phase {objective} solve")
    rq = collected_quantities(instance, phase1.vars, s1.values)
    phase2 = build_user_model_ii(instance, rq, objective)
    s2 = _solved(phase2, solver, f"routing phase {objective} solve")
    breakdown = compose_user_totals(instance, phase1.vars, s1, phase2.vars, s2)
    values = dict(s1.values)
    values.update(s2.values)
    merged = VariableMap(rtd=phase1.vars.rtd, x=phase1.vars.x,
                         dtp=phase2.vars.dtp, pts=phase2.vars.pts,
                         y=phase2.vars.y, r=phase2.vars.r)
    opens = effective_opens(instance, merged, values)
    return SideResult(breakdown, opens, values)


def run_scenario(spec: ScenarioSpec | str, objective: str = "cost",
                 base: NetworkInstance | None = None,
                 solver: Solver | None = None) -> ScenarioResult:
    """Materialize a scenario and solve it both ways."""
    if isinstance(spec, str):
        table = builtin_scenarios()
        if spec not in table:
            raise KeyError(f"unknown scenario {spec!r}; "
                           f"built-ins are {sorted(table)}")
        spec = table[spec]
    instance = materialize(spec, base, solver)
    system = solve_system(instance, objective, solver)
    user = solve_user(instance, objective, solver)
    return ScenarioResult(spec.name, objective, instance, system, user)


def run_all(objective: str = "cost", base: NetworkInstance | None = None,
            solver: Solver | None = None,
            names: Iterable[str] = SCENARIO_ORDER) -> list[ScenarioResult]:
    return [run_scenario(name, objective, base, solver) for name in names]


def comparison_rows(results: Iterable[ScenarioResult]) -> list[dict[str, Any]]:
    """Flat records (one per scenario x mode) for CSV export."""
    records = []
    for result in results:
        for mode, side in (("system", result.system), ("user", result.user)):
            records.append({
                "scenario": result.name,
                "objective": result.objective,
                "mode": mode,
                "fixed_cost": side.fixed_cost,
                "revenue": side.revenue,
                "total_cost": side.total_cost,
                "offset": side.offset,
                "total_emission": side.total_emission,
                "open_facilities": " ".join(
                    sorted(f for f, is_open in side.opens.items() if is_open)),
            })
    return records


def write_comparison_csv(results: Iterable[ScenarioResult], path: str | Path) -> None:
    import csv

    records = comparison_rows(results)
    columns = ["scenario", "objective", "mode", "fixed_cost", "revenue",
               "total_cost", "offset", "total_emission", "open_facilities"]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for record in records:
            writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v)
                             for k, v in record.items()})


# ----------------------------------------------------------------------
# calibration
# ----------------------------------------------------------------------

@dataclass
class CalibrationResult:
    factor: float
    achieved_total_cost: float
    iterations: int
    trail: list[tuple[float, float]] = field(default_factory=list)


def calibrate_trip_factor(target_total_cost: float,
                          base: NetworkInstance | None = None,
                          solver: Solver | None = None,
                          rel_tol: float = 1e-9,
                          max_iterations: int = 25) -> CalibrationResult:
    """Scale the lumped trip factor so the whole-network cost optimum hits a
    measured total.

    The optimum is piecewise linear in the factor, so refitting the linear
    piece (total = rest + factor * trip-leg cost) converges in a couple of
    steps unless the optimal routing keeps switching.
    """
    instance = base if base is not None else load_bundled_instance()
    factor = 1.0
    trail: list[tuple[float, float]] = []
    for iteration in range(1, max_iterations + 1):
        scaled = with_trip_factor(instance, factor)
        side = solve_system(scaled, "cost", solver)
        total = side.total_cost
        trail.append((factor, total))
        if abs(total - target_total_cost) <= rel_tol * max(1.0, abs(target_total_cost)):
            return CalibrationResult(factor, total, iteration, trail)
        trip_leg = side.breakdown.transport_cost.get("residence-dropoff", 0.0)
        if trip_leg <= 0.0:
            raise ModelError("the trip leg contributes no cost; "
                             "the target cannot be reached by scaling it")
        per_unit = trip_leg / factor
        factor += (target_total_cost - total) / per_unit
        if factor <= 0.0:
            raise ModelError(f"calibration drove the factor to {factor:g}; "
                             f"the target {target_total_cost:g} is below the "
                             f"trip-free cost floor")
    return CalibrationResult(factor, trail[-1][1], max_iterations, trail)
