"""Command-line front end.

Subcommands mirror the library: validate an instance, solve one model,
sweep a trade-off front, build and solve a robust counterpart, run a named
scenario both ways, or turn coordinate tables into an arc-distance grid.

Exit codes: 0 solved/ok, 1 usage or data error, 2 proven infeasible,
3 budget exhausted before proof.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .builders import build_system_model, build_user_model_i, build_user_model_ii
from .domain import InstanceError, NetworkInstance, validate
from .geo import grid_to_areas
from .io import (load_bundled_instance, load_instance, read_points_csv,
                 write_breakdown_csv)
from .milp import EmbeddedSolver, ModelError, Solver, Status
from .multiobjective import (POINTS_DEFAULT, SystemEpsilonFamily, THETA_DEFAULT,
                             UserEpsilonFamily, epsilon_sweep)
from .objectives import (VariableMap, breakdown_from_solution, collected_quantities,
                         compose_user_totals, effective_opens)
from .robust import capacity_preset, load_uncertainty_spec, robustify_artifacts
from .scenarios import (SCENARIO_ORDER, builtin_scenarios, load_scenario_spec,
                        run_scenario, write_comparison_csv)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3

_STATUS_EXIT = {Status.OPTIMAL: EXIT_OK,
                Status.INFEASIBLE: EXIT_INFEASIBLE,
                Status.BUDGET_EXCEEDED: EXIT_BUDGET}


def _solver_from_args(args: argparse.Namespace) -> Solver:
    if args.solver == "scipy":
        from .external import ScipySolver

        return ScipySolver()
    return EmbeddedSolver(node_budget=args.node_budget)


def _load(args: argparse.Namespace) -> NetworkInstance:
    if args.instance is None:
        return load_bundled_instance()
    return load_instance(args.instance)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", type=Path, default=None,
                        help="instance JSON (default: the bundled example)")
    parser.add_argument("--solver", choices=("embedded", "scipy"), default="embedded")
    parser.add_argument("--node-budget", type=int, default=200_000,
                        help="search-node cap for the embedded engine")
    parser.add_argument("--seed", type=int, default=None,
                        help="accepted for workflow compatibility; all "
                             "computations here are deterministic")


def _print_solution_header(status: Status, objective: float | None) -> None:
    if objective is None:
        print(f"status: {status.value}")
    else:
        print(f"status: {status.value}  objective: {objective:.6f}")


def _cmd_validate(args: argparse.Namespace) -> int:
    instance = _load(args)
    report = validate(instance)
    for violation in report.violations:
        print(f"violation: {violation}")
    for warning in report.warnings:
        print(f"warning: {warning}")
    if report.ok:
        print(f"instance {instance.name!r} is consistent "
              f"({len(instance.products)} products, {len(instance.areas)} areas, "
              f"{len(instance.facilities())} facilities)")
        return EXIT_OK
    return EXIT_ERROR


def _cmd_solve(args: argparse.Namespace) -> int:
    instance = _load(args)
    solver = _solver_from_args(args)
    if args.model == "system":
        artifacts = build_system_model(instance, args.objective,
                                       include_policy=not args.no_policy)
        if args.dump_lp:
            Path(args.dump_lp).write_text(artifacts.dump(), encoding="utf-8")
        solution = solver.solve(artifacts.model)
        _print_solution_header(solution.status, solution.objective)
        if solution.status is not Status.OPTIMAL and not solution.values:
            return _STATUS_EXIT.get(solution.status, EXIT_ERROR)
        final_status = solution.status
        breakdown = breakdown_from_solution(instance, artifacts.vars, solution)
        opens = effective_opens(instance, artifacts.vars, solution.values)
    else:
        phase1 = build_user_model_i(instance, args.objective,
                                    include_policy=not args.no_policy)
        s1 = solver.solve(phase1.model)
        if s1.status is not Status.OPTIMAL:
            _print_solution_header(s1.status, s1.objective)
            return _STATUS_EXIT.get(s1.status, EXIT_ERROR)
        rq = collected_quantities(instance, phase1.vars, s1.values)
        phase2 = build_user_model_ii(instance, rq, args.objective)
        if args.dump_lp:
            text = phase1.dump() + "\n" + phase2.dump()
            Path(args.dump_lp).write_text(text, encoding="utf-8")
        s2 = solver.solve(phase2.model)
        if s2.status is not Status.OPTIMAL:
            _print_solution_header(s2.status, s2.objective)
            return _STATUS_EXIT.get(s2.status, EXIT_ERROR)
        breakdown = compose_user_totals(instance, phase1.vars, s1, phase2.vars, s2)
        merged = dict(s1.values)
        merged.update(s2.values)
        merged_vars = VariableMap(rtd=phase1.vars.rtd, x=phase1.vars.x,
                                  dtp=phase2.vars.dtp, pts=phase2.vars.pts,
                                  y=phase2.vars.y, r=phase2.vars.r)
        opens = effective_opens(instance, merged_vars, merged)
        final_status = Status.OPTIMAL
        print(f"status: optimal  phase totals: {s1.objective:.6f} / {s2.objective:.6f}")

    print(breakdown.format_text())
    open_names = sorted(f for f, is_open in opens.items() if is_open)
    print(f"open facilities: {' '.join(open_names)}")
    if args.output:
        write_breakdown_csv(breakdown.rows(), args.output)
        print(f"breakdown written to {args.output}")
    return _STATUS_EXIT.get(final_status, EXIT_ERROR)


def _cmd_pareto(args: argparse.Namespace) -> int:
    instance = _load(args)
    solver = _solver_from_args(args)
    family_cls = SystemEpsilonFamily if args.model == "system" else UserEpsilonFamily
    family = family_cls(instance, include_policy=not args.no_policy, solver=solver)
    front = epsilon_sweep(family, points=args.points, theta=args.theta)
    print(front.format_text())
    if args.output:
        front.to_csv(args.output)
        print(f"front written to {args.output}")
    return EXIT_OK


def _cmd_robust(args: argparse.Namespace) -> int:
    instance = _load(args)
    solver = _solver_from_args(args)
    artifacts = build_system_model(instance, args.objective,
                                   include_policy=not args.no_policy)
    if args.uncertainty:
        spec = load_uncertainty_spec(args.uncertainty)
    else:
        spec = capacity_preset(artifacts, fraction=args.fraction, gamma=args.gamma)
        print(f"preset: {len(spec.rows)} capacity rows protected at "
              f"+-{args.fraction:.0%}, budget {args.gamma:g}")
    robust = robustify_artifacts(artifacts, spec)
    if args.dump_lp:
        Path(args.dump_lp).write_text(robust.dump(), encoding="utf-8")
    solution = solver.solve(robust.model)
    _print_solution_header(solution.status, solution.objective)
    if solution.status is not Status.OPTIMAL and not solution.values:
        return _STATUS_EXIT.get(solution.status, EXIT_ERROR)
    breakdown = breakdown_from_solution(instance, robust.vars, solution)
    print(breakdown.format_text())
    if args.output:
        write_breakdown_csv(breakdown.rows(), args.output)
        print(f"breakdown written to {args.output}")
    return _STATUS_EXIT.get(solution.status, EXIT_ERROR)


def _cmd_scenario(args: argparse.Namespace) -> int:
    base = _load(args)
    solver = _solver_from_args(args)
    if args.spec:
        specs = [load_scenario_spec(args.spec)]
    elif args.name == "all":
        table = builtin_scenarios()
        specs = [table[name] for name in SCENARIO_ORDER]
    else:
        table = builtin_scenarios()
        if args.name not in table:
            print(f"unknown scenario {args.name!r}; built-ins: "
                  f"{', '.join(SCENARIO_ORDER)} or 'all'", file=sys.stderr)
            return EXIT_ERROR
        specs = [table[args.name]]
    results = [run_scenario(spec, args.objective, base, solver) for spec in specs]
    for result in results:
        print(result.format_text())
        print()
    if args.output:
        write_comparison_csv(results, args.output)
        print(f"comparison written to {args.output}")
    return EXIT_OK


def _cmd_distances(args: argparse.Namespace) -> int:
    points = read_points_csv(args.points)

    def pick(raw: str) -> dict:
        names = [p.strip() for p in raw.split(",") if p.strip()]
        missing = [p for p in names if p not in points]
        if missing:
            raise InstanceError(f"points file lacks {missing}")
        return {name: points[name] for name in names}

    dropoffs = pick(args.dropoffs)
    primaries = pick(args.primaries)
    secondaries = pick(args.secondaries)
    used = set(dropoffs) | set(primaries) | set(secondaries)
    residences = {k: v for k, v in points.items() if k not in used}
    if not residences:
        raise InstanceError("every point is assigned to a facility tier; "
                            "none remain as residence areas")
    grid = grid_to_areas(residences, dropoffs, primaries, secondaries)
    payload = {"res_drop": grid.res_drop, "drop_pri": grid.drop_pri,
               "pri_sec": grid.pri_sec, "population": grid.population}
    text = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
        print(f"distance grid written to {args.output}")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rlnd",
        description="exact planning models for product take-back networks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file for consistency")
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="solve one model and print the breakdown")
    _add_common(p)
    p.add_argument("--model", choices=("system", "user"), default="system")
    p.add_argument("--objective", choices=("cost", "emission"), default="cost")
    p.add_argument("--no-policy", action="store_true",
                   help="ignore siting-policy rows")
    p.add_argument("--dump-lp", type=Path, default=None,
                   help="write the tagged LP text here before solving")
    p.add_argument("--output", type=Path, default=None, help="breakdown CSV")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("pareto", help="sweep the cost/emission trade-off front")
    _add_common(p)
    p.add_argument("--model", choices=("system", "user"), default="system")
    p.add_argument("--points", type=int, default=POINTS_DEFAULT,
                   help="grid steps between the objective anchors")
    p.add_argument("--theta", type=float, default=THETA_DEFAULT,
                   help="slack reward keeping grid solves efficient")
    p.add_argument("--no-policy", action="store_true")
    p.add_argument("--output", type=Path, default=None, help="front CSV")
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("robust", help="solve a budget-protected counterpart")
    _add_common(p)
    p.add_argument("--objective", choices=("cost", "emission"), default="cost")
    p.add_argument("--uncertainty", type=Path, default=None,
                   help="uncertainty spec JSON; omit to use the capacity preset")
    p.add_argument("--fraction", type=float, default=0.1,
                   help="preset: relative coefficient deviation")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="preset: per-row protection budget")
    p.add_argument("--no-policy", action="store_true")
    p.add_argument("--dump-lp", type=Path, default=None)
    p.add_argument("--output", type=Path, default=None, help="breakdown CSV")
    p.set_defaults(func=_cmd_robust)

    p = sub.add_parser("scenario", help="run a named what-if case both ways")
    _add_common(p)
    p.add_argument("--name", default="all",
                   help=f"one of {', '.join(SCENARIO_ORDER)} or 'all'")
    p.add_argument("--spec", type=Path, default=None,
                   help="scenario spec JSON instead of a built-in name")
    p.add_argument("--objective", choices=("cost", "emission"), default="cost")
    p.add_argument("--output", type=Path, default=None, help="comparison CSV")
    p.set_defaults(func=_cmd_scenario)

    p = sub.add_parser("distances",
                       help="great-circle arc grid from a coordinate table")
    p.add_argument("--points", type=Path, required=True,
                   help="CSV: id, lat, lon[, population]")
    p.add_argument("--dropoffs", required=True, help="comma-separated point ids")
    p.add_argument("--primaries", required=True)
    p.add_argument("--secondaries", required=True)
    p.add_argument("--output", type=Path, default=None)
    p.set_defaults(func=_cmd_distances)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except json.JSONDecodeError as exc:
        print(f"error: malformed JSON: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
