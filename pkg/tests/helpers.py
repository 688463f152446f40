"""Shared test utilities: independent oracles and generators.

Everything here is deliberately written from first principles (plain loops,
exhaustive enumeration) so it can disagree with the package when the package
is wrong.
"""

from __future__ import annotations

import itertools
import random

from rlnd.domain import (Arc, ArcData, NetworkInstance, ProcessingData,
                         ProcessingEntry, SupplyData)
from rlnd.milp import LinExpr, MilpModel, RowTag, Status, solve_lp


def pattern_enumeration_optimum(model: MilpModel):
    """Exact MILP optimum by trying every binary assignment with an LP.

    Returns (status, objective-or-None).  This is the ground truth the
    branch-and-bound engine must match on small models.
    """
    binaries = model.binary_names
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        bounds = {name: (b, b) for name, b in zip(binaries, bits)}
        sol = solve_lp(model, bounds=bounds)
        if sol.status is Status.UNBOUNDED:
            return Status.UNBOUNDED, None
        if sol.status is Status.OPTIMAL and (best is None or sol.objective < best):
            best = sol.objective
    if best is None:
        return Status.INFEASIBLE, None
    return Status.OPTIMAL, best


def random_network_instance(rng: random.Random) -> NetworkInstance:
    """A small random but well-formed instance (tiers of at most 3)."""
    products = [f"prod{k}" for k in range(1, rng.randint(1, 2) + 1)]
    materials = [f"mat{k}" for k in range(1, rng.randint(1, 2) + 1)]
    areas = [f"area{k}" for k in range(1, rng.randint(1, 2) + 1)]
    dropoffs = [f"drop{k}" for k in range(1, rng.randint(1, 3) + 1)]
    primaries = [f"prim{k}" for k in range(1, rng.randint(1, 3) + 1)]
    secondaries = [f"sec{k}" for k in range(1, rng.randint(1, 2) + 1)]

    mass = {i: {h: rng.uniform(50.0, 400.0) for h in areas} for i in products}
    supply = SupplyData(
        mass=mass,
        trips_per_year=rng.uniform(100.0, 600.0),
        dedicated_fraction={c: rng.uniform(0.2, 0.9) for c in dropoffs},
        trip_factor={h: rng.uniform(0.5, 1.5) for h in areas},
    )

    def entry(cap_low: float, cap_high: float) -> ProcessingEntry:
        return ProcessingEntry(
            cost=rng.uniform(0.01, 1.0), credit=rng.uniform(0.0, 2.0),
            emission=rng.uniform(0.001, 0.2), offset=rng.uniform(0.0, 5.0),
            capacity=rng.uniform(cap_low, cap_high),
            min_shipment=rng.choice([0.0, 0.0, rng.uniform(1.0, 30.0)]))

    # capacities sometimes below total supply, so some instances are infeasible
    total = sum(sum(row.values()) for row in mass.values())
    processing = ProcessingData(
        dropoff={c: {i: entry(0.3 * total, 1.6 * total) for i in products}
                 for c in dropoffs},
        primary={p: {i: entry(0.3 * total, 1.6 * total) for i in products}
                 for p in primaries},
        secondary={s: {j: entry(0.3 * total, 1.6 * total) for j in materials}
                   for s in secondaries},
        resale_dropoff={i: rng.uniform(0.0, 0.3) for i in products},
        resale_primary={i: rng.uniform(0.0, 0.3) for i in products},
        resale_secondary={j: rng.uniform(0.0, 0.3) for j in materials},
        fixed_cost={f: rng.uniform(10.0, 300.0)
                    for f in dropoffs + primaries + secondaries},
        min_open={"dropoff": 1, "primary": 1, "secondary": 1},
        composition={j: {i: rng.uniform(0.0, 0.5) for i in products}
                     for j in materials},
    )

    def arc() -> Arc:
        return Arc(distance=rng.uniform(5.0, 300.0), cost=rng.uniform(0.01, 0.5),
                   emission=rng.uniform(0.01, 0.3))

    arcs = ArcData(
        res_drop={h: {c: arc() for c in dropoffs} for h in areas},
        drop_pri={c: {p: arc() for p in primaries} for c in dropoffs},
        pri_sec={p: {s: arc() for s in secondaries} for p in primaries},
    )
    return NetworkInstance(
        name=f"random-{rng.randrange(10 ** 9)}",
        products=tuple(products), materials=tuple(materials), areas=tuple(areas),
        dropoffs=tuple(dropoffs), primaries=tuple(primaries),
        secondaries=tuple(secondaries),
        supply=supply, processing=processing, arcs=arcs)


KNAP_WEIGHTS = [4.0, 5.0, 6.0, 3.0]
KNAP_PROFITS = [10.0, 12.0, 13.0, 7.0]
KNAP_DEVS = [1.0, 1.5, 1.2, 0.6]
KNAP_CAP = 12.0


def knapsack_model() -> MilpModel:
    """Profit-maximizing selection with one protected load row."""
    model = MilpModel("knapsack")
    load = LinExpr()
    gain = LinExpr()
    for i, (w, p) in enumerate(zip(KNAP_WEIGHTS, KNAP_PROFITS)):
        name = f"x{i}"
        model.add_variable(name, binary=True)
        load.add(name, w)
        gain.add(name, -p)
    model.add_row(load, "<=", KNAP_CAP, RowTag("capacity", ("knap",)))
    model.set_objective(gain)
    return model


def worst_case_load(x, gamma: float) -> float:
    """Row activity after the adversary spends its budget on this point."""
    base = sum(w * xi for w, xi in zip(KNAP_WEIGHTS, x))
    impacts = sorted((d * xi for d, xi in zip(KNAP_DEVS, x)), reverse=True)
    whole = int(gamma)
    extra = sum(impacts[:whole])
    if whole < len(impacts):
        extra += (gamma - whole) * impacts[whole]
    return base + extra


def brute_force_robust_profit(gamma: float) -> float | None:
    """Best profit over every selection that survives the worst case."""
    best = None
    for x in itertools.product((0, 1), repeat=len(KNAP_WEIGHTS)):
        if worst_case_load(x, gamma) > KNAP_CAP + 1e-12:
            continue
        profit = sum(p * xi for p, xi in zip(KNAP_PROFITS, x))
        best = profit if best is None else max(best, profit)
    return best


def three_plan_tradeoff():
    """A model whose efficient set is exactly three known (cost, emission)
    points: pick one of three mutually exclusive plans."""
    plans = {"z1": (30.0, 10.0), "z2": (16.0, 18.0), "z3": (10.0, 30.0)}

    def factory():
        model = MilpModel("three-plans")
        cost = LinExpr()
        emission = LinExpr()
        pick = LinExpr()
        for name, (c, e) in plans.items():
            model.add_variable(name, binary=True)
            cost.add(name, c)
            emission.add(name, e)
            pick.add(name, 1.0)
        model.add_row(pick, "==", 1.0, RowTag("pick-one"))
        model.set_objective(cost)
        return model, cost, emission

    return factory, {(30.0, 10.0), (16.0, 18.0), (10.0, 30.0)}
