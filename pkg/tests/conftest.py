"""Shared fixtures: the worked figure instance, its two reference plans,
and the random instance families the differential tests draw from.
"""

import os

import pytest

from satplan.instance import Instance, ThermalConstraint, load_instance, validate
from satplan.plan import Plan

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def fig1() -> Instance:
    return load_instance(os.path.join(DATA_DIR, "fig1.json"))


@pytest.fixture(scope="session")
def fig1_plan_b2() -> Plan:
    # the two-configuration reference solution: no re-activation needed
    return Plan(
        (1, 0, 0, 1, 0, 1, 0, 0),
        (frozenset({1, 2, 4, 5}), frozenset({0, 2, 3, 4})),
    )


@pytest.fixture(scope="session")
def fig1_plan_b3() -> Plan:
    # the three-configuration reference solution with two re-activations
    return Plan(
        (0, 0, 1, 1, 1, 2, 2, 2),
        (
            frozenset({0, 1, 3, 5}),
            frozenset({1, 2, 3, 4}),
            frozenset({0, 2, 4, 5}),
        ),
    )


def rand_dominated(rng) -> Instance:
    """Small instances where the weighted and lexicographic optima coincide.

    Capacities sum to at most half the units and some test touches a scope,
    which makes the configuration-count weight strictly dominate any
    reachable switch total.  Every instance passes validation.
    """
    while True:
        units = rng.randint(4, 8)
        k = rng.randint(1, 2)
        perm = list(range(units))
        rng.shuffle(perm)
        if k == 2:
            cut = units // 2
            raw = [perm[:cut], perm[cut:]]
        else:
            raw = [perm[: rng.randint(2, units)]]
        budget = units // 2
        thermal = []
        for s in raw:
            cap = rng.randint(1, max(1, min(len(s) // 2, budget - (len(raw) - len(thermal) - 1))))
            budget -= cap
            thermal.append(ThermalConstraint(frozenset(s), cap))
        n = rng.randint(1, 6)
        tests = [frozenset(rng.sample(range(units), rng.randint(1, 3))) for _ in range(n)]
        inst = Instance("rand", units, tuple(tests), tuple(thermal))
        if any(not v.warning for v in validate(inst)):
            continue
        scope_units = frozenset().union(*(tc.scope for tc in thermal))
        if not any(e & scope_units for e in tests):
            continue
        return inst


def rand_overlap(rng) -> Instance:
    """Small instances with two overlapping thermal scopes.

    These can be genuinely infeasible even when individually schedulable:
    the joint exact-cardinality fill may not exist.  Callers must handle
    the oracle raising on such instances.
    """
    while True:
        units = rng.randint(4, 7)
        ids = list(range(units))
        rng.shuffle(ids)
        a = ids[: rng.randint(2, units - 1)]
        start = rng.randint(0, len(a) - 1)
        b = a[start:] + [u for u in ids if u not in a][: rng.randint(1, max(1, units - len(a)))]
        if len(b) < 2 or not (set(a) & set(b)):
            continue
        thermal = (
            ThermalConstraint(frozenset(a), rng.randint(1, max(1, len(a) - 1))),
            ThermalConstraint(frozenset(b), rng.randint(1, max(1, len(b) - 1))),
        )
        n = rng.randint(1, 5)
        tests = [frozenset(rng.sample(range(units), rng.randint(1, 3))) for _ in range(n)]
        inst = Instance("ov", units, tuple(tests), thermal)
        if any(not v.warning for v in validate(inst)):
            continue
        return inst
