"""Campaign plans: allocations, activity sets, verification, objectives.

A plan assigns every test to one configuration and lists, for each
configuration in flight order, the set of active units.  The two cost
criteria are the number of configurations and the number of equipment
re-activations (switches) across the ordered sequence.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .instance import Instance, Violation


class PlanError(ValueError):
    """Raised when a plan document is malformed or fails verification."""


@dataclass(frozen=True)
class Plan:
    """Immutable plan.

    Attributes:
        allocation: configuration index of each test, zero-based.
        activity: active unit set of each configuration, in flight order.
    """

    allocation: tuple[int, ...]
    activity: tuple[frozenset[int], ...]

    @property
    def n_configs(self) -> int:
        return len(self.activity)


@dataclass(frozen=True)
class ObjectiveValue:
    configurations: int
    switches: int
    weighted: int
    slot_bound: int  # the horizon the weighted value was computed against


def verify(inst: Instance, plan: Plan) -> list[Violation]:
    """Check a plan against its instance; empty result means the plan is valid.

    Valid means: every test's equipment is active in its configuration,
    every configuration hosts at least one test, and every configuration
    meets every thermal constraint exactly.
    """
    out: list[Violation] = []
    nc = plan.n_configs
    if len(plan.allocation) != inst.n_tests:
        out.append(
            Violation(
                "alloc-shape",
                f"allocation covers {len(plan.allocation)} tests, instance has {inst.n_tests}",
            )
        )
        return out
    for i, active in enumerate(plan.activity):
        for u in sorted(active):
            if u < 0 or u >= inst.units:
                out.append(
                    Violation(
                        "unknown-unit",
                        f"configuration {i + 1} references unknown unit {u + 1}",
                    )
                )
    hosts: list[int] = [0] * nc
    for t, i in enumerate(plan.allocation):
        if i < 0 or i >= nc:
            out.append(
                Violation(
                    "bad-allocation",
                    f"test {t + 1} allocated to unknown configuration {i + 1}",
                )
            )
            continue
        hosts[i] += 1
        for u in sorted(inst.tests[t] - plan.activity[i]):
            out.append(
                Violation(
                    "coverage",
                    f"test {t + 1} requires unit {u + 1} inactive in configuration {i + 1}",
                )
            )
    for i, k in enumerate(hosts):
        if k == 0:
            out.append(Violation("empty-configuration", f"configuration {i + 1} hosts no test"))
    for i, active in enumerate(plan.activity):
        for c, tc in enumerate(inst.thermal):
            have = len(active & tc.scope)
            if have != tc.capacity:
                out.append(
                    Violation(
                        "cardinality",
                        f"thermal constraint {c + 1}: cardinality {have} != {tc.capacity}"
                        f" in configuration {i + 1}",
                    )
                )
    return out


def count_switches(inst: Instance, plan: Plan) -> int:
    """Number of re-activations across the configuration sequence.

    Every activation after a unit's first one costs a switch, so the total
    is the number of activation events minus the number of units that must
    be activated at all.  Units appearing in no test are excluded from that
    discount: they never need activation, and a plan that activates one
    anyway pays full price.  The plan is assumed to verify.
    """
    activations = 0
    prev: frozenset[int] = frozenset()
    for active in plan.activity:
        activations += len(active - prev)
        prev = active
    return activations - len(inst.tested_units())


def objective(inst: Instance, plan: Plan, slot_bound: int) -> ObjectiveValue:
    """Evaluate both criteria and their weighted combination.

    The weighted value is ceil(units * slot_bound / 2) * configurations
    plus switches; the weight makes the configuration count dominate for
    any switch total a slot_bound-configuration campaign can reach.
    """
    c = plan.n_configs
    z = count_switches(inst, plan) if plan.activity else 0
    weight = (inst.units * slot_bound + 1) // 2
    return ObjectiveValue(c, z, weight * c + z, slot_bound)


def reorder(plan: Plan, order: list[int] | tuple[int, ...]) -> Plan:
    """Fly the same configurations in a different order.

    ``order`` lists old configuration indices in the new flight sequence
    and must be a permutation of them.
    """
    if sorted(order) != list(range(plan.n_configs)):
        raise ValueError("order is not a permutation of the configurations")
    position = {old: new for new, old in enumerate(order)}
    return Plan(
        tuple(position[i] for i in plan.allocation),
        tuple(plan.activity[old] for old in order),
    )


def serialize_plan(inst: Instance, plan: Plan) -> str:
    """Render the canonical plan JSON with one-based identifiers."""
    doc = {
        "allocation": [i + 1 for i in plan.allocation],
        "activity": [sorted(u + 1 for u in active) for active in plan.activity],
        "objective": {
            "configurations": plan.n_configs,
            "switches": count_switches(inst, plan) if plan.activity else 0,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_plan(data: bytes | str, inst: Instance, check: bool = True) -> Plan:
    """Parse a plan document and re-verify it against the instance.

    Raises PlanError on malformed documents, verification failures, or an
    objective block that disagrees with the recomputed values.  check=False
    skips the semantic checks (structure only), for callers that want to
    report violations themselves instead of failing on load.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise PlanError(f"document: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict) or not {"allocation", "activity"} <= set(doc):
        raise PlanError("document: must be an object with 'allocation' and 'activity'")
    alloc_raw = doc["allocation"]
    act_raw = doc["activity"]
    if not isinstance(alloc_raw, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in alloc_raw
    ):
        raise PlanError("allocation: must be an array of one-based configuration indices")
    if not isinstance(act_raw, list) or not all(isinstance(row, list) for row in act_raw):
        raise PlanError("activity: must be an array of unit arrays")
    activity = []
    for k, row in enumerate(act_raw):
        if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in row):
            raise PlanError(f"activity[{k}]: must contain one-based unit ids")
        activity.append(frozenset(v - 1 for v in row))
    plan = Plan(tuple(v - 1 for v in alloc_raw), tuple(activity))
    if not check:
        return plan
    problems = verify(inst, plan)
    if problems:
        raise PlanError(f"plan does not verify: {problems[0]}" + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))
    if "objective" in doc:
        stored = doc["objective"]
        z = count_switches(inst, plan) if plan.activity else 0
        if not isinstance(stored, dict) or stored.get("configurations") != plan.n_configs or stored.get("switches") != z:
            raise PlanError(
                f"objective: stored values {stored} disagree with recomputed"
                f" ({plan.n_configs} configurations, {z} switches)"
            )
    return plan


def load_plan(path: str, inst: Instance, check: bool = True) -> Plan:
    with open(path, "rb") as fh:
        return parse_plan(fh.read(), inst, check=check)


def save_plan(inst: Instance, plan: Plan, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_plan(inst, plan))


def expand_plan(merge_map, plan: Plan) -> Plan:
    """Lift a merged-instance plan back to the original tests."""
    return Plan(tuple(merge_map.expand_allocation(list(plan.allocation))), plan.activity)


def complete_activity(
    inst: Instance, required: "list[frozenset[int]] | tuple[frozenset[int], ...]"
) -> tuple[frozenset[int], ...]:
    """Pad per-configuration required units into full activity sets.

    Each scope is filled to its exact capacity, preferring units that were
    active in the previous configuration (they cost nothing to keep), then
    the lowest unit index.  Out-of-scope units stay on from the first
    configuration that needs them through the end.  With overlapping scopes
    the greedy choice can paint itself into a corner, so the per-scope picks
    are searched with backtracking; raises PlanError when no exact fill
    exists.
    """
    scope_units: set[int] = set()
    for tc in inst.thermal:
        scope_units |= tc.scope

    def fill(base: frozenset[int], prev: frozenset[int]) -> frozenset[int] | None:
        def go(idx: int, active: frozenset[int]) -> frozenset[int] | None:
            if idx == len(inst.thermal):
                return active
            tc = inst.thermal[idx]
            need = tc.capacity - len(active & tc.scope)
            if need < 0:
                return None
            pool = sorted(tc.scope - active, key=lambda u: (u not in prev, u))
            for combo in itertools.combinations(pool, need):
                got = go(idx + 1, active | frozenset(combo))
                if got is not None:
                    return got
            return None

        return go(0, base)

    rows: list[frozenset[int]] = []
    prev: frozenset[int] = frozenset()
    carried: set[int] = set()
    for k, req in enumerate(required):
        filled = fill(frozenset(req & scope_units), prev)
        if filled is None:
            raise PlanError(f"configuration {k + 1}: no exact scope fill exists")
        carried |= req - scope_units
        rows.append(filled | carried)
        prev = filled
    return tuple(rows)
