"""Test-campaign instances and their canonical JSON form.

An instance describes a payload test campaign: a pool of equipment units,
a list of tests (each test requires a set of units to be active at the
same time), and a list of thermal constraints.  A thermal constraint
demands that, in every configuration flown, the number of active units
inside its scope equals its capacity exactly.

Identifiers are one-based in files and in human-readable messages, and
zero-based everywhere else in this package.  The conversion happens only
in this module, inside the parser and the serializer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class InstanceError(ValueError):
    """Raised by the parser for documents that do not describe a valid instance."""


@dataclass(frozen=True)
class Violation:
    """One breach of the instance or plan rules.

    Attributes:
        kind: stable machine-readable tag, e.g. ``"unschedulable-test"``.
        message: human-readable description using one-based identifiers.
        warning: True for breaches that do not invalidate the instance.
    """

    kind: str
    message: str
    warning: bool = False

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class ThermalConstraint:
    """Exact-cardinality thermal balance rule over a set of units.

    Attributes:
        scope: zero-based unit indices governed by the rule.
        capacity: number of scope units that must be active in every
            non-empty configuration.  Activating fewer units would let the
            panel cool below its operating point, more would overheat it,
            so equality is required rather than an upper bound.
    """

    scope: frozenset[int]
    capacity: int


@dataclass(frozen=True)
class Instance:
    """Immutable test-campaign instance.

    Attributes:
        name: free-form label, also used to carry generator provenance.
        units: number of equipment units; units are indexed 0..units-1.
        tests: required equipment set of each test, indexed by test.
        thermal: the thermal constraints, indexed by constraint.
    """

    name: str
    units: int
    tests: tuple[frozenset[int], ...]
    thermal: tuple[ThermalConstraint, ...]

    @property
    def n_tests(self) -> int:
        return len(self.tests)

    def tested_units(self) -> frozenset[int]:
        """Units that appear in at least one test."""
        out: set[int] = set()
        for e in self.tests:
            out |= e
        return frozenset(out)


def validate(inst: Instance) -> list[Violation]:
    """Check an instance against the campaign rules.

    Returns all breaches found; an empty list means the instance is valid.
    Entries with ``warning=True`` (currently only units that no test uses)
    do not make the instance invalid.
    """
    out: list[Violation] = []
    for t, e in enumerate(inst.tests):
        if not e:
            out.append(Violation("empty-test", f"test {t + 1} requires no equipment"))
        bad = sorted(u for u in e if u < 0 or u >= inst.units)
        for u in bad:
            out.append(
                Violation(
                    "unknown-unit",
                    f"test {t + 1} references unknown unit {u + 1}",
                )
            )
    for c, tc in enumerate(inst.thermal):
        if not tc.scope:
            out.append(
                Violation("empty-scope", f"thermal constraint {c + 1} has an empty scope")
            )
            continue
        bad = sorted(u for u in tc.scope if u < 0 or u >= inst.units)
        for u in bad:
            out.append(
                Violation(
                    "unknown-unit",
                    f"thermal constraint {c + 1} references unknown unit {u + 1}",
                )
            )
        if tc.capacity < 1:
            out.append(
                Violation(
                    "bad-capacity",
                    f"thermal constraint {c + 1} capacity {tc.capacity} is not positive",
                )
            )
        elif tc.capacity > len(tc.scope):
            out.append(
                Violation(
                    "bad-capacity",
                    f"thermal constraint {c + 1}: capacity exceeds scope size",
                )
            )
    # A test needing more units of a scope than its capacity can never run.
    for t, e in enumerate(inst.tests):
        for c, tc in enumerate(inst.thermal):
            need = len(e & tc.scope)
            if need > tc.capacity:
                out.append(
                    Violation(
                        "unschedulable-test",
                        f"test {t + 1} unschedulable under constraint {c + 1}: "
                        f"requires {need} units of a capacity-{tc.capacity} scope",
                    )
                )
    used = inst.tested_units()
    for u in range(inst.units):
        if u not in used:
            out.append(Violation("unused-unit", f"unused unit {u + 1}", warning=True))
    return out


def is_valid(inst: Instance) -> bool:
    """True when validate() reports no error-class violations."""
    return not any(v for v in validate(inst) if not v.warning)


def _expect(cond: bool, path: str, what: str) -> None:
    if not cond:
        raise InstanceError(f"{path}: {what}")


def _unit_array(raw: object, path: str, units: int) -> frozenset[int]:
    _expect(isinstance(raw, list) and len(raw) > 0, path, "must be a non-empty array")
    vals: list[int] = []
    for k, v in enumerate(raw):  # type: ignore[arg-type]
        _expect(isinstance(v, int) and not isinstance(v, bool), f"{path}[{k}]", "must be an integer")
        _expect(1 <= v <= units, f"{path}[{k}]", f"unit id {v} out of range 1..{units}")
        vals.append(v)
    _expect(len(set(vals)) == len(vals), path, "contains duplicate unit ids")
    return frozenset(v - 1 for v in vals)


def parse_instance(data: bytes | str) -> Instance:
    """Parse and validate an instance document.

    Raises InstanceError, naming the offending field, for malformed JSON,
    structural problems, and error-class rule violations.  Warning-class
    violations (unused units) are tolerated.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"document: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    _expect(isinstance(doc, dict), "document", "must be a JSON object")
    for key in ("name", "units", "tests", "thermal"):
        _expect(key in doc, "document", f"missing key '{key}'")
    extra = set(doc) - {"name", "units", "tests", "thermal"}
    _expect(not extra, "document", f"unknown keys {sorted(extra)}")
    _expect(isinstance(doc["name"], str), "name", "must be a string")
    units = doc["units"]
    _expect(
        isinstance(units, int) and not isinstance(units, bool) and units >= 0,
        "units",
        "must be a non-negative integer",
    )
    _expect(isinstance(doc["tests"], list), "tests", "must be an array")
    seen_ids: dict[int, int] = {}
    rows: list[tuple[int, frozenset[int]]] = []
    for k, row in enumerate(doc["tests"]):
        path = f"tests[{k}]"
        _expect(isinstance(row, dict), path, "must be an object")
        _expect(set(row) == {"id", "equipment"}, path, "must have exactly 'id' and 'equipment'")
        tid = row["id"]
        _expect(
            isinstance(tid, int) and not isinstance(tid, bool) and tid >= 1,
            f"{path}.id",
            "must be a positive integer",
        )
        _expect(tid not in seen_ids, f"{path}.id", f"duplicate test id {tid}")
        seen_ids[tid] = k
        rows.append((tid, _unit_array(row["equipment"], f"{path}.equipment", units)))
    # Test ids are normalized to the dense range 1..n by sorted order.
    rows.sort(key=lambda r: r[0])
    tests = tuple(e for _, e in rows)
    _expect(isinstance(doc["thermal"], list), "thermal", "must be an array")
    thermal: list[ThermalConstraint] = []
    for k, row in enumerate(doc["thermal"]):
        path = f"thermal[{k}]"
        _expect(isinstance(row, dict), path, "must be an object")
        _expect(set(row) == {"scope", "capacity"}, path, "must have exactly 'scope' and 'capacity'")
        cap = row["capacity"]
        _expect(
            isinstance(cap, int) and not isinstance(cap, bool) and cap >= 1,
            f"{path}.capacity",
            "must be a positive integer",
        )
        thermal.append(ThermalConstraint(_unit_array(row["scope"], f"{path}.scope", units), cap))
    # Constraint order is normalized so equal instances serialize identically.
    order = sorted(range(len(thermal)), key=lambda c: (sorted(thermal[c].scope), thermal[c].capacity))
    inst = Instance(doc["name"], units, tests, tuple(thermal[c] for c in order))
    errors = [v for v in validate(inst) if not v.warning]
    if errors:
        first = errors[0]
        raise InstanceError(f"document: {first.message}" + (f" (+{len(errors) - 1} more)" if len(errors) > 1 else ""))
    return inst


def serialize_instance(inst: Instance) -> str:
    """Render the canonical JSON form: fixed key order, sorted arrays, one-based ids."""
    doc = {
        "name": inst.name,
        "units": inst.units,
        "tests": [
            {"id": t + 1, "equipment": sorted(u + 1 for u in e)} for t, e in enumerate(inst.tests)
        ],
        "thermal": [
            {"scope": sorted(u + 1 for u in tc.scope), "capacity": tc.capacity}
            for tc in inst.thermal
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_instance(path: str) -> Instance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def save_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(inst))


@dataclass(frozen=True)
class MergeMap:
    """Bookkeeping for merge_identical_tests.

    Attributes:
        to_merged: for each original test, the index of its merged test.
        groups: for each merged test, the original tests it stands for,
            in increasing order; the first entry is the representative.
    """

    to_merged: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]

    def expand_allocation(self, allocation: list[int] | tuple[int, ...]) -> list[int]:
        """Lift a merged-instance allocation back to the original tests."""
        if len(allocation) != len(self.groups):
            raise ValueError(
                f"allocation covers {len(allocation)} tests, merge map has {len(self.groups)}"
            )
        return [allocation[self.to_merged[t]] for t in range(len(self.to_merged))]


def merge_identical_tests(inst: Instance) -> tuple[Instance, MergeMap]:
    """Collapse tests with equal equipment sets into one.

    Tests needing exactly the same units can always share a configuration,
    so solving the merged instance loses nothing.  Order of first
    occurrence is preserved and the returned map lifts plans back.
    """
    index_of: dict[frozenset[int], int] = {}
    groups: list[list[int]] = []
    to_merged: list[int] = []
    for t, e in enumerate(inst.tests):
        if e in index_of:
            j = index_of[e]
            groups[j].append(t)
        else:
            j = len(groups)
            index_of[e] = j
            groups.append([t])
        to_merged.append(j)
    merged = Instance(
        inst.name,
        inst.units,
        tuple(inst.tests[g[0]] for g in groups),
        inst.thermal,
    )
    return merged, MergeMap(tuple(to_merged), tuple(tuple(g) for g in groups))


def scopes_overlap(inst: Instance) -> bool:
    """True when two thermal constraints share a unit.

    Overlapping scopes force the solver to count switches over one joint
    activity buffer instead of per-constraint buffers.
    """
    seen: set[int] = set()
    for tc in inst.thermal:
        if seen & tc.scope:
            return True
        seen |= tc.scope
    return False
