"""Static lower bounds on configuration counts from co-activation needs.

Two units are neighbours when some test requires both, so they must be
active together at least once.  A unit's neighbourhood therefore has to
be covered by the configurations in which the unit itself is active, at
most a scope capacity per configuration, which bounds how many
configurations each unit needs and, summed over a scope, how many the
whole campaign needs.
"""

from __future__ import annotations

from .instance import Instance


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def neighborhood(inst: Instance) -> list[frozenset[int]]:
    """For each unit, the units sharing at least one test with it.

    A tested unit is its own neighbour; untested units have an empty
    neighbourhood.
    """
    out: list[set[int]] = [set() for _ in range(inst.units)]
    for e in inst.tests:
        for u in e:
            out[u] |= e
    return [frozenset(s) for s in out]


def lb_ntested(inst: Instance, neigh: list[frozenset[int]] | None = None) -> list[int]:
    """Per-unit lower bound on the number of configurations it is active in."""
    if neigh is None:
        neigh = neighborhood(inst)
    out = []
    for u in range(inst.units):
        if not neigh[u]:
            out.append(0)
            continue
        best = 1  # a tested unit is active wherever its tests run
        for tc in inst.thermal:
            best = max(best, _ceil_div(len(neigh[u] & tc.scope), tc.capacity))
        out.append(best)
    return out


def lb_configs(inst: Instance, n_lb: list[int] | None = None) -> int:
    """Lower bound on the number of configurations of any plan.

    Each configuration accommodates at most a scope's capacity of
    active scope units, so the per-unit activity needs of a scope, summed,
    bound the configuration count from below.
    """
    if inst.n_tests == 0:
        return 0
    if n_lb is None:
        n_lb = lb_ntested(inst)
    best = 1
    for tc in inst.thermal:
        total = sum(n_lb[u] for u in tc.scope)
        best = max(best, _ceil_div(total, tc.capacity))
    return best
