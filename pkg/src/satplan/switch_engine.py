"""Reasoning over sequences of bounded unit-set buffers.

The solver views the activity of one thermal scope across the ordered
configurations as a sequence of set buffers: position i must contain the
units already forced active there (lower bound), may only use units still
allowed there (upper bound), and must respect a per-position cardinality
profile.  This module builds a switch-minimal support sequence greedily
and derives lower bounds on the number of additions any completion needs,
including completions that must eventually visit a given set of units.

Positions are zero-based.  Horizon indices use n+1 as the "never
required" sentinel and n as the "never excluded" sentinel, so comparisons
between the two kinds stay meaningful near the end of the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key


@dataclass(frozen=True)
class CardProfile:
    """Per-position cardinality bounds for a buffer sequence."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    @staticmethod
    def exact(size: int, n: int) -> "CardProfile":
        """Profile requiring exactly ``size`` items at each of ``n`` positions."""
        return CardProfile((size,) * n, (size,) * n)


@dataclass(frozen=True)
class SetVarBounds:
    """Lower and upper set bounds of each position of a buffer sequence."""

    lb: tuple[frozenset[int], ...]
    ub: tuple[frozenset[int], ...]

    @property
    def length(self) -> int:
        return len(self.lb)

    def universe(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.ub:
            out |= s
        return frozenset(out)


@dataclass(frozen=True)
class Stretch:
    """Maximal run of positions over which one item stays buffered.

    The stretch is optional when no position of the run requires the item,
    so a different completion could drop it without losing feasibility.
    """

    item: int
    start: int
    end: int
    optional: bool


@dataclass(frozen=True)
class SwitchSupport:
    """Outcome of the greedy support construction.

    ``switches`` counts additions between consecutive positions; the
    initial content of the first position is not counted.  ``removals``
    counts the opposite direction.  ``fail_pos`` names the position where
    construction became impossible, or is None when ``feasible``.
    """

    feasible: bool
    fail_pos: int | None
    sequence: tuple[frozenset[int], ...]
    switches: int
    removals: int
    stretches: tuple[Stretch, ...]
    optional_stretches: int
    optional_items: int
    visited: frozenset[int]


def horizon_indices(bounds: SetVarBounds, item: int, pos: int) -> tuple[int, int]:
    """Next position at or after ``pos`` where ``item`` is required, and
    where it is excluded.

    Returns (next_required, next_excluded) with sentinels n+1 and n
    respectively when no such position exists.
    """
    n = bounds.length
    nxt_lb = n + 1
    for i in range(pos, n):
        if item in bounds.lb[i]:
            nxt_lb = i
            break
    nxt_ub = n
    for i in range(pos, n):
        if item not in bounds.ub[i]:
            nxt_ub = i
            break
    return nxt_lb, nxt_ub


def _criterion(alb: int, aub: int, blb: int, bub: int) -> bool:
    # Definition is stated for the smaller item id in the first role.
    return (alb < aub and alb <= blb) or (blb > bub and aub >= bub)


def precedes(bounds: SetVarBounds, pos: int, u1: int, u2: int) -> bool:
    """Priority relation between items at a position.

    Items required sooner (and not excluded before that) come first;
    items excluded sooner go last.  The relation is a strict total order
    for distinct items: for equal horizon profiles the smaller id wins.
    """
    if u1 == u2:
        return False
    a_lb, a_ub = horizon_indices(bounds, u1, pos)
    b_lb, b_ub = horizon_indices(bounds, u2, pos)
    if u1 < u2:
        return _criterion(a_lb, a_ub, b_lb, b_ub)
    return not _criterion(b_lb, b_ub, a_lb, a_ub)


def _horizon_tables(bounds: SetVarBounds, items: frozenset[int]) -> tuple[dict[int, list[int]], dict[int, list[int]]]:
    # Backward sweep: tables[u][i] = next required / next excluded position from i.
    n = bounds.length
    nlb: dict[int, list[int]] = {}
    nub: dict[int, list[int]] = {}
    for u in items:
        row_lb = [n + 1] * (n + 1)
        row_ub = [n] * (n + 1)
        for i in range(n - 1, -1, -1):
            row_lb[i] = i if u in bounds.lb[i] else row_lb[i + 1]
            row_ub[i] = i if u not in bounds.ub[i] else row_ub[i + 1]
        nlb[u] = row_lb
        nub[u] = row_ub
    return nlb, nub


def find_support(bounds: SetVarBounds, card: CardProfile) -> SwitchSupport:
    """Greedy construction of a switch-minimal feasible buffer sequence.

    Each position keeps what the previous buffer may retain, adds what is
    required, then trims or pads to the cardinality bounds.  Trimming
    drops the lowest-priority items, padding recruits the highest-priority
    outsiders, with priority taken at the current position.  The first
    position is filled up to its upper cardinality bound: initial content
    costs nothing, only additions between positions count, so free
    prefetching there can only help.
    """
    n = bounds.length
    items = bounds.universe()
    nlb, nub = _horizon_tables(bounds, items)

    def order_at(pos: int, pool: set[int]) -> list[int]:
        def cmp(x: int, y: int) -> int:
            a, b = (x, y) if x < y else (y, x)
            first = _criterion(nlb[a][pos], nub[a][pos], nlb[b][pos], nub[b][pos])
            if x < y:
                return -1 if first else 1
            return 1 if first else -1

        return sorted(pool, key=cmp_to_key(cmp))

    def fail(pos: int) -> SwitchSupport:
        return SwitchSupport(False, pos, (), 0, 0, (), 0, 0, frozenset())

    seq: list[frozenset[int]] = []
    prev: frozenset[int] = frozenset()
    for i in range(n):
        lb_i, ub_i = bounds.lb[i], bounds.ub[i]
        if not lb_i <= ub_i or len(lb_i) > card.hi[i] or len(ub_i) < card.lo[i]:
            return fail(i)
        cur = (prev & ub_i) | lb_i
        target = card.hi[i] if i == 0 else card.lo[i]
        if len(cur) > card.hi[i]:
            ranked = order_at(i, set(cur))
            kept = frozenset(ranked[: card.hi[i]])
            if not lb_i <= kept:  # required items always rank first
                return fail(i)
            cur = kept
        elif len(cur) < target:
            pool = set(ub_i - cur)
            ranked = order_at(i, pool)
            cur = cur | frozenset(ranked[: target - len(cur)])
            if len(cur) < card.lo[i]:
                return fail(i)
        seq.append(frozenset(cur))
        prev = cur

    switches = sum(len(seq[i + 1] - seq[i]) for i in range(n - 1))
    removals = sum(len(seq[i] - seq[i + 1]) for i in range(n - 1))
    visited = frozenset().union(*seq) if seq else frozenset()
    required_somewhere = frozenset().union(*bounds.lb) if bounds.lb else frozenset()

    stretches: list[Stretch] = []
    for u in sorted(visited):
        i = 0
        while i < n:
            if u in seq[i]:
                j = i
                needed = False
                while j < n and u in seq[j]:
                    needed = needed or u in bounds.lb[j]
                    j += 1
                stretches.append(Stretch(u, i, j - 1, not needed))
                i = j
            else:
                i += 1
    beta = sum(1 for s in stretches if s.optional)
    gamma = len(visited - required_somewhere)
    return SwitchSupport(
        True, None, tuple(seq), switches, removals, tuple(stretches), beta, gamma, visited
    )


def lb_switch_plus(
    bounds: SetVarBounds, card: CardProfile, must_visit: frozenset[int]
) -> int:
    """Lower bound on additions for sequences whose union covers must_visit.

    Starts from the unconstrained minimum (the greedy support's switch
    count) and accounts for the extra visits: each missing item costs one
    addition, optional stretches of the support can be repurposed for
    free, but optional items the support relies on must still be paid for.

    The strengthened term is only valid when everything the support
    buffers is itself unavoidable for covering sequences, that is, either
    in must_visit or required at some position.  When the support visits
    avoidable filler the plain minimum is returned instead.  Never returns
    less than the unconstrained minimum.
    """
    sup = find_support(bounds, card)
    if not sup.feasible:
        raise ValueError(f"bounds admit no sequence (position {sup.fail_pos})")
    return _visiting_bound(bounds, sup, must_visit)


def _visiting_bound(bounds: SetVarBounds, sup: SwitchSupport, must_visit: frozenset[int]) -> int:
    required = frozenset().union(*bounds.lb) if bounds.lb else frozenset()
    if not sup.visited <= must_visit | required:
        return sup.switches
    missing = len(must_visit - sup.visited)
    visiting = sup.switches + missing - sup.optional_stretches + sup.optional_items
    return max(sup.switches, visiting)


def filter_switch(
    bounds: SetVarBounds,
    card: CardProfile,
    z_lo: int,
    z_hi: int,
    must_visit: frozenset[int],
) -> tuple[int, bool]:
    """Tighten the switch-count lower bound; report failure.

    Returns (new_lo, ok).  ok is False when the bounds admit no sequence,
    when some must_visit item is excluded everywhere, or when the new
    lower bound exceeds z_hi.  On failure new_lo is the best bound known.
    """
    sup = find_support(bounds, card)
    if not sup.feasible:
        return z_lo, False
    reachable = frozenset().union(*bounds.ub) if bounds.ub else frozenset()
    if not must_visit <= reachable:
        return z_lo, False
    new_lo = max(z_lo, _visiting_bound(bounds, sup, must_visit))
    return new_lo, new_lo <= z_hi
