"""Exhaustive reference solvers for small cases.

These are deliberately independent of the production code paths: plain
dynamic programs over explicitly enumerated states.  They exist so the
greedy support construction, the lower bounds, and the branch-and-bound
solver can each be checked against ground truth on small inputs.
"""

from __future__ import annotations

from itertools import combinations

from .instance import Instance
from .plan import Plan
from .switch_engine import CardProfile, SetVarBounds

ORACLE_SEQ_MAX_POSITIONS = 5
ORACLE_SEQ_MAX_ITEMS = 4
ORACLE_PLAN_MAX_TESTS = 7
ORACLE_PLAN_MAX_UNITS = 8
ORACLE_PLAN_RELAXED_TESTS = 8
ORACLE_PLAN_RELAXED_UNITS = 6


def _feasible_sets(
    lb: frozenset[int], ub: frozenset[int], lo: int, hi: int
) -> list[frozenset[int]]:
    if not lb <= ub or len(lb) > hi:
        return []
    extra = sorted(ub - lb)
    out: list[frozenset[int]] = []
    for k in range(max(lo - len(lb), 0), min(hi - len(lb), len(extra)) + 1):
        for combo in combinations(extra, k):
            out.append(lb | frozenset(combo))
    return out


def oracle_switch(
    bounds: SetVarBounds, card: CardProfile, must_visit: frozenset[int] = frozenset()
) -> int | None:
    """Minimum additions over all feasible sequences visiting must_visit.

    Returns None when no feasible sequence covers must_visit.  Guarded to
    tiny inputs; the state space is every (position, buffer, visited
    subset) triple.
    """
    n = bounds.length
    universe = sorted(bounds.universe() | must_visit)
    if n > ORACLE_SEQ_MAX_POSITIONS or len(universe) > ORACLE_SEQ_MAX_ITEMS:
        raise ValueError(
            f"oracle_switch guard: {n} positions / {len(universe)} items exceeds "
            f"{ORACLE_SEQ_MAX_POSITIONS} / {ORACLE_SEQ_MAX_ITEMS}"
        )
    if n == 0:
        return 0 if not must_visit else None
    goal = frozenset(must_visit)
    # State: (buffer, visited-part-of-goal) -> min additions so far.
    states: dict[tuple[frozenset[int], frozenset[int]], int] = {}
    for first in _feasible_sets(bounds.lb[0], bounds.ub[0], card.lo[0], card.hi[0]):
        states[(first, first & goal)] = 0
    for i in range(1, n):
        nxt: dict[tuple[frozenset[int], frozenset[int]], int] = {}
        options = _feasible_sets(bounds.lb[i], bounds.ub[i], card.lo[i], card.hi[i])
        for (buf, seen), cost in states.items():
            for cur in options:
                key = (cur, seen | (cur & goal))
                c = cost + len(cur - buf)
                if c < nxt.get(key, c + 1):
                    nxt[key] = c
        states = nxt
    best = None
    for (_, seen), cost in states.items():
        if seen == goal and (best is None or cost < best):
            best = cost
    return best


def _rgs_partitions(n: int):
    """All set partitions of range(n), as block lists, in restricted-growth order."""
    code = [0] * n
    while True:
        blocks: list[list[int]] = []
        for t, g in enumerate(code):
            if g == len(blocks):
                blocks.append([])
            blocks[g].append(t)
        yield blocks
        # advance the restricted growth string
        i = n - 1
        while i > 0:
            if code[i] <= max(code[:i]):
                code[i] += 1
                for j in range(i + 1, n):
                    code[j] = 0
                break
            code[i] = 0
            i -= 1
        else:
            return


class _PlanSearch:
    """Shared context for the exhaustive plan oracle."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.scope_units = frozenset().union(*(tc.scope for tc in inst.thermal)) if inst.thermal else frozenset()
        self.tested = inst.tested_units()
        self.discount = len(self.tested & self.scope_units)
        self._activity_memo: dict[frozenset[int], list[frozenset[int]] | None] = {}

    def block_requires(self, block: list[int]) -> frozenset[int]:
        req: set[int] = set()
        for t in block:
            req |= self.inst.tests[t]
        return frozenset(req)

    def activity_options(self, req: frozenset[int]) -> list[frozenset[int]] | None:
        """All in-scope activity sets covering req, exact on every scope.

        None when the block is infeasible.  Out-of-scope units are handled
        analytically (kept active once needed, which is never worse).
        """
        req_in = req & self.scope_units
        if req_in in self._activity_memo:
            return self._activity_memo[req_in]
        pool = sorted(self.scope_units - req_in)
        out: list[frozenset[int]] = []
        for k in range(len(pool) + 1):
            for combo in combinations(pool, k):
                cand = req_in | frozenset(combo)
                if all(len(cand & tc.scope) == tc.capacity for tc in self.inst.thermal):
                    out.append(cand)
        result = out or None
        self._activity_memo[req_in] = result
        return result


def _min_switch_order(
    ctx: _PlanSearch, blocks: list[list[int]], best_z: int | None
) -> tuple[int, list[int], list[frozenset[int]]] | None:
    """Best block order and activity choice for one packing.

    Returns (z, order, in-scope activity per position) or None when no
    order beats best_z.  Depth-first over orders, carrying the frontier
    (activity set -> cheapest additions so far, with a traceback chain)
    and pruning on its minimum; additions only grow along a prefix.
    """
    options = [ctx.activity_options(ctx.block_requires(b)) for b in blocks]
    best: tuple[int, list[int], list[frozenset[int]]] | None = None
    bound = best_z
    Node = tuple  # (buffer, parent node or None)

    def rec(remaining: list[int], frontier: dict[frozenset[int], tuple[int, Node | None]], order: list[int]) -> None:
        nonlocal best, bound
        floor = min(cost for cost, _ in frontier.values())
        if bound is not None and floor - ctx.discount >= bound:
            return
        if not remaining:
            buf, (cost, parent) = min(
                frontier.items(), key=lambda kv: (kv[1][0], sorted(kv[0]))
            )
            z = cost - ctx.discount
            if bound is None or z < bound:
                acts: list[frozenset[int]] = []
                node: Node | None = (buf, parent)
                while node is not None:
                    acts.append(node[0])
                    node = node[1]
                acts.reverse()
                best = (z, list(order), acts[1:])  # drop the virtual empty start
                bound = z
            return
        for j in remaining:
            nxt: dict[frozenset[int], tuple[int, Node | None]] = {}
            for cand in options[j]:  # type: ignore[union-attr]
                pick: tuple[int, Node | None] | None = None
                for buf, (cost, parent) in frontier.items():
                    c = cost + len(cand - buf)
                    if pick is None or c < pick[0]:
                        pick = (c, (buf, parent))
                assert pick is not None
                nxt[cand] = pick
            rec([x for x in remaining if x != j], nxt, order + [j])

    rec(list(range(len(blocks))), {frozenset(): (0, None)}, [])
    return best


def oracle_plan(inst: Instance) -> tuple[int, int, Plan]:
    """Exhaustive lexicographic optimum (configurations, then switches).

    Enumerates every packing as a restricted-growth string, keeps those of
    minimum feasible size, and for each searches all configuration orders
    with all exact-cardinality activity completions.  Guarded to tiny
    instances.
    """
    n, m = inst.n_tests, inst.units
    if not (
        (n <= ORACLE_PLAN_MAX_TESTS and m <= ORACLE_PLAN_MAX_UNITS)
        or (n <= ORACLE_PLAN_RELAXED_TESTS and m <= ORACLE_PLAN_RELAXED_UNITS)
    ):
        raise ValueError(
            f"oracle_plan guard: {n} tests / {m} units exceeds "
            f"{ORACLE_PLAN_MAX_TESTS} / {ORACLE_PLAN_MAX_UNITS} "
            f"(or {ORACLE_PLAN_RELAXED_TESTS} / {ORACLE_PLAN_RELAXED_UNITS})"
        )
    if n == 0:
        return 0, 0, Plan((), ())
    ctx = _PlanSearch(inst)
    feasible: dict[frozenset[int], bool] = {}

    def block_ok(block: list[int]) -> bool:
        key = frozenset(block)
        if key not in feasible:
            feasible[key] = ctx.activity_options(ctx.block_requires(block)) is not None
        return feasible[key]

    best_c = None
    for blocks in _rgs_partitions(n):
        if best_c is not None and len(blocks) >= best_c:
            continue
        if all(block_ok(b) for b in blocks):
            best_c = len(blocks)
    if best_c is None:
        raise ValueError("instance admits no plan (some test is unschedulable)")

    best: tuple[int, list[list[int]], list[int], list[frozenset[int]]] | None = None
    for blocks in _rgs_partitions(n):
        if len(blocks) != best_c or not all(block_ok(b) for b in blocks):
            continue
        got = _min_switch_order(ctx, blocks, best[0] if best else None)
        if got is not None:
            z, order, acts = got
            if best is None or z < best[0]:
                best = (z, blocks, order, acts)
        if best is not None and best[0] == 0:
            break
    assert best is not None
    z_star, blocks, order, acts_in = best

    # Assemble the plan: ordered blocks, padded activity, and out-of-scope
    # tested units kept active from first need to the end.
    alloc = [0] * n
    for pos, j in enumerate(order):
        for t in blocks[j]:
            alloc[t] = pos
    activity: list[frozenset[int]] = []
    carried: set[int] = set()
    for pos, j in enumerate(order):
        carried |= ctx.block_requires(blocks[j]) - ctx.scope_units
        activity.append(acts_in[pos] | frozenset(carried))
    plan = Plan(tuple(alloc), tuple(activity))
    return best_c, z_star, plan
