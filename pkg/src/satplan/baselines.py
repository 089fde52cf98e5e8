"""Reference heuristics: first-fit packing and tour-style resequencing.

These are deliberately simple competitors for the exact solver.  The
packer mimics a campaign manager working down the test list, opening a
new configuration whenever a test does not fit; the resequencer treats
configurations as cities and minimises symmetric-difference mileage
over an open tour, exactly for small fleets and by local search above
that.
"""

from __future__ import annotations

from .instance import Instance
from .plan import Plan, complete_activity


def first_fit_pack(inst: Instance) -> Plan:
    """Pack tests in id order into the first configuration they fit."""
    groups: list[list[int]] = []
    unions: list[set[int]] = []
    alloc: list[int] = []
    for t, eq in enumerate(inst.tests):
        placed = -1
        for k, req in enumerate(unions):
            new = req | eq
            if all(len(new & tc.scope) <= tc.capacity for tc in inst.thermal):
                placed = k
                break
        if placed < 0:
            groups.append([])
            unions.append(set())
            placed = len(groups) - 1
        groups[placed].append(t)
        unions[placed] |= eq
        alloc.append(placed)
    activity = complete_activity(inst, [frozenset(req) for req in unions])
    return Plan(tuple(alloc), activity)


_EXACT_TOUR_LIMIT = 15


def tsp_sequence(
    activities: "list[frozenset[int]] | tuple[frozenset[int], ...]",
    exact_limit: int = _EXACT_TOUR_LIMIT,
) -> tuple[tuple[int, ...], int, bool]:
    """Order activity sets to minimise start size plus Hamming distances.

    Returns (order, cost, exact).  Up to exact_limit sets the open-path
    optimum is found by subset dynamic programming; beyond that a
    nearest-neighbour tour improved by first-improvement 2-opt is used
    and exact is False.
    """
    c = len(activities)
    if c == 0:
        return (), 0, True
    masks = [sum(1 << u for u in a) for a in activities]
    start = [m.bit_count() for m in masks]
    dist = [[(masks[i] ^ masks[j]).bit_count() for j in range(c)] for i in range(c)]
    if c == 1:
        return (0,), start[0], True
    if c <= exact_limit:
        return _tour_exact(c, start, dist)
    return _tour_local(c, start, dist)


def _tour_exact(c: int, start: list[int], dist: list[list[int]]) -> tuple[tuple[int, ...], int, bool]:
    big = 1 << 60
    full = (1 << c) - 1
    dp = [[big] * c for _ in range(full + 1)]
    parent = [[-1] * c for _ in range(full + 1)]
    for i in range(c):
        dp[1 << i][i] = start[i]
    for mask in range(1, full + 1):
        row = dp[mask]
        for last in range(c):
            cur = row[last]
            if cur >= big:
                continue
            dl = dist[last]
            for nxt in range(c):
                bit = 1 << nxt
                if mask & bit:
                    continue
                cand = cur + dl[nxt]
                if cand < dp[mask | bit][nxt]:
                    dp[mask | bit][nxt] = cand
                    parent[mask | bit][nxt] = last
    best_last = min(range(c), key=lambda i: (dp[full][i], i))
    cost = dp[full][best_last]
    order = []
    mask, last = full, best_last
    while last >= 0:
        order.append(last)
        mask, last = mask ^ (1 << last), parent[mask][last]
    order.reverse()
    return tuple(order), cost, True


def _tour_local(c: int, start: list[int], dist: list[list[int]]) -> tuple[tuple[int, ...], int, bool]:
    first = min(range(c), key=lambda i: (start[i], i))
    order = [first]
    left = set(range(c)) - {first}
    while left:
        last = order[-1]
        nxt = min(left, key=lambda j: (dist[last][j], j))
        order.append(nxt)
        left.remove(nxt)

    def cost_of(seq: list[int]) -> int:
        return start[seq[0]] + sum(dist[a][b] for a, b in zip(seq, seq[1:]))

    cost = cost_of(order)
    improved = True
    while improved:
        improved = False
        for i in range(c - 1):
            for j in range(i + 1, c):
                cand = order[:i] + order[i : j + 1][::-1] + order[j + 1 :]
                cc = cost_of(cand)
                if cc < cost:
                    order, cost = cand, cc
                    improved = True
                    break
            if improved:
                break
    return tuple(order), cost, False


def cm_tsp(inst: Instance) -> tuple[Plan, bool]:
    """First-fit packing followed by tour resequencing of its configurations.

    The configurations are re-padded in the new order so retained units
    are kept where possible.  Returns the plan and whether the tour was
    solved exactly.
    """
    packed = first_fit_pack(inst)
    order, _, exact = tsp_sequence(packed.activity)
    unions: list[frozenset[int]] = [frozenset() for _ in range(packed.n_configs)]
    for t, k in enumerate(packed.allocation):
        unions[k] = unions[k] | inst.tests[t]
    required = [unions[k] for k in order]
    position = {old: new for new, old in enumerate(order)}
    activity = complete_activity(inst, required)
    alloc = tuple(position[k] for k in packed.allocation)
    return Plan(alloc, activity), exact
