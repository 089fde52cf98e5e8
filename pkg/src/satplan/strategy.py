"""Branching heuristics and the staged solving strategy.

The impact of placing test t in slot i against one thermal scope is the
fraction of that scope's column freedom the placement would consume:
with q scope units, capacity b and d of the test's scope units still
undecided in the column, the impact is 1 - q(b-d) / (b(q-d)), clamped
to 1 when the column would be fully decided.  Variable choice is
fail-first (fewest preferred slots per unit of summed impact), value
choice is least impact first.  Preferred slots are the already-opened
ones plus the next fresh slot; slots beyond that are symmetric
duplicates and only ever tried as fallback.

The staged strategy runs a backtrack-free greedy descent, an exact
packing pass, a resequencing pass over the packed configurations, and
finally the full exact solve seeded with everything learnt.  Its
horizon is the greedy configuration count, which every later phase
provably fits inside.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from fractions import Fraction

from .baselines import first_fit_pack
from .instance import Instance
from .plan import ObjectiveValue, Plan, count_switches, objective


def delta(bundle, m, t: int, i: int, c: int) -> int:
    """Undecided activity cells the placement (t -> slot i) would claim in scope c."""
    return sum(
        m.ihi[bundle.orows[u][i]] - m.ilo[bundle.orows[u][i]]
        for u in bundle.test_scope_units[t][c]
    )


def impact_conf(bundle, m, t: int, i: int, c: int) -> Fraction:
    q, cap = bundle.scope_sizes[c]
    d = delta(bundle, m, t, i, c)
    if d == 0:
        return Fraction(0)
    if d >= cap or d == q:
        return Fraction(1)
    return 1 - Fraction(q * (cap - d), cap * (q - d))


def gamma(bundle, m, t: int, i: int) -> Fraction:
    k = len(bundle.scope_sizes)
    if k == 0:
        return Fraction(0)
    return sum(impact_conf(bundle, m, t, i, c) for c in range(k)) / k


def _opened_top(bundle, m) -> int:
    top = -1
    for a in bundle.alloc:
        if m.mfixed(a):
            top = max(top, m.mmin(a))
    return top


def _preferred(bundle, m, t: int, top: int) -> list[int]:
    dom = m.mvals(bundle.alloc[t])
    pref = [v for v in dom if v <= top + 1]
    return pref if pref else [dom[0]]


def select_impact(bundle, m):
    top = _opened_top(bundle, m)
    best = None
    for t in range(len(bundle.alloc)):
        a = bundle.alloc[t]
        if m.mfixed(a):
            continue
        pref = _preferred(bundle, m, t, top)
        gs = [gamma(bundle, m, t, v) for v in pref]
        tot = sum(gs)
        if tot == 0:
            score = (1, Fraction(len(pref)))
            val = pref[0]
        else:
            score = (0, Fraction(len(pref)) / tot)
            val = min(zip(gs, pref))[1]
        if best is None or (score, t) < (best[0], best[1]):
            best = (score, t, val)
    if best is None:
        return None
    return ("alloc", bundle.alloc[best[1]], best[2])


def select_wdeg(bundle, m):
    """Fallback: domain size over summed weights of watching propagators."""
    best = None
    for t in range(len(bundle.alloc)):
        a = bundle.alloc[t]
        if m.mfixed(a):
            continue
        w = sum(m.props[pid].weight for pid in m.mwatch[a])
        score = Fraction(m.msize(a), max(1, w))
        if best is None or (score, t) < (best[0], best[1]):
            best = (score, t)
    if best is None:
        return None
    a = bundle.alloc[best[1]]
    return ("alloc", a, m.mmin(a))


def select_lex(bundle, m):
    for t in range(len(bundle.alloc)):
        a = bundle.alloc[t]
        if not m.mfixed(a):
            return ("alloc", a, m.mmin(a))
    return None


def greedy_descent(inst: Instance) -> Plan:
    """Backtrack-free first solution.

    With the trivial heuristic (tests in id order, lowest open slot
    first) the descent never needs to backtrack, so it reduces to
    first-fit packing with stay-on activity padding.
    """
    return first_fit_pack(inst)


@dataclass
class StageReport:
    name: str
    status: str
    configurations: int | None
    switches: int | None
    stats: object | None


@dataclass
class MultiResult:
    status: str
    plan: Plan
    objective: ObjectiveValue
    bounds: dict
    stages: list[StageReport]
    slots: int


def multi_stage(
    inst: Instance,
    options=None,
    budget_s: float | None = None,
    split: tuple[float, float, float] = (0.2, 0.2, 0.6),
) -> MultiResult:
    """Greedy, exact packing, resequencing, then the full exact solve."""
    from . import solver as sv

    opts = options or sv.SolveOptions()
    t0 = time.monotonic()

    def left() -> float | None:
        if budget_s is None:
            return None
        return max(0.0, budget_s - (time.monotonic() - t0))

    greedy = greedy_descent(inst)
    s = max(1, greedy.n_configs)
    weight = (inst.units * s + 1) // 2
    stages = [
        StageReport("greedy", "feasible", greedy.n_configs, count_switches(inst, greedy), None)
    ]

    pack_best = greedy
    configs_proved: int | None = None
    if budget_s is not None and split[0] <= 0:
        stages.append(StageReport("packing", "skipped", None, None, None))
    else:
        b2 = None if budget_s is None else min(split[0] * budget_s, left())
        p2 = sv.solve_packing(
            inst, replace(opts, slots=s, budget_s=b2, node_limit=None, seed_plan=greedy)
        )
        if p2.plan is not None:
            pack_best = p2.plan
        if p2.status == "optimal":
            configs_proved = p2.plan.n_configs
        stages.append(
            StageReport(
                "packing",
                p2.status,
                pack_best.n_configs,
                count_switches(inst, pack_best),
                p2.stats,
            )
        )

    seq_mode = opts.mode if opts.mode in ("weighted", "lex", "switches") else "lex"
    candidates = [greedy, pack_best]
    if budget_s is not None and split[1] <= 0:
        stages.append(StageReport("sequencing", "skipped", None, None, None))
    else:
        b3 = None if budget_s is None else min(split[1] * budget_s, left())
        p3 = sv.solve_sequencing(
            inst,
            pack_best,
            replace(
                opts,
                mode=seq_mode,
                budget_s=b3,
                node_limit=None,
                seed_plan=None,
                configs_lb=configs_proved,
            ),
        )
        if p3.plan is not None:
            candidates.append(p3.plan)
        stages.append(
            StageReport(
                "sequencing",
                p3.status,
                p3.plan.n_configs if p3.plan else None,
                count_switches(inst, p3.plan) if p3.plan else None,
                p3.stats,
            )
        )

    seed = min(candidates, key=lambda p: sv._plan_key(inst, p, opts.mode, weight))
    if budget_s is not None and split[2] <= 0:
        stages.append(StageReport("full", "skipped", None, None, None))
        return MultiResult(
            "feasible", seed, objective(inst, seed, s), {}, stages, s
        )
    p4 = sv.solve(
        inst,
        replace(opts, slots=s, budget_s=left(), seed_plan=seed, configs_lb=configs_proved),
    )
    if p4.plan is None:
        raise sv.SolverError("seeded full solve returned no plan")
    stages.append(
        StageReport("full", p4.status, p4.plan.n_configs, count_switches(inst, p4.plan), p4.stats)
    )
    return MultiResult(p4.status, p4.plan, p4.objective, p4.bounds, stages, s)
