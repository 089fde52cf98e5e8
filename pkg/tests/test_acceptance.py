"""Acceptance gate.

Eight checks, each printing one PASS/FAIL line: the worked example, oracle
equivalence on a random family, exhaustive support-construction agreement,
the visiting bound's soundness and bite, the packing bound's soundness,
the ablation sweep, baseline dominance, and determinism.  The sweep runs
5 seeds x 6 classes x 4 solver configurations at a 60 s budget and is by
far the slowest part of the suite.
"""

import itertools
import random
import time

import pytest

from satplan.baselines import cm_tsp
from satplan.bench import Cell, render_figures, run_cell, write_report
from satplan.generator import generate
from satplan.oracles import oracle_plan, oracle_switch
from satplan.packing_bounds import lb_configs
from satplan.plan import count_switches, verify
from satplan.solver import SolveOptions, solve
from satplan.strategy import multi_stage
from satplan.switch_engine import (
    CardProfile,
    SetVarBounds,
    find_support,
    lb_switch_plus,
)

from conftest import rand_dominated, rand_overlap


def _line(tag: str, ok: bool, detail: str) -> None:
    print(f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")


# -- support-construction family (checks 3 and 4) ---------------------

_PROFILES = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _position_states(nu):
    out = []
    for states in itertools.product((0, 1, 2), repeat=nu):
        lb = frozenset(u for u in range(nu) if states[u] == 2)
        ub = frozenset(u for u in range(nu) if states[u] >= 1)
        out.append((lb, ub))
    return out


@pytest.fixture(scope="module")
def support_sweep():
    """Differential sweep of find_support and the visiting bound.

    Exhaustive over every lower/upper set-bound pattern for 1-2 items with
    up to 4 positions and for 3 items with up to 2, under all uniform
    cardinality profiles up to 2; topped up with a seeded sample of the
    3-item, 3-4 position space under independent per-position profiles.
    """
    stats = {
        "cases": 0,
        "mismatches": 0,
        "sound_checked": 0,
        "unsound": 0,
        "eligible": 0,
        "strict": 0,
    }

    def check(bounds, card, subsets):
        stats["cases"] += 1
        sup = find_support(bounds, card)
        true = oracle_switch(bounds, card)
        if sup.feasible:
            if true != sup.switches:
                stats["mismatches"] += 1
                return
        elif true is not None:
            stats["mismatches"] += 1
            return
        if not sup.feasible:
            return
        for must in subsets:
            lb = lb_switch_plus(bounds, card, must)
            goal = oracle_switch(bounds, card, must)
            if goal is not None:
                stats["sound_checked"] += 1
                if lb > goal:
                    stats["unsound"] += 1
            if not must <= sup.visited:
                stats["eligible"] += 1
                if lb > sup.switches:
                    stats["strict"] += 1

    plan = ((1, (1, 2, 3, 4)), (2, (1, 2, 3, 4)), (3, (1, 2)))
    for nu, lengths in plan:
        states = _position_states(nu)
        subsets = [
            frozenset(c)
            for r in range(nu + 1)
            for c in itertools.combinations(range(nu), r)
        ]
        for n in lengths:
            for combo in itertools.product(states, repeat=n):
                bounds = SetVarBounds(
                    tuple(c[0] for c in combo), tuple(c[1] for c in combo)
                )
                for lo, hi in _PROFILES:
                    check(bounds, CardProfile((lo,) * n, (hi,) * n), subsets)

    rng = random.Random(20480)
    states3 = _position_states(3)
    subsets3 = [
        frozenset(c) for r in range(4) for c in itertools.combinations(range(3), r)
    ]
    for _ in range(4000):
        n = rng.choice((3, 4))
        combo = [rng.choice(states3) for _ in range(n)]
        bounds = SetVarBounds(
            tuple(c[0] for c in combo), tuple(c[1] for c in combo)
        )
        prof = [rng.choice(_PROFILES) for _ in range(n)]
        card = CardProfile(tuple(p[0] for p in prof), tuple(p[1] for p in prof))
        check(bounds, card, subsets3)
    return stats


# -- ablation sweep (checks 6 and 7) ----------------------------------

SWEEP_CLASSES = tuple((s, p) for s in (30, 50, 80) for p in ("hot", "cold"))
SWEEP_SEEDS = (1, 2, 3, 4, 5)
SWEEP_BUDGET = 60.0
SWEEP_CONFIGS = {
    "full": {},
    "base-variant": {"variant": "base"},
    "wdeg-strategy": {"strategy": "wdeg"},
    "single-stage": {"multi": False},
}


def _uniform_weighted(row) -> int:
    # score every run at the same horizon (the test count) so plans from
    # different stages and budgets are comparable
    meta = dict(part.split("=") for part in row["gen"].split(";")[1:])
    units, tests = int(meta["units"]), int(meta["tests"])
    w = (units * tests + 1) // 2
    return w * row["nconf"] + row["nswitch"]


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    rows = {name: [] for name in SWEEP_CONFIGS}
    for size, phase in SWEEP_CLASSES:
        for seed in SWEEP_SEEDS:
            for name, kw in SWEEP_CONFIGS.items():
                rows[name].append(
                    run_cell(Cell(size, phase, seed, budget_s=SWEEP_BUDGET, **kw))
                )
    art = tmp_path_factory.mktemp("bench")
    report = str(art / "ablation.csv")
    for name in SWEEP_CONFIGS:
        write_report(rows[name], report)
    render_figures(rows["full"], report)
    return {"rows": rows, "report": report}


# -- the checks -------------------------------------------------------


def test_worked_example_fast_optimum(fig1, fig1_plan_b3):
    t0 = time.perf_counter()
    res = multi_stage(fig1)
    dt = time.perf_counter() - t0
    got = (res.plan.n_configs, count_switches(fig1, res.plan))
    loose = (len(fig1_plan_b3.activity), count_switches(fig1, fig1_plan_b3))
    ok = res.status == "optimal" and got == (2, 0) and dt < 1.0 and loose == (3, 2)
    _line(
        "A1 worked example",
        ok,
        f"optimum {got} proven in {dt:.2f}s; three-block reference scores {loose}",
    )
    assert ok


def test_oracle_equivalence_both_modes():
    rng = random.Random(4711)
    t0 = time.perf_counter()
    n = 120
    mismatches = 0
    for _ in range(n):
        inst = rand_dominated(rng)
        c, z, _ = oracle_plan(inst)
        for mode in ("lex", "weighted"):
            out = solve(inst, SolveOptions(mode=mode))
            got = (out.plan.n_configs, count_switches(inst, out.plan))
            if out.status != "optimal" or got != (c, z):
                mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 600.0
    _line(
        "A2 oracle equivalence",
        ok,
        f"{n} instances x 2 modes, {mismatches} mismatches, {dt:.1f}s",
    )
    assert ok


def test_support_construction_is_exact(support_sweep):
    s = support_sweep
    ok = s["cases"] >= 40000 and s["mismatches"] == 0
    _line(
        "A3 support exactness",
        ok,
        f"{s['cases']} bound patterns, {s['mismatches']} disagreements with the sequence oracle",
    )
    assert ok


def test_visiting_bound_sound_and_useful(support_sweep):
    s = support_sweep
    rate = s["strict"] / max(1, s["eligible"])
    ok = s["unsound"] == 0 and s["sound_checked"] >= 40000 and rate >= 0.10
    _line(
        "A4 visiting bound",
        ok,
        f"{s['sound_checked']} goal cases, {s['unsound']} unsound; "
        f"strict gain on {rate:.0%} of {s['eligible']} non-covered goals",
    )
    assert ok


def test_packing_bound_sound_and_tight(fig1):
    rng = random.Random(1030)
    checked = violations = 0
    for _ in range(150):
        inst = rand_dominated(rng)
        c, _, _ = oracle_plan(inst)
        checked += 1
        if lb_configs(inst) > c:
            violations += 1
    for _ in range(60):
        inst = rand_overlap(rng)
        try:
            c, _, _ = oracle_plan(inst)
        except ValueError:
            continue
        checked += 1
        if lb_configs(inst) > c:
            violations += 1
    tight = lb_configs(fig1)
    ok = violations == 0 and tight == 2 and checked >= 150
    _line(
        "A5 packing bound",
        ok,
        f"{checked} instances, {violations} violations; worked example bound {tight} (tight)",
    )
    assert ok


@pytest.mark.sweep
def test_ablation_direction(sweep):
    rows = sweep["rows"]
    full = rows["full"]
    assert all(r["nconf"] != "" for r in full), "full configuration lost a plan"
    small_sizes = ("30-", "50-")

    def proven_small(rs):
        return sum(
            1
            for r in rs
            if r["status"] == "optimal" and r["class"].startswith(small_sizes)
        )

    details = []
    ok = True
    for name in ("base-variant", "wdeg-strategy", "single-stage"):
        abl = rows[name]
        pairs = [
            (f, a) for f, a in zip(full, abl) if a["nconf"] != ""
        ]
        f_mean = sum(_uniform_weighted(f) for f, _ in pairs) / len(pairs)
        a_mean = sum(_uniform_weighted(a) for _, a in pairs) / len(pairs)
        mean_ok = f_mean <= a_mean
        count_ok = proven_small(full) >= proven_small(abl)
        ok = ok and mean_ok and count_ok
        details.append(
            f"{name}: mean {f_mean:.0f} vs {a_mean:.0f}, "
            f"proven {proven_small(full)} vs {proven_small(abl)}"
        )
    _line("A6 ablation direction", ok, "; ".join(details) + f"; report {sweep['report']}")
    assert ok


@pytest.mark.sweep
def test_baseline_dominance(sweep):
    full = sweep["rows"]["full"]
    lex_wins = c_wins = 0
    for row in full:
        size_s, _, phase = row["class"].partition("-")
        seed = row["seed"]
        inst = generate(int(size_s), phase, seed)
        plan, _ = cm_tsp(inst)
        cm = (plan.n_configs, count_switches(inst, plan))
        got = (row["nconf"], row["nswitch"])
        if got <= cm:
            lex_wins += 1
        if got[0] <= cm[0]:
            c_wins += 1
    n = len(full)
    ok = lex_wins >= 0.9 * n and c_wins == n
    _line(
        "A7 baseline dominance",
        ok,
        f"lexicographic win on {lex_wins}/{n}, never more configurations on {c_wins}/{n}",
    )
    assert ok


def test_determinism(fig1):
    def strip(recs):
        return [{k: v for k, v in r.items() if k != "time_ms"} for r in recs]

    a = solve(fig1, SolveOptions(mode="weighted"))
    b = solve(fig1, SolveOptions(mode="weighted"))
    single_ok = (
        (a.stats.nodes, a.stats.fails) == (b.stats.nodes, b.stats.fails)
        and strip(a.stats.incumbents) == strip(b.stats.incumbents)
        and a.plan == b.plan
    )
    inst = generate(30, "hot", 1)
    ra = multi_stage(inst)
    rb = multi_stage(inst)
    multi_ok = ra.plan == rb.plan and [
        (s.name, s.status, None if s.stats is None else (s.stats.nodes, s.stats.fails))
        for s in ra.stages
    ] == [
        (s.name, s.status, None if s.stats is None else (s.stats.nodes, s.stats.fails))
        for s in rb.stages
    ]
    ok = single_ok and multi_ok
    _line(
        "A8 determinism",
        ok,
        f"repeat single solve identical: {single_ok}; repeat staged solve identical: {multi_ok}",
    )
    assert ok
