"""Exact branch-and-bound over the constraint model.

The model places every test into one of s configuration slots and
decides per-slot activity for all scope units.  Search branches on the
allocation variables first (binary assign/refute), then fills the
activity columns of the used slots; each improving leaf is re-verified
against the plan rules before it may become the incumbent, and the
incumbent bound is enforced globally by a cut that survives
backtracking.  Exhausting the tree therefore proves optimality for the
requested objective mode.

Variants: "bounded" adds column-usage booleans with per-unit activity
counters so capacity reasoning can prune the configuration count;
"base" fixes every slot at exact capacity and relies on the span of
the allocations alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

from .instance import Instance, InstanceError, scopes_overlap, validate
from .packing_bounds import lb_configs, lb_ntested
from .plan import ObjectiveValue, Plan, PlanError, complete_activity, count_switches, objective, verify
from .engine import Model
from . import propagators as props
from . import strategy as strat


class SolverError(RuntimeError):
    """An internal invariant broke; the result cannot be trusted."""


@dataclass
class SolveOptions:
    variant: str = "bounded"        # "bounded" | "base"
    mode: str = "weighted"          # "weighted" | "lex" | "configs" | "switches"
    strategy: str = "impact"        # "impact" | "wdeg" | "lex"
    slots: int | None = None        # horizon; defaults to the test count
    budget_s: float | None = None
    node_limit: int | None = None
    seed_plan: Plan | None = None   # initial incumbent, re-verified on entry
    configs_lb: int | None = None   # externally proven bound on configurations
    packing: bool = False           # branch allocations only, break column symmetry


@dataclass
class SearchStats:
    nodes: int = 0
    fails: int = 0
    leaves: int = 0
    propagations: int = 0
    time_ms: float = 0.0
    root: dict | None = None
    incumbents: list = field(default_factory=list)


@dataclass
class SolveOutcome:
    status: str                     # "optimal" | "feasible" | "infeasible" | "unknown"
    plan: Plan | None
    objective: ObjectiveValue | None
    bounds: dict
    stats: SearchStats
    slots: int = 0


class _Bundle:
    """Model plus the variable handles search and heuristics need."""

    def __init__(self) -> None:
        self.model = Model()
        self.inst: Instance | None = None
        self.s = 0
        self.weight = 0
        self.alloc: list[int] = []
        self.orows: dict[int, list[int]] = {}
        self.scope_units: list[int] = []
        self.cvar = -1
        self.gvars: list[int] | None = None
        self.zvar: int | None = None
        self.wvar: int | None = None
        self.test_scope_units: list[list[list[int]]] = []
        self.scope_sizes: list[tuple[int, int]] = []   # (size, capacity) per constraint
        self.cut: props.ObjectiveCut | None = None
        self.inc: props.Incumbent | None = None


def build_model(inst: Instance, opts: SolveOptions, s: int) -> _Bundle:
    b = _Bundle()
    b.inst = inst
    b.s = s
    b.weight = (inst.units * s + 1) // 2
    m = b.model
    scope_units = sorted(set().union(*(tc.scope for tc in inst.thermal)) if inst.thermal else set())
    b.scope_units = scope_units
    tested = inst.tested_units()

    for t in range(inst.n_tests):
        b.alloc.append(m.new_mvar(f"a{t}", s))
    for u in scope_units:
        b.orows[u] = [m.new_ivar(f"o{u}_{i}", 0, 1) for i in range(s)]
    clb = max(1, lb_configs(inst), opts.configs_lb or 0)
    if clb > s:
        raise InstanceError(f"horizon {s} below configuration lower bound {clb}")
    b.cvar = m.new_ivar("C", clb, s)

    bounded = opts.variant == "bounded"
    if bounded:
        b.gvars = [m.new_ivar(f"g{i}", 0, 1) for i in range(s)]

    want_switch = opts.mode in ("weighted", "lex", "switches")
    overlap = scopes_overlap(inst)
    zvars: list[int] = []

    in_scope = set(scope_units)
    for t, eq in enumerate(inst.tests):
        rows = [b.orows[u] for u in sorted(eq & in_scope)]
        watch_i = tuple(v for row in rows for v in row)
        m.add_propagator(props.TestChannel(b.alloc[t], rows), ivars=watch_i, mvars=(b.alloc[t],))
        b.test_scope_units.append([sorted(eq & tc.scope) for tc in inst.thermal])

    for c, tc in enumerate(inst.thermal):
        units = sorted(tc.scope)
        b.scope_sizes.append((len(units), tc.capacity))
        for i in range(s):
            ov = [b.orows[u][i] for u in units]
            g = b.gvars[i] if bounded else None
            watch = tuple(ov) + ((g,) if g is not None else ())
            m.add_propagator(props.ColumnSum(ov, tc.capacity, g), ivars=watch)

    m.add_propagator(props.AllocSpan(b.alloc, b.cvar), ivars=(b.cvar,), mvars=tuple(b.alloc))
    if bounded:
        for i in range(s):
            m.add_propagator(
                props.UseChannel(b.gvars[i], b.cvar, i), ivars=(b.gvars[i], b.cvar)
            )
        floors = lb_ntested(inst)
        nvars = {}
        for u in scope_units:
            nv = m.new_ivar(f"N{u}", 0, s)
            nvars[u] = nv
            m.add_propagator(
                props.CountActive(b.orows[u], nv, floors[u]),
                ivars=tuple(b.orows[u]) + (nv,),
            )
        for tc in inst.thermal:
            nv = [nvars[u] for u in sorted(tc.scope)]
            m.add_propagator(
                props.ScopeLoad(nv, b.cvar, tc.capacity), ivars=tuple(nv) + (b.cvar,)
            )

    if want_switch and inst.thermal:
        if overlap:
            caps = [tc.capacity for tc in inst.thermal]
            zc = m.new_ivar("zs", 0, (s + 1) * len(scope_units))
            zvars.append(zc)
            mv = frozenset(u for u in scope_units if u in tested)
            _post_switch(b, scope_units, zc, mv, max(caps), min(sum(caps), len(scope_units)))
        else:
            for c, tc in enumerate(inst.thermal):
                units = sorted(tc.scope)
                zc = m.new_ivar(f"z{c}", 0, (s + 1) * len(units))
                zvars.append(zc)
                mv = frozenset(u for u in units if u in tested)
                _post_switch(b, units, zc, mv, tc.capacity, tc.capacity)

    if opts.mode in ("weighted", "lex", "switches"):
        zmax = sum(m.ihi[v] for v in zvars) if zvars else 0
        b.zvar = m.new_ivar("z", 0, zmax)
        if zvars:
            m.add_propagator(
                props.SumLink(zvars, b.zvar), ivars=tuple(zvars) + (b.zvar,)
            )
        else:
            m.set_hi(b.zvar, 0)
    if opts.mode == "weighted":
        b.wvar = m.new_ivar("W", 0, b.weight * s + m.ihi[b.zvar])
        m.add_propagator(
            props.WeightedLink(b.cvar, b.zvar, b.wvar, b.weight),
            ivars=(b.cvar, b.zvar, b.wvar),
        )

    b.inc = props.Incumbent(opts.mode)
    b.cut = props.ObjectiveCut(b.inc, b.cvar, b.zvar, b.wvar)
    watch = (b.cvar,) + ((b.zvar,) if b.zvar is not None else ())
    m.add_propagator(b.cut, ivars=watch + ((b.wvar,) if b.wvar is not None else ()))

    if opts.packing and scope_units:
        for i in range(s - 1):
            xs = [b.orows[u][i] for u in scope_units]
            ys = [b.orows[u][i + 1] for u in scope_units]
            m.add_propagator(props.LexColumns(xs, ys), ivars=tuple(xs) + tuple(ys))
    return b


def _post_switch(b: _Bundle, units: list[int], zc: int, must_visit: frozenset[int], cap_lo: int, cap_hi: int) -> None:
    m = b.model
    disc = len(must_visit)
    p = props.ScopeSwitch(
        units, b.orows, b.gvars, zc, disc, must_visit, cap_lo, cap_hi, b.s
    )
    watch = [v for u in units for v in b.orows[u]] + [zc]
    if b.gvars is not None:
        watch += b.gvars
    m.add_propagator(p, ivars=tuple(watch))


def _plan_key(inst: Instance, plan: Plan, mode: str, weight: int) -> tuple:
    z = count_switches(inst, plan)
    c = plan.n_configs
    if mode == "weighted":
        return (weight * c + z,)
    if mode == "lex":
        return (c, z)
    if mode == "configs":
        return (c,)
    return (z,)


def _extract(bundle: _Bundle, opts: SolveOptions) -> Plan:
    m = bundle.model
    inst = bundle.inst
    raw = [m.mmin(a) for a in bundle.alloc]
    used = sorted(set(raw))
    remap = {cfg: k for k, cfg in enumerate(used)}
    alloc = tuple(remap[v] for v in raw)
    unions: list[frozenset[int]] = [frozenset() for _ in used]
    for t, k in enumerate(alloc):
        unions[k] = unions[k] | inst.tests[t]
    if opts.packing:
        activity = complete_activity(inst, unions)
        return Plan(alloc, activity)
    in_scope = set(bundle.scope_units)
    rows = []
    carried: set[int] = set()
    for k, cfg in enumerate(used):
        active = {u for u in bundle.scope_units if m.ilo[bundle.orows[u][cfg]] == 1}
        carried |= unions[k] - in_scope
        rows.append(frozenset(active | carried))
    return Plan(alloc, tuple(rows))


def _decide(bundle: _Bundle, opts: SolveOptions):
    m = bundle.model
    if opts.strategy == "impact":
        dec = strat.select_impact(bundle, m)
    elif opts.strategy == "wdeg":
        dec = strat.select_wdeg(bundle, m)
    else:
        dec = strat.select_lex(bundle, m)
    if dec is not None or opts.packing:
        return dec
    # allocations fixed: fill activity columns of used slots
    used = sorted({m.mmin(a) for a in bundle.alloc})
    for i in used:
        for u in bundle.scope_units:
            v = bundle.orows[u][i]
            if not m.ifixed(v):
                prev = bundle.orows[u][i - 1] if i > 0 else None
                pref = m.ival(prev) if prev is not None and m.ifixed(prev) else 0
                return ("act", v, pref)
    return None


def _apply(bundle: _Bundle, dec, left: bool) -> bool:
    m = bundle.model
    kind, var, val = dec
    if kind == "alloc":
        return m.massign(var, val) if left else m.mremove(var, val)
    return m.ifix(var, val) if left else m.ifix(var, 1 - val)


def _on_leaf(bundle: _Bundle, opts: SolveOptions, stats: SearchStats, t0: float) -> bool:
    """Extract and score the leaf; True when it became the incumbent."""
    inst = bundle.inst
    stats.leaves += 1
    try:
        plan = _extract(bundle, opts)
    except PlanError:
        # overlap packing: allocation admits no exact activity fill
        return False
    bad = verify(inst, plan)
    if bad:
        raise SolverError(f"leaf plan failed verification: {bad[0]}")
    key = _plan_key(inst, plan, opts.mode, bundle.weight)
    inc = bundle.inc
    cur = inc.key()
    if cur is not None and key >= cur:
        return False
    z = count_switches(inst, plan)
    inc.plan = plan
    inc.configurations = plan.n_configs
    inc.switches = z
    inc.weighted = bundle.weight * plan.n_configs + z
    stats.incumbents.append(
        {
            "configurations": plan.n_configs,
            "switches": z,
            "weighted": inc.weighted,
            "nodes": stats.nodes,
            "time_ms": round((time.monotonic() - t0) * 1000.0, 3),
        }
    )
    return True


class _Frame:
    __slots__ = ("mark", "dec", "tried_right")

    def __init__(self, mark, dec) -> None:
        self.mark = mark
        self.dec = dec
        self.tried_right = False


def _propagate(bundle: _Bundle) -> bool:
    bundle.model.enqueue(bundle.cut.pid)
    return bundle.model.propagate()


def _search(bundle: _Bundle, opts: SolveOptions, stats: SearchStats, t0: float) -> str:
    m = bundle.model
    deadline = t0 + opts.budget_s if opts.budget_s is not None else None
    frames: list[_Frame] = []
    def snapshot() -> dict:
        root = {
            "configurations": m.ilo[bundle.cvar],
            "switches": m.ilo[bundle.zvar] if bundle.zvar is not None else 0,
        }
        if bundle.wvar is not None:
            root["weighted"] = m.ilo[bundle.wvar]
        return root

    # Snapshot before propagating: a seeded cut can close the root outright,
    # and the pre-propagation domains still carry the structural lower bounds.
    stats.root = snapshot()
    ok = _propagate(bundle)
    if ok:
        stats.root = snapshot()
    while True:
        if deadline is not None and time.monotonic() > deadline:
            return "budget"
        if opts.node_limit is not None and stats.nodes >= opts.node_limit:
            return "budget"
        if ok:
            dec = _decide(bundle, opts)
            if dec is None:
                _on_leaf(bundle, opts, stats, t0)
                ok = False  # improving or not, a leaf ends this branch
            else:
                frames.append(_Frame(m.mark(), dec))
                stats.nodes += 1
                ok = _apply(bundle, dec, True) and _propagate(bundle)
                if not ok:
                    stats.fails += 1
                continue
        while not ok:
            if not frames:
                return "complete"
            fr = frames[-1]
            m.undo_to(fr.mark)
            if fr.tried_right:
                frames.pop()
                continue
            fr.tried_right = True
            stats.nodes += 1
            ok = _apply(bundle, fr.dec, False) and _propagate(bundle)
            if not ok:
                stats.fails += 1


def _finish(
    inst: Instance,
    bundle: _Bundle,
    opts: SolveOptions,
    stats: SearchStats,
    state: str,
    t0: float,
) -> SolveOutcome:
    stats.propagations = bundle.model.propagations
    stats.time_ms = round((time.monotonic() - t0) * 1000.0, 3)
    inc = bundle.inc
    plan = inc.plan
    if plan is None:
        status = "infeasible" if state == "complete" else "unknown"
        return SolveOutcome(status, None, None, {}, stats, bundle.s)
    status = "optimal" if state == "complete" else "feasible"
    root = stats.root or {}
    bounds = {
        "configurations": [root.get("configurations", 1), inc.configurations],
        "switches": [root.get("switches", 0), inc.switches],
    }
    if opts.mode == "weighted":
        bounds["weighted"] = [root.get("weighted", 0), inc.weighted]
    if status == "optimal":
        if opts.mode in ("configs", "lex"):
            bounds["configurations"] = [inc.configurations, inc.configurations]
        if opts.mode == "lex":
            bounds["switches"] = [root.get("switches", 0), inc.switches]
        if opts.mode == "switches":
            bounds["switches"] = [inc.switches, inc.switches]
        if opts.mode == "weighted":
            bounds["weighted"] = [inc.weighted, inc.weighted]
    obj = objective(inst, plan, bundle.s)
    return SolveOutcome(status, plan, obj, bounds, stats, bundle.s)


def solve(inst: Instance, options: SolveOptions | None = None) -> SolveOutcome:
    opts = options or SolveOptions()
    hard = [v for v in validate(inst) if not v.warning]
    if hard:
        raise InstanceError(str(hard[0]))
    t0 = time.monotonic()
    stats = SearchStats()
    if inst.n_tests == 0:
        plan = Plan((), ())
        return SolveOutcome(
            "optimal", plan, ObjectiveValue(0, 0, 0, 0), {"configurations": [0, 0], "switches": [0, 0]}, stats, 0
        )
    s = opts.slots if opts.slots is not None else inst.n_tests
    s = max(1, min(s, inst.n_tests))
    try:
        bundle = build_model(inst, opts, s)
    except InstanceError:
        # horizon below the proven configuration bound
        stats.time_ms = round((time.monotonic() - t0) * 1000.0, 3)
        return SolveOutcome("infeasible", None, None, {}, stats, s)
    if opts.seed_plan is not None:
        bad = verify(inst, opts.seed_plan)
        if bad:
            raise SolverError(f"seed plan failed verification: {bad[0]}")
        z = count_switches(inst, opts.seed_plan)
        inc = bundle.inc
        inc.plan = opts.seed_plan
        inc.configurations = opts.seed_plan.n_configs
        inc.switches = z
        inc.weighted = bundle.weight * opts.seed_plan.n_configs + z
    state = _search(bundle, opts, stats, t0)
    return _finish(inst, bundle, opts, stats, state, t0)


def solve_packing(inst: Instance, options: SolveOptions | None = None) -> SolveOutcome:
    opts = options or SolveOptions()
    return solve(inst, replace(opts, mode="configs", packing=True))


def solve_sequencing(inst: Instance, plan: Plan, options: SolveOptions | None = None) -> SolveOutcome:
    """Re-order (and re-pad) a packing's configurations for fewer switches.

    The packed configurations become super-tests of a derived instance
    solved with the full model, so blocks may even merge when capacity
    allows; the result maps straight back to the original tests.
    """
    opts = options or SolveOptions()
    bad = verify(inst, plan)
    if bad:
        raise SolverError(f"packing plan failed verification: {bad[0]}")
    if plan.n_configs == 0:
        return solve(inst, opts)
    unions: list[frozenset[int]] = [frozenset() for _ in range(plan.n_configs)]
    for t, k in enumerate(plan.allocation):
        unions[k] = unions[k] | inst.tests[t]
    sup = Instance(f"{inst.name}+blocks", inst.units, tuple(unions), inst.thermal)
    identity = Plan(tuple(range(plan.n_configs)), plan.activity)
    sopts = replace(opts, slots=plan.n_configs, seed_plan=identity, packing=False)
    out = solve(sup, sopts)
    if out.plan is None:
        return out
    alloc = tuple(out.plan.allocation[plan.allocation[t]] for t in range(inst.n_tests))
    lifted = Plan(alloc, out.plan.activity)
    bad = verify(inst, lifted)
    if bad:
        raise SolverError(f"lifted sequencing plan failed verification: {bad[0]}")
    obj = objective(inst, lifted, out.slots)
    return SolveOutcome(out.status, lifted, obj, out.bounds, out.stats, out.slots)
