"""Command-line surface for the toolkit.

Subcommands: solve, pack, sequence, verify, gen, bench, oracle.  Exit
codes: 0 success, 1 infeasible (or failed verification), 2 invalid
input, 3 budget exhausted without an optimality proof (any incumbent is
still written), 4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench as bn
from . import oracles
from .generator import PHASES, SIZES, generate
from .instance import (
    Instance,
    InstanceError,
    load_instance,
    merge_identical_tests,
    save_instance,
)
from .plan import PlanError, count_switches, expand_plan, load_plan, save_plan, verify

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_INTERNAL = 4

_STATUS_EXIT = {
    "optimal": EXIT_OK,
    "feasible": EXIT_BUDGET,
    "unknown": EXIT_BUDGET,
    "infeasible": EXIT_INFEASIBLE,
}


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load(path: str) -> Instance:
    try:
        return load_instance(path)
    except OSError as exc:
        raise InstanceError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_plan(path: str, inst: Instance, check: bool = True):
    try:
        return load_plan(path, inst, check=check)
    except OSError as exc:
        raise PlanError(f"cannot read {path}: {exc.strerror or exc}") from None


def _parse_phases(text: str) -> tuple[float, float, float]:
    """Budget shares greedy,packing,sequencing,full (greedy is untimed).

    Accepts three components as well, read as packing,sequencing,full.
    Shares are normalized by their total; an untimed greedy share simply
    leaves slack that the full phase reabsorbs.
    """
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 3:
        parts = [0.0] + parts
    if len(parts) != 4 or any(p < 0 for p in parts) or sum(parts) <= 0:
        raise ValueError(f"bad --phases {text!r}: need 4 non-negative shares, sum > 0")
    total = sum(parts)
    return (parts[1] / total, parts[2] / total, parts[3] / total)


def _phase_doc(name: str, status: str, configurations, switches, stats) -> dict:
    doc = {
        "name": name,
        "status": status,
        "configurations": configurations,
        "switches": switches,
        "nodes": 0,
        "fails": 0,
        "leaves": 0,
        "propagations": 0,
        "time_ms": 0.0,
        "root": None,
        "incumbents": [],
    }
    if stats is not None:
        doc.update(
            nodes=stats.nodes,
            fails=stats.fails,
            leaves=stats.leaves,
            propagations=stats.propagations,
            time_ms=stats.time_ms,
            root=stats.root,
            incumbents=list(stats.incumbents),
        )
    return doc


def _write_stats(path: str, inst: Instance, args, status: str, objective, bounds,
                 slots: int, phases: list[dict]) -> None:
    doc = {
        "instance": inst.name,
        "units": inst.units,
        "tests": inst.n_tests,
        "mode": getattr(args, "mode", None),
        "strategy": getattr(args, "strategy", None),
        "variant": getattr(args, "variant", None),
        "budget_s": getattr(args, "budget", None),
        "status": status,
        "slots": slots,
        "objective": None
        if objective is None
        else {
            "configurations": objective.configurations,
            "switches": objective.switches,
            "weighted": objective.weighted,
            "slot_bound": objective.slot_bound,
        },
        "bounds": bounds,
        "phases": phases,
        "totals": {
            "nodes": sum(p["nodes"] for p in phases),
            "fails": sum(p["fails"] for p in phases),
            "time_ms": sum(p["time_ms"] for p in phases),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _finish_solveish(inst, merge_map, args, status, plan, objective, bounds, slots,
                     phases) -> int:
    """Shared tail of solve/pack/sequence: expand, persist, report, map exit."""
    if plan is not None and merge_map is not None:
        plan = expand_plan(merge_map, plan)
    if plan is not None and args.out:
        save_plan(inst, plan, args.out)
    if args.stats:
        _write_stats(args.stats, inst, args, status, objective, bounds, slots, phases)
    if plan is None:
        print(f"{inst.name}: status={status}")
    else:
        z = count_switches(inst, plan)
        nodes = sum(p["nodes"] for p in phases)
        fails = sum(p["fails"] for p in phases)
        print(
            f"{inst.name}: status={status} configurations={plan.n_configs}"
            f" switches={z} nodes={nodes} fails={fails}"
        )
    return _STATUS_EXIT[status]


def cmd_solve(args) -> int:
    from . import solver as sv
    from . import strategy as st

    inst = _load(args.instance)
    merged, mm = merge_identical_tests(inst)
    opts = sv.SolveOptions(
        variant=args.variant, mode=args.mode, strategy=args.strategy, budget_s=args.budget
    )
    if args.single_stage:
        out = sv.solve(merged, opts)
        phases = [
            _phase_doc("single", out.status, None if out.plan is None else out.plan.n_configs,
                       None if out.objective is None else out.objective.switches, out.stats)
        ]
        return _finish_solveish(
            inst, mm, args, out.status, out.plan, out.objective, out.bounds, out.slots, phases
        )
    res = st.multi_stage(merged, options=opts, budget_s=args.budget, split=args.phases)
    phases = [
        _phase_doc(s.name, s.status, s.configurations, s.switches, s.stats)
        for s in res.stages
    ]
    return _finish_solveish(
        inst, mm, args, res.status, res.plan, res.objective, res.bounds, res.slots, phases
    )


def cmd_pack(args) -> int:
    from . import solver as sv

    inst = _load(args.instance)
    merged, mm = merge_identical_tests(inst)
    opts = sv.SolveOptions(variant=args.variant, strategy=args.strategy, budget_s=args.budget)
    out = sv.solve_packing(merged, opts)
    phases = [
        _phase_doc("packing", out.status, None if out.plan is None else out.plan.n_configs,
                   None if out.objective is None else out.objective.switches, out.stats)
    ]
    return _finish_solveish(
        inst, mm, args, out.status, out.plan, out.objective, out.bounds, out.slots, phases
    )


def cmd_sequence(args) -> int:
    from . import solver as sv

    inst = _load(args.instance)
    packing = _load_plan(args.packing, inst)
    opts = sv.SolveOptions(mode=args.mode, strategy=args.strategy, budget_s=args.budget)
    out = sv.solve_sequencing(inst, packing, opts)
    phases = [
        _phase_doc("sequencing", out.status, None if out.plan is None else out.plan.n_configs,
                   None if out.objective is None else out.objective.switches, out.stats)
    ]
    return _finish_solveish(
        inst, None, args, out.status, out.plan, out.objective, out.bounds, out.slots, phases
    )


def cmd_verify(args) -> int:
    inst = _load(args.instance)
    plan = _load_plan(args.plan, inst, check=False)
    problems = verify(inst, plan)
    if problems:
        for v in problems:
            print(f"violation[{v.kind}]: {v.message}")
        return EXIT_INFEASIBLE
    z = count_switches(inst, plan)
    print(f"{inst.name}: plan verifies, configurations={plan.n_configs} switches={z}")
    return EXIT_OK


def cmd_gen(args) -> int:
    import os

    if args.n not in SIZES:
        return _fail(f"--n must be one of {sorted(SIZES)}", EXIT_INVALID)
    os.makedirs(args.out_dir, exist_ok=True)
    for k in range(args.count):
        inst = generate(args.n, args.phase, args.seed + k)
        path = os.path.join(args.out_dir, f"{inst.name}.json")
        save_instance(inst, path)
        print(path)
    return EXIT_OK


def cmd_bench(args) -> int:
    classes = bn.parse_classes(args.classes)
    seeds = bn.parse_seeds(args.seeds)
    modes = tuple(m.strip() for m in args.modes.split(",") if m.strip())
    for mode in modes:
        if mode not in ("weighted", "lex"):
            raise ValueError(f"bad mode {mode!r}: expected weighted or lex")
    rows = bn.run_bench(
        classes,
        seeds,
        args.budget,
        modes=modes,
        strategy=args.strategy,
        variant=args.variant,
        multi=not args.single_stage,
        jobs=args.jobs,
        out=args.out,
    )
    for row in bn.aggregate(rows):
        print(
            f"{row['class']} [{row['mode']}]: mean configurations={row['nconf']}"
            f" mean switches={row['nswitch']} {row['status']}"
        )
    print(f"report: {args.out}")
    print(f"figure: {bn.figure_path(args.out)}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load(args.instance)
    n, m = inst.n_tests, inst.units
    if not (
        (n <= oracles.ORACLE_PLAN_MAX_TESTS and m <= oracles.ORACLE_PLAN_MAX_UNITS)
        or (n <= oracles.ORACLE_PLAN_RELAXED_TESTS and m <= oracles.ORACLE_PLAN_RELAXED_UNITS)
    ):
        return _fail(
            f"instance too large for the oracle ({n} tests, {m} units)", EXIT_INVALID
        )
    try:
        best_c, best_z, plan = oracles.oracle_plan(inst)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INFEASIBLE)
    if args.out and plan.allocation:
        save_plan(inst, plan, args.out)
    print(f"{inst.name}: optimal configurations={best_c} switches={best_z}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satplan",
        description="Plan payload test campaigns: pack tests into configurations, "
        "sequence configurations to limit re-activations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_solver_flags(p, mode_flag=True):
        if mode_flag:
            p.add_argument("--mode", choices=("weighted", "lex", "configs", "switches"),
                           default="weighted")
        p.add_argument("--variant", choices=("base", "bounded"), default="bounded")
        p.add_argument("--strategy", choices=("impact", "wdeg", "lex"), default="impact")
        p.add_argument("--budget", type=float, default=None, metavar="SECONDS")
        p.add_argument("--out", default=None, metavar="PLAN_JSON")
        p.add_argument("--stats", default=None, metavar="STATS_JSON")

    p = sub.add_parser("solve", help="multi-stage exact solve of an instance")
    p.add_argument("instance")
    add_solver_flags(p)
    p.add_argument("--phases", type=_parse_phases, default=(0.2, 0.2, 0.6),
                   metavar="G,P,S,F", help="budget shares greedy,packing,sequencing,full")
    p.add_argument("--single-stage", action="store_true",
                   help="bypass the phase pipeline; one full solve")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pack", help="minimize the configuration count only")
    p.add_argument("instance")
    add_solver_flags(p, mode_flag=False)
    p.set_defaults(func=cmd_pack, mode="configs")

    p = sub.add_parser("sequence", help="re-sequence a fixed packing to cut switches")
    p.add_argument("instance")
    p.add_argument("--packing", required=True, metavar="PLAN_JSON")
    add_solver_flags(p)
    p.set_defaults(func=cmd_sequence)

    p = sub.add_parser("verify", help="check a plan against its instance")
    p.add_argument("instance")
    p.add_argument("plan")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write generated instances to a directory")
    p.add_argument("--n", type=int, required=True, help=f"class size, one of {sorted(SIZES)}")
    p.add_argument("--phase", choices=PHASES, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="benchmark sweep; CSV report plus figures")
    p.add_argument("--classes", required=True, help="e.g. 30-hot,30-cold,50-hot")
    p.add_argument("--seeds", required=True, help="e.g. 1..5 or 1,2,7")
    p.add_argument("--budget", type=float, default=None, metavar="SECONDS")
    p.add_argument("--modes", default="weighted,lex")
    p.add_argument("--strategy", choices=("impact", "wdeg", "lex"), default="impact")
    p.add_argument("--variant", choices=("base", "bounded"), default="bounded")
    p.add_argument("--single-stage", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="report.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", help="exhaustive optimum for tiny instances")
    p.add_argument("instance")
    p.add_argument("--out", default=None, metavar="PLAN_JSON")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    from . import solver as sv

    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, 0 on --help; keep those codes.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InstanceError, PlanError, ValueError) as exc:
        return _fail(str(exc), EXIT_INVALID)
    except sv.SolverError as exc:
        return _fail(f"internal invariant breach: {exc}", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
