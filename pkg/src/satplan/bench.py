"""Benchmark harness over the generated instance classes.

Runs a sweep of (class, seed, mode) cells, appends one CSV row per cell
plus per-class aggregate rows, and renders summary figures next to the
CSV.  Rows carry full provenance: strategy, variant, stage outcomes,
budget, and generator metadata, so a report file is self-describing.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .generator import PHASES, SIZES, generate
from .plan import count_switches

CSV_COLUMNS = (
    "class",
    "seed",
    "mode",
    "strategy",
    "variant",
    "nconf",
    "nswitch",
    "status",
    "nodes",
    "fails",
    "time_ms",
    "stages",
    "budget_s",
    "gen",
)


@dataclass(frozen=True)
class Cell:
    """One benchmark run; frozen so it can cross a process boundary."""

    size: int
    phase: str
    seed: int
    mode: str = "weighted"
    strategy: str = "impact"
    variant: str = "bounded"
    budget_s: float | None = None
    multi: bool = True


def parse_classes(text: str) -> list[tuple[int, str]]:
    """Parse a class list such as "30-cold,50-hot,80-cold"."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        size_s, _, phase = item.partition("-")
        try:
            size = int(size_s)
        except ValueError:
            raise ValueError(f"bad class {item!r}: size must be an integer") from None
        if size not in SIZES or phase not in PHASES:
            raise ValueError(
                f"bad class {item!r}: expected <size>-<phase> with size in "
                f"{sorted(SIZES)} and phase in {'/'.join(PHASES)}"
            )
        out.append((size, phase))
    if not out:
        raise ValueError("empty class list")
    return out


def parse_seeds(text: str) -> list[int]:
    """Parse "1..5" or "1,2,7" (ranges are inclusive)."""
    out: list[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item:
            lo_s, _, hi_s = item.partition("..")
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"bad seed range {item!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(item))
    if not out:
        raise ValueError("empty seed list")
    return out


def run_cell(cell: Cell) -> dict:
    """Solve one cell and flatten the outcome into a CSV row dict."""
    from . import solver as sv
    from . import strategy as st

    inst = generate(cell.size, cell.phase, cell.seed)
    opts = sv.SolveOptions(
        variant=cell.variant,
        mode=cell.mode,
        strategy=cell.strategy,
        budget_s=cell.budget_s,
    )
    t0 = time.perf_counter()
    nodes = fails = 0
    if cell.multi:
        res = st.multi_stage(inst, options=opts, budget_s=cell.budget_s)
        status, plan = res.status, res.plan
        parts = []
        for stage in res.stages:
            parts.append(f"{stage.name}:{stage.status}")
            if stage.stats is not None:
                nodes += stage.stats.nodes
                fails += stage.stats.fails
        stages = ";".join(parts)
    else:
        out = sv.solve(inst, opts)
        status, plan = out.status, out.plan
        nodes, fails = out.stats.nodes, out.stats.fails
        stages = f"single:{status}"
    elapsed_ms = int(round((time.perf_counter() - t0) * 1000))

    row = {
        "class": f"{cell.size}-{cell.phase}",
        "seed": cell.seed,
        "mode": cell.mode,
        "strategy": cell.strategy,
        "variant": cell.variant,
        "nconf": plan.n_configs if plan is not None else "",
        "nswitch": count_switches(inst, plan) if plan is not None else "",
        "status": status,
        "nodes": nodes,
        "fails": fails,
        "time_ms": elapsed_ms,
        "stages": stages,
        "budget_s": "" if cell.budget_s is None else cell.budget_s,
        "gen": f"{inst.name};units={inst.units};tests={len(inst.tests)}",
    }
    return row


def run_cells(cells: list[Cell], jobs: int = 1) -> list[dict]:
    """Run cells in submission order; with jobs > 1, in separate processes."""
    if jobs <= 1 or len(cells) <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, cells))


def aggregate(rows: list[dict]) -> list[dict]:
    """Per (class, mode) summary rows: mean C, mean z, proven-optimal count."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["class"], row["mode"]), []).append(row)

    def uniform(members: list[dict], key: str):
        values = {m[key] for m in members}
        return values.pop() if len(values) == 1 else "*"

    out = []
    for (cls, mode), members in groups.items():
        solved = [m for m in members if m["nconf"] != ""]
        proven = sum(1 for m in members if m["status"] == "optimal")
        mean_c = sum(m["nconf"] for m in solved) / len(solved) if solved else ""
        mean_z = sum(m["nswitch"] for m in solved) / len(solved) if solved else ""
        out.append(
            {
                "class": cls,
                "seed": "all",
                "mode": mode,
                "strategy": uniform(members, "strategy"),
                "variant": uniform(members, "variant"),
                "nconf": f"{mean_c:.2f}" if solved else "",
                "nswitch": f"{mean_z:.2f}" if solved else "",
                "status": f"optimal:{proven}/{len(members)}",
                "nodes": sum(m["nodes"] for m in members),
                "fails": sum(m["fails"] for m in members),
                "time_ms": sum(m["time_ms"] for m in members),
                "stages": "aggregate",
                "budget_s": uniform(members, "budget_s"),
                "gen": "",
            }
        )
    return out


def write_report(rows: list[dict], path: str, aggregates: bool = True) -> None:
    """Append rows (and fresh aggregate rows) to a CSV report.

    The header is written only when the file is new or empty, so repeated
    runs with the same path extend the report instead of clobbering it.
    """
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if fresh:
            writer.writeheader()
        for row in rows:
            writer.writerow(row)
        if aggregates:
            for row in aggregate(rows):
                writer.writerow(row)


def figure_path(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".png"


def render_figures(rows: list[dict], csv_path: str) -> str:
    """Render per-class mean objective bars next to the CSV report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    def class_key(cls: str) -> tuple[int, str]:
        size_s, _, phase = cls.partition("-")
        return int(size_s), phase

    classes = sorted({r["class"] for r in rows}, key=class_key)
    modes = sorted({r["mode"] for r in rows})
    agg = {(r["class"], r["mode"]): r for r in aggregate(rows)}

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    width = 0.8 / max(1, len(modes))
    for panel, key, title in (
        (axes[0], "nconf", "mean configurations"),
        (axes[1], "nswitch", "mean switches"),
    ):
        for j, mode in enumerate(modes):
            xs, ys, labels = [], [], []
            for i, cls in enumerate(classes):
                row = agg.get((cls, mode))
                if row is None or row[key] == "":
                    continue
                xs.append(i + (j - (len(modes) - 1) / 2) * width)
                ys.append(float(row[key]))
                labels.append(row["status"].removeprefix("optimal:"))
            bars = panel.bar(xs, ys, width=width, label=mode)
            if key == "nconf":
                panel.bar_label(bars, labels=labels, fontsize=7)
        panel.set_xticks(range(len(classes)))
        panel.set_xticklabels(classes, rotation=30, ha="right")
        panel.set_title(title)
        panel.grid(axis="y", alpha=0.3)
    axes[0].legend(title="mode")
    fig.suptitle("benchmark summary (bar labels: proven optimal / runs)")
    fig.tight_layout()
    out = figure_path(csv_path)
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def run_bench(
    classes: list[tuple[int, str]],
    seeds: list[int],
    budget_s: float | None,
    modes: tuple[str, ...] = ("weighted",),
    strategy: str = "impact",
    variant: str = "bounded",
    multi: bool = True,
    jobs: int = 1,
    out: str = "report.csv",
) -> list[dict]:
    """Sweep classes x seeds x modes, write the report, render figures."""
    cells = [
        Cell(size, phase, seed, mode, strategy, variant, budget_s, multi)
        for size, phase in classes
        for seed in seeds
        for mode in modes
    ]
    rows = run_cells(cells, jobs=jobs)
    write_report(rows, out)
    render_figures(rows, out)
    return rows
