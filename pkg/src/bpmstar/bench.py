"""Benchmark harness: seeded instance groups, a solver matrix under
timeouts, and success-rate / median-time tables with plot data.

Every solver in a run sees byte-identical instances per (group, index);
instances derive deterministically from the master seed.  Records go to
``records.csv``, the per-(solver, agent-count) summary to ``summary.csv``,
and the two plot series to ``success_rate.dat`` / ``median_time.dat`` plus
SVG charts.
"""
from __future__ import annotations

import csv
import io
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .domain import ConflictModel, generate_instance
from .mstar import SolveStatus
from . import SOLVERS

RECORD_FIELDS = [
    "solver",
    "n_agents",
    "group_index",
    "instance_seed",
    "outcome",
    "cost",
    "wall_time_ms",
    "expanded",
    "bypass_success",
    "bypass_fail",
]

# Fields that vary run to run on real hardware; everything else in the CSV
# is deterministic for a fixed config.
VOLATILE_FIELDS = {"wall_time_ms"}


@dataclass
class BenchConfig:
    agent_counts: list[int] = field(default_factory=lambda: [5, 10, 15, 20, 25, 30])
    instances_per_group: int = 25
    timeout_secs: float = 60.0
    solvers: tuple[str, ...] = ("mstar", "bpmstar", "rmstar", "rbpmstar")
    seed: int = 20
    conflict_model: str = "vertex_swap"
    obstacle_prob: float = 0.2
    density: float = 0.01
    out_dir: str = "bench_out"
    jobs: int = 1

    def __post_init__(self):
        if self.instances_per_group < 1:
            raise ValueError("instances_per_group must be >= 1")
        if self.timeout_secs <= 0:
            raise ValueError("timeout must be positive")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ValueError(f"unknown solvers: {unknown}")

    @property
    def model(self) -> ConflictModel:
        return ConflictModel.parse(self.conflict_model)


def parse_config(text: str) -> BenchConfig:
    """Parse the key-value config format: one ``key = value`` per line,
    ``#`` comments, lists comma-separated."""
    values: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    kwargs: dict = {}
    if "agent_counts" in values:
        kwargs["agent_counts"] = [int(v) for v in values.pop("agent_counts").replace(",", " ").split()]
    if "solvers" in values:
        kwargs["solvers"] = tuple(values.pop("solvers").replace(",", " ").split())
    for key, cast in (
        ("instances_per_group", int),
        ("timeout_secs", float),
        ("seed", int),
        ("conflict_model", str),
        ("obstacle_prob", float),
        ("density", float),
        ("out_dir", str),
        ("jobs", int),
    ):
        if key in values:
            kwargs[key] = cast(values.pop(key))
    if values:
        raise ValueError(f"unknown config keys: {sorted(values)}")
    return BenchConfig(**kwargs)


def instance_seed(master: int, n_agents: int, index: int) -> int:
    """Stable per-instance seed derived from the master seed."""
    x = (master * 0x9E3779B97F4A7C15 + n_agents * 0xBF58476D1CE4E5B9 + index * 0x94D049BB133111EB) & (
        (1 << 63) - 1
    )
    return x


@dataclass(frozen=True)
class BenchRecord:
    solver: str
    n_agents: int
    group_index: int
    instance_seed: int
    outcome: str  # solved | nopath | timeout
    cost: int | None
    wall_time_ms: float
    expanded: int
    bypass_success: int
    bypass_fail: int

    def row(self) -> list:
        return [
            self.solver,
            self.n_agents,
            self.group_index,
            self.instance_seed,
            self.outcome,
            "" if self.cost is None else self.cost,
            f"{self.wall_time_ms:.3f}",
            self.expanded,
            self.bypass_success,
            self.bypass_fail,
        ]


def _run_task(args) -> BenchRecord:
    solver_name, n_agents, index, seed, obstacle_prob, density, model_name, timeout = args
    inst = generate_instance(n_agents, seed, obstacle_prob=obstacle_prob, density=density)
    model = ConflictModel.parse(model_name)
    t0 = time.monotonic()
    result = SOLVERS[solver_name](inst, model, timeout)
    elapsed = (time.monotonic() - t0) * 1000.0
    stats = result.stats
    return BenchRecord(
        solver=solver_name,
        n_agents=n_agents,
        group_index=index,
        instance_seed=seed,
        outcome=result.status.value,
        cost=result.solution.total_cost if result.status is SolveStatus.SOLVED else None,
        wall_time_ms=elapsed,
        expanded=stats.expanded,
        bypass_success=stats.bypass_success,
        bypass_fail=stats.bypass_fail,
    )


def run_suite(config: BenchConfig, progress=None) -> list[BenchRecord]:
    """Run every configured solver on every instance of every group.

    Records are written incrementally to ``<out_dir>/records.csv``.  With
    ``jobs > 1`` tasks run in worker processes and are merged in the
    deterministic (n_agents, index, solver) order before writing.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for n in config.agent_counts:
        for idx in range(config.instances_per_group):
            seed = instance_seed(config.seed, n, idx)
            for solver_name in config.solvers:
                tasks.append(
                    (
                        solver_name,
                        n,
                        idx,
                        seed,
                        config.obstacle_prob,
                        config.density,
                        config.conflict_model,
                        config.timeout_secs,
                    )
                )
    records: list[BenchRecord] = []
    records_path = out_dir / "records.csv"
    with open(records_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        if config.jobs > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as pool:
                for rec in pool.map(_run_task, tasks, chunksize=1):
                    records.append(rec)
                    writer.writerow(rec.row())
                    fh.flush()
                    if progress:
                        progress(rec)
        else:
            for task in tasks:
                rec = _run_task(task)
                records.append(rec)
                writer.writerow(rec.row())
                fh.flush()
                if progress:
                    progress(rec)
    records.sort(key=lambda r: (r.n_agents, r.group_index, r.solver))
    with open(records_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for rec in records:
            writer.writerow(rec.row())
    meta = out_dir / "meta.txt"
    meta.write_text(
        f"jobs = {config.jobs}\n"
        f"seed = {config.seed}\n"
        f"conflict_model = {config.conflict_model}\n"
        f"timeout_secs = {config.timeout_secs}\n",
        encoding="ascii",
    )
    return records


@dataclass(frozen=True)
class SummaryRow:
    solver: str
    n_agents: int
    total: int
    solved: int
    success_rate: float
    median_time_ms: float | None
    median_expanded: float | None


def summarize(records: list[BenchRecord]) -> list[SummaryRow]:
    """Per (solver, agent count): success rate and medians over solved runs."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple[str, int], list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((rec.solver, rec.n_agents), []).append(rec)
    rows = []
    for (solver, n), recs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        solved = [r for r in recs if r.outcome == "solved"]
        rows.append(
            SummaryRow(
                solver=solver,
                n_agents=n,
                total=len(recs),
                solved=len(solved),
                success_rate=len(solved) / len(recs),
                median_time_ms=statistics.median(r.wall_time_ms for r in solved) if solved else None,
                median_expanded=statistics.median(r.expanded for r in solved) if solved else None,
            )
        )
    return rows


def write_summary(rows: list[SummaryRow], out_dir: str | Path) -> Path:
    path = Path(out_dir) / "summary.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["solver", "n_agents", "total", "solved", "success_rate", "median_time_ms", "median_expanded"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.solver,
                    r.n_agents,
                    r.total,
                    r.solved,
                    f"{r.success_rate:.4f}",
                    "" if r.median_time_ms is None else f"{r.median_time_ms:.3f}",
                    "" if r.median_expanded is None else f"{r.median_expanded:.1f}",
                ]
            )
    return path


def emit_plots(rows: list[SummaryRow], out_dir: str | Path) -> list[Path]:
    """Write the two plot-data files and a vector chart for each."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    solvers = sorted({r.solver for r in rows})
    series: dict[str, list[SummaryRow]] = {
        s: sorted((r for r in rows if r.solver == s), key=lambda r: r.n_agents) for s in solvers
    }
    out_paths = []
    for name, column, fmt in (
        ("success_rate", "success_rate", "{:.4f}"),
        ("median_time", "median_time_ms", "{:.3f}"),
    ):
        dat = out_dir / f"{name}.dat"
        with open(dat, "w") as fh:
            fh.write(f"# solver n_agents {column}\n")
            for s in solvers:
                for r in series[s]:
                    val = getattr(r, column)
                    text = "nan" if val is None else fmt.format(val)
                    fh.write(f"{s} {r.n_agents} {text}\n")
        out_paths.append(dat)
        out_paths.append(_plot_svg(series, column, out_dir / f"{name}.svg"))
    return out_paths


def _plot_svg(series: dict[str, list[SummaryRow]], column: str, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "bench"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for solver, rows in sorted(series.items()):
        xs = [r.n_agents for r in rows]
        ys = [getattr(r, column) for r in rows]
        xs = [x for x, y in zip(xs, ys) if y is not None]
        ys = [y for y in ys if y is not None]
        ax.plot(xs, ys, marker="o", label=solver)
    ax.set_xlabel("agents")
    if column == "success_rate":
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.05, 1.05)
    else:
        ax.set_ylabel("median time (ms)")
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
