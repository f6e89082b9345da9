"""Command-line interface.

Subcommands:
  bench run   --config FILE [--out-dir DIR] [--jobs N]
  bench gen   --agents N --seed S [--obstacle-prob P] [--density D] [--out FILE]
  solve       --map FILE --scen FILE --agents N --solver NAME
              [--conflicts vertex|vertex_swap] [--timeout SECS]
              [--out CSV] [--solution-out FILE]   (or --instance FILE)
  validate    --map FILE --solution FILE [--conflicts vertex|vertex_swap]

Solution files are plain text, one line per agent: "r0 c0 r1 c1 ...".
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import SOLVERS
from .bench import BenchConfig, emit_plots, parse_config, run_suite, summarize, write_summary
from .domain import ConflictModel, Instance, generate_instance
from .mapio import load_instance, load_internal, parse_map, write_instance
from .mstar import Solution, SolveStatus
from .validate import validate


def _model(name: str) -> ConflictModel:
    return ConflictModel.parse(name)


def write_solution_text(solution: Solution) -> str:
    lines = []
    for path in solution.paths:
        lines.append(" ".join(f"{r} {c}" for r, c in path))
    return "\n".join(lines) + "\n"


def read_solution_text(text: str) -> list[list[tuple[int, int]]]:
    paths = []
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        nums = [int(v) for v in line.split()]
        if len(nums) % 2:
            raise ValueError(f"solution line {ln}: odd number of coordinates")
        paths.append([(nums[i], nums[i + 1]) for i in range(0, len(nums), 2)])
    if not paths:
        raise ValueError("solution file is empty")
    return paths


def cmd_bench_run(args) -> int:
    config = parse_config(Path(args.config).read_text())
    if args.out_dir:
        config.out_dir = args.out_dir
    if args.jobs:
        config.jobs = args.jobs
    done = [0]
    total = len(config.agent_counts) * config.instances_per_group * len(config.solvers)

    def progress(rec):
        done[0] += 1
        print(
            f"[{done[0]}/{total}] {rec.solver} n={rec.n_agents} #{rec.group_index} "
            f"{rec.outcome} {rec.wall_time_ms:.0f}ms",
            flush=True,
        )

    records = run_suite(config, progress=progress)
    rows = summarize(records)
    write_summary(rows, config.out_dir)
    emit_plots(rows, config.out_dir)
    print(f"wrote {len(records)} records to {config.out_dir}")
    return 0


def cmd_bench_gen(args) -> int:
    inst = generate_instance(
        args.agents, args.seed, obstacle_prob=args.obstacle_prob, density=args.density
    )
    data = write_instance(inst)
    if args.out:
        Path(args.out).write_bytes(data)
        print(f"wrote {args.out}: {inst.grid.width}x{inst.grid.height}, {inst.n_agents} agents")
    else:
        sys.stdout.write(data.decode("ascii"))
    return 0


def _load_for_solve(args) -> Instance:
    if args.instance:
        return load_internal(Path(args.instance).read_bytes())
    if not (args.map and args.scen and args.agents):
        raise SystemExit("need either --instance or --map/--scen/--agents")
    return load_instance(
        Path(args.map).read_bytes(), Path(args.scen).read_bytes(), args.agents
    )


def cmd_solve(args) -> int:
    inst = _load_for_solve(args)
    model = _model(args.conflicts)
    solver = SOLVERS[args.solver]
    t0 = time.monotonic()
    result = solver(inst, model, args.timeout)
    elapsed_ms = (time.monotonic() - t0) * 1000.0
    stats = result.stats
    print(f"status {result.status.value}")
    print(f"time_ms {elapsed_ms:.1f}")
    print(f"expanded {stats.expanded}")
    if result.status is SolveStatus.SOLVED:
        print(f"cost {result.solution.total_cost}")
        report = validate(inst, result.solution, model)
        print(f"valid {str(report.ok).lower()}")
        if args.solution_out:
            Path(args.solution_out).write_text(write_solution_text(result.solution))
    if args.out:
        import csv

        from .bench import RECORD_FIELDS, BenchRecord

        rec = BenchRecord(
            solver=args.solver,
            n_agents=inst.n_agents,
            group_index=0,
            instance_seed=0,
            outcome=result.status.value,
            cost=result.solution.total_cost if result.status is SolveStatus.SOLVED else None,
            wall_time_ms=elapsed_ms,
            expanded=stats.expanded,
            bypass_success=stats.bypass_success,
            bypass_fail=stats.bypass_fail,
        )
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RECORD_FIELDS)
            writer.writerow(rec.row())
    return 0 if result.status is not SolveStatus.TIMEOUT else 2


def cmd_validate(args) -> int:
    grid = parse_map(Path(args.map).read_bytes())
    paths = read_solution_text(Path(args.solution).read_text())
    starts = tuple(p[0] for p in paths)
    goals = tuple(p[-1] for p in paths)
    inst = Instance(grid=grid, starts=starts, goals=goals)
    cost = sum(_arrival(p, g) for p, g in zip(paths, goals))
    solution = Solution(paths=tuple(tuple(p) for p in paths), total_cost=cost)
    report = validate(inst, solution, _model(args.conflicts))
    sys.stdout.write(report.to_text())
    return 0 if report.ok else 1


def _arrival(path, goal) -> int:
    arrive = 0
    for t, cell in enumerate(path):
        if cell != goal:
            arrive = t + 1
    return arrive


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpmstar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="benchmark harness")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    run_p = bench_sub.add_parser("run", help="run a benchmark suite from a config file")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out-dir", default=None)
    run_p.add_argument("--jobs", type=int, default=None)
    run_p.set_defaults(func=cmd_bench_run)
    gen_p = bench_sub.add_parser("gen", help="generate one random instance")
    gen_p.add_argument("--agents", type=int, required=True)
    gen_p.add_argument("--seed", type=int, required=True)
    gen_p.add_argument("--obstacle-prob", type=float, default=0.2)
    gen_p.add_argument("--density", type=float, default=0.01)
    gen_p.add_argument("--out", default=None)
    gen_p.set_defaults(func=cmd_bench_gen)

    solve_p = sub.add_parser("solve", help="solve one instance")
    solve_p.add_argument("--map", default=None)
    solve_p.add_argument("--scen", default=None)
    solve_p.add_argument("--agents", type=int, default=None)
    solve_p.add_argument("--instance", default=None, help="internal-format instance file")
    solve_p.add_argument("--solver", required=True, choices=sorted(SOLVERS))
    solve_p.add_argument("--conflicts", default="vertex_swap", choices=["vertex", "vertex_swap"])
    solve_p.add_argument("--timeout", type=float, default=60.0)
    solve_p.add_argument("--out", default=None, help="write a one-record CSV")
    solve_p.add_argument("--solution-out", default=None, help="write the paths as text")
    solve_p.set_defaults(func=cmd_solve)

    val_p = sub.add_parser("validate", help="validate a solution file against a map")
    val_p.add_argument("--map", required=True)
    val_p.add_argument("--solution", required=True)
    val_p.add_argument("--conflicts", default="vertex_swap", choices=["vertex", "vertex_swap"])
    val_p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
