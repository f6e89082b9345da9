#!/usr/bin/env python3
"""Run the desk-scale benchmark and print the summary table.

Equivalent to `bpmstar bench run --config configs/desk.cfg`; kept as a
plain script so the experiment is one command from a fresh checkout.
"""
import sys
from pathlib import Path

from bpmstar.bench import emit_plots, parse_config, run_suite, summarize, write_summary

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "desk.cfg"


def main() -> int:
    config = parse_config(CONFIG.read_text())
    if len(sys.argv) > 1:
        config.out_dir = sys.argv[1]
    print(f"running {len(config.agent_counts)} groups x {config.instances_per_group} "
          f"instances x {len(config.solvers)} solvers -> {config.out_dir}")
    done = [0]
    total = len(config.agent_counts) * config.instances_per_group * len(config.solvers)

    def progress(rec):
        done[0] += 1
        if done[0] % 20 == 0 or rec.outcome != "solved":
            print(f"  [{done[0]}/{total}] {rec.solver} n={rec.n_agents} "
                  f"#{rec.group_index} {rec.outcome} {rec.wall_time_ms:.0f}ms", flush=True)

    records = run_suite(config, progress=progress)
    rows = summarize(records)
    write_summary(rows, config.out_dir)
    emit_plots(rows, config.out_dir)
    print(f"\n{'solver':<10} {'agents':>6} {'success':>8} {'med ms':>10} {'med expanded':>13}")
    for r in rows:
        med = "-" if r.median_time_ms is None else f"{r.median_time_ms:.0f}"
        exp = "-" if r.median_expanded is None else f"{r.median_expanded:.0f}"
        print(f"{r.solver:<10} {r.n_agents:>6} {r.success_rate:>8.2f} {med:>10} {exp:>13}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
