"""LSS against SA (three step sizes) on the 1-D tunneling problem at a matched budget.

Writes per-run traces, summaries, comparison.csv and hitting-time plot data
under --out, and prints the comparison table.
"""
import argparse
from dataclasses import replace
from pathlib import Path

from lssopt.bench import ExperimentSpec, compare, comparison_table, emit_plot_data


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--budget", type=int, default=120)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/toy1d")
    args = ap.parse_args()

    base = ExperimentSpec(runs=args.runs, budget=args.budget, seed_base=args.seed, workers=args.workers)
    specs = [base] + [replace(base, method="sa", sa_step_fraction=f) for f in (1 / 12.5, 1 / 25, 1 / 50)]
    rows, runs = compare(specs, args.budget, args.out)
    print(comparison_table(rows), end="")
    everything = [s for summaries in runs.values() for s in summaries]
    Path(args.out, "hitting.csv").write_text(emit_plot_data(everything, "hitting"))


if __name__ == "__main__":
    main()
