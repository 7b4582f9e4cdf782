"""LSS on the product landscape in several dimensions; emits normalised decay and concentration data."""
import argparse
from pathlib import Path

import numpy as np

from lssopt.bench import ExperimentSpec, emit_plot_data, run_experiment
from lssopt.domain import normalize_cost


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--budget", type=int, default=120)
    ap.add_argument("--out", default="results/sweep")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for dim in args.dims:
        objective = "toy1d" if dim == 1 else f"toyNd:{dim}"
        spec = ExperimentSpec(objective=objective, runs=args.runs, budget=args.budget, label=f"lss-d{dim}")
        summaries = run_experiment(spec, out / f"d{dim}")
        (out / f"decay_d{dim}.csv").write_text(emit_plot_data(summaries, "decay"))
        (out / f"concentration_d{dim}.csv").write_text(emit_plot_data(summaries, "concentration"))
        finals = [normalize_cost(s.final_m, dim) for s in summaries]
        q1, med, q3 = np.percentile(finals, [25, 50, 75])
        print(f"dim {dim}: normalised final M median {med:.4f} (q1 {q1:.4f}, q3 {q3:.4f})")


if __name__ == "__main__":
    main()
