"""Command-line entry point: ``lssopt {run,bench,plotdata,validate-config}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    PLOT_KINDS,
    ExperimentSpec,
    compare,
    comparison_table,
    emit_plot_data,
    read_outputs,
    run_experiment,
    summarize,
)
from .config import load_config_file
from .errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("lssopt")

SA_FRACTIONS = (1 / 12.5, 1 / 25, 1 / 50)


def _objective_for_dim(dim: int) -> tuple[str, None]:
    return ("toy1d", None) if dim == 1 else (f"toyNd:{dim}", None)


def _override(spec: ExperimentSpec, args, *, method: bool = True) -> ExperimentSpec:
    kw = {}
    if args.runs is not None:
        kw["runs"] = args.runs
    if args.seed is not None:
        kw["seed_base"] = args.seed
    if args.budget is not None:
        kw["budget"] = args.budget
    if args.dim is not None:
        kw["objective"], kw["dim"] = _objective_for_dim(args.dim)
    if method and args.method is not None:
        kw["method"] = args.method
    out = replace(spec, **kw)
    out.validate()
    return out


def _specs(args) -> list[ExperimentSpec]:
    if args.config:
        return load_config_file(args.config)
    return [ExperimentSpec()]


def cmd_run(args) -> int:
    spec = _override(_specs(args)[0], args)
    summaries = run_experiment(spec, args.out)
    row = summarize(spec.name, spec.method, summaries, spec.level_sets)
    print(comparison_table([row]), end="")
    if args.out:
        log.info("wrote traces and summary to %s", args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    specs = _specs(args)
    if len(specs) == 1 and not args.config:
        base = specs[0]
        specs = [base] + [replace(base, method="sa", sa_step_fraction=f) for f in SA_FRACTIONS]
    specs = [_override(s, args, method=False) for s in specs]
    budget = args.budget if args.budget is not None else specs[0].budget
    rows, _ = compare(specs, budget, args.out)
    print(comparison_table(rows), end="")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    if args.source:
        summaries = read_outputs(args.source)
        levels = None
    else:
        spec = _override(_specs(args)[0], args)
        summaries = run_experiment(spec)
        levels = spec.level_sets
    text = emit_plot_data(summaries, args.kind, levels)
    if args.out:
        path = Path(args.out)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.config:
        raise ConfigError("validate-config needs --config")
    specs = [_override(s, args) for s in load_config_file(args.config)]
    for s in specs:
        print(f"ok: {s.name} method={s.method} objective={s.objective} runs={s.runs} budget={s.budget}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lssopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--out", help=out_help)
        p.add_argument("--runs", type=int)
        p.add_argument("--seed", type=int, help="seed of the first run")
        p.add_argument("--budget", type=int, help="expensive-call cap")
        p.add_argument("--dim", type=int)
        p.add_argument("--method", choices=("lss", "sa"))

    p = sub.add_parser("run", help="run one experiment spec")
    common(p, "directory for trace and summary CSVs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="compare methods at a matched budget")
    common(p, "directory for comparison and trace CSVs")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plotdata", help="emit long-format series,x,y CSV")
    common(p, "output CSV file (default stdout)")
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.add_argument("--from", dest="source", help="read summaries written by `run --out`")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("validate-config", help="check a TOML file and exit")
    common(p, "unused")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
