"""Repeated-run experiments comparing LSS with plain simulated annealing.

Both methods charge every true objective call to a ledger, so comparisons
are made at matched expensive-evaluation budgets.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annealer import CoolingSchedule, SaConfig, anneal, chain_rng, split_steps, step_sizes_from_fraction
from .budget import EXPENSIVE, BudgetLedger
from .core import TRACE_COLUMNS, EpochRow, LssConfig, run as run_lss
from .domain import get_objective, landscape_extrema, normalize_cost
from .errors import ConfigError, InvalidInputError

HIT_TOLERANCE = 1e-9
NOT_HIT = -1


def default_level_sets() -> tuple[float, ...]:
    return landscape_extrema()[0]


@dataclass
class ExperimentSpec:
    method: str = "lss"
    objective: str = "toy1d"
    dim: int | None = None
    runs: int = 20
    seed_base: int = 0
    sa_step_fraction: float = 1.0 / 50.0
    budget: int = 120
    level_sets: tuple[float, ...] = field(default_factory=default_level_sets)
    label: str | None = None
    x_init: float = 0.1
    agents: int = 3
    sa_t_start: float = 1.0
    sa_t_end: float = 0.01
    lss: LssConfig = field(default_factory=LssConfig)
    workers: int = 1

    def __post_init__(self):
        self.level_sets = tuple(float(v) for v in self.level_sets)

    def validate(self) -> None:
        if self.method not in ("lss", "sa"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if self.budget < 1:
            raise ConfigError("budget must be positive")
        if self.agents < 1:
            raise ConfigError("agents must be positive")
        if self.sa_step_fraction <= 0:
            raise ConfigError("sa_step_fraction must be positive")
        if not 0 < self.sa_t_end <= self.sa_t_start:
            raise ConfigError("SA temperatures must satisfy 0 < t_end <= t_start")
        try:
            get_objective(self.objective, self.dim)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.method == "lss":
            self.lss_config(0).validate()

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.method == "sa":
            return f"sa-L/{1.0 / self.sa_step_fraction:g}"
        return "lss"

    @property
    def resolved_dim(self) -> int:
        return get_objective(self.objective, self.dim).dim

    def lss_config(self, seed: int) -> LssConfig:
        dim = self.resolved_dim
        init = self.lss.initial_states
        if init is None:
            init = ((self.x_init,) * dim,) * self.agents
        return replace(self.lss, objective=self.objective, dim=dim, seed=seed, budget=self.budget, initial_states=init)


@dataclass
class RunSummary:
    run: int
    seed: int
    method: str
    label: str
    dim: int
    initial_m: float
    final_m: float
    expensive_calls: int
    cheap_calls: int
    halted: str
    hitting: dict[float, int | None]
    trace: list[EpochRow]

    def m_series(self) -> list[float]:
        return [self.initial_m] + [r.m_functional for r in self.trace]


def hitting_epochs(m_series: Sequence[float], levels: Iterable[float]) -> dict[float, int | None]:
    """First index with ``M <= level`` (index 0 is the post-bootstrap value)."""
    out: dict[float, int | None] = {}
    for level in levels:
        out[level] = next((i for i, m in enumerate(m_series) if m <= level + HIT_TOLERANCE), None)
    return out


def run_sa(spec: ExperimentSpec, seed: int) -> tuple[float, list[EpochRow], BudgetLedger]:
    """Plain SA: ``spec.agents`` chains on the true cost, all starting at ``x_init``.

    The shared start is evaluated once; the remaining budget is spread over
    the chains. Epoch ``t`` is the ``t``-th step of every chain.
    """
    obj = get_objective(spec.objective, spec.dim)
    domain = obj.domain
    ledger = BudgetLedger()
    start = np.full(obj.dim, spec.x_init)
    start_value = obj(start)
    ledger.charge(EXPENSIVE)
    ledger.close_epoch(0)
    steps = split_steps(spec.budget - 1, spec.agents)
    sizes = step_sizes_from_fraction(domain, spec.sa_step_fraction)
    results = []
    for j, k in enumerate(steps):
        schedule = CoolingSchedule.geometric(spec.sa_t_start, spec.sa_t_end, max(k, 1))
        results.append(
            anneal(start, obj, SaConfig(k, sizes, schedule), domain, ledger,
                   cost_class=EXPENSIVE, start_value=start_value, rng=chain_rng(seed, j), track=True)
        )
    rows = []
    best = start_value
    expensive = 1
    reference = CoolingSchedule.geometric(spec.sa_t_start, spec.sa_t_end, max(steps[0], 1))
    for t in range(max(steps, default=0)):
        active = [res for res, k in zip(results, steps) if t < k]
        best = min([best] + [res.best_trace[t] for res in active])
        expensive += len(active)
        rows.append(
            EpochRow(
                epoch=t + 1,
                m_functional=best,
                concentration_raw=math.nan,
                concentration_effective=math.nan,
                expensive_cum=expensive,
                cheap_cum=0,
                t_high_effective=reference.temperature_at(t),
                e_low=0,
                e_high=0,
                agents=len(active),
                new_evaluations=len(active),
            )
        )
    return start_value, rows, ledger


def _one_run(spec: ExperimentSpec, r: int) -> RunSummary:
    seed = spec.seed_base + r
    dim = spec.resolved_dim
    if spec.method == "lss":
        res = run_lss(spec.lss_config(seed))
        initial, rows, ledger, halted = res.initial_m, res.trace, res.ledger, res.halted
    else:
        initial, rows, ledger = run_sa(spec, seed)
        halted = "budget"
    series = [initial] + [row.m_functional for row in rows]
    return RunSummary(
        run=r,
        seed=seed,
        method=spec.method,
        label=spec.name,
        dim=dim,
        initial_m=initial,
        final_m=min(series),
        expensive_calls=ledger.expensive_calls,
        cheap_calls=ledger.cheap_calls,
        halted=halted,
        hitting=hitting_epochs(series, spec.level_sets),
        trace=list(rows),
    )


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None) -> list[RunSummary]:
    """Run ``spec.runs`` independent seeds; optionally write traces and a summary CSV."""
    spec.validate()
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            summaries = list(pool.map(_one_run, [spec] * spec.runs, range(spec.runs)))
    else:
        summaries = [_one_run(spec, r) for r in range(spec.runs)]
    if out_dir is not None:
        write_outputs(summaries, spec.level_sets, out_dir)
    return summaries


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def trace_csv(rows: Sequence[EpochRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in rows:
        w.writerow([_fmt(v) for v in row.csv_row()])
    return buf.getvalue()


def summary_csv(summaries: Sequence[RunSummary], levels: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "seed", "method", "label", "dim", "initial_m", "final_m",
                "expensive_calls", "cheap_calls", "epochs", "halted", *(f"hit_{lv:g}" for lv in levels)])
    for s in summaries:
        hits = [NOT_HIT if s.hitting.get(lv) is None else s.hitting[lv] for lv in levels]
        w.writerow([s.run, s.seed, s.method, s.label, s.dim, _fmt(s.initial_m), _fmt(s.final_m),
                    s.expensive_calls, s.cheap_calls, len(s.trace), s.halted, *hits])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_outputs(summaries: Sequence[RunSummary], levels: Sequence[float], out_dir: str | Path) -> None:
    out = Path(out_dir)
    for s in summaries:
        _write(out / f"trace_{s.label}_run{s.run:03d}.csv", trace_csv(s.trace))
    labels = sorted({s.label for s in summaries})
    for label in labels:
        subset = [s for s in summaries if s.label == label]
        _write(out / f"summary_{label}.csv", summary_csv(subset, levels))


def read_outputs(out_dir: str | Path) -> list[RunSummary]:
    """Rebuild summaries (with traces) from files written by :func:`write_outputs`."""
    out = Path(out_dir)
    summaries = []
    files = sorted(out.glob("summary_*.csv"))
    if not files:
        raise OSError(f"no summary_*.csv files in {out}")
    for f in files:
        with open(f, newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                levels = {float(k[4:]): (None if int(v) == NOT_HIT else int(v)) for k, v in rec.items() if k.startswith("hit_")}
                trace_path = out / f"trace_{rec['label']}_run{int(rec['run']):03d}.csv"
                summaries.append(
                    RunSummary(
                        run=int(rec["run"]), seed=int(rec["seed"]), method=rec["method"], label=rec["label"],
                        dim=int(rec["dim"]), initial_m=float(rec["initial_m"]), final_m=float(rec["final_m"]),
                        expensive_calls=int(rec["expensive_calls"]), cheap_calls=int(rec["cheap_calls"]),
                        halted=rec["halted"], hitting=levels, trace=read_trace(trace_path),
                    )
                )
    return summaries


def read_trace(path: str | Path) -> list[EpochRow]:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = []
            for rec in reader:
                rows.append(
                    EpochRow(
                        epoch=int(rec["epoch"]),
                        m_functional=float(rec["m_functional"]),
                        concentration_raw=float(rec["concentration_raw"]),
                        concentration_effective=float(rec["concentration_effective"]),
                        expensive_cum=int(rec["expensive_cum"]),
                        cheap_cum=int(rec["cheap_cum"]),
                        t_high_effective=float(rec["t_high_effective"]),
                        e_low=int(rec["e_low"]),
                        e_high=int(rec["e_high"]),
                    )
                )
    except OSError as exc:
        raise OSError(f"cannot read trace {path}: {exc}") from exc
    return rows


@dataclass
class ComparisonRow:
    label: str
    method: str
    runs: int
    median_final_m: float
    q1_final_m: float
    q3_final_m: float
    hit_fraction: dict[float, float]
    mean_expensive: float
    mean_cheap: float


def summarize(label: str, method: str, summaries: Sequence[RunSummary], levels: Sequence[float]) -> ComparisonRow:
    finals = np.array([s.final_m for s in summaries])
    q1, med, q3 = np.percentile(finals, [25, 50, 75])
    return ComparisonRow(
        label=label,
        method=method,
        runs=len(summaries),
        median_final_m=float(med),
        q1_final_m=float(q1),
        q3_final_m=float(q3),
        hit_fraction={lv: float(np.mean([s.hitting[lv] is not None for s in summaries])) for lv in levels},
        mean_expensive=float(np.mean([s.expensive_calls for s in summaries])),
        mean_cheap=float(np.mean([s.cheap_calls for s in summaries])),
    )


def compare(
    specs: Sequence[ExperimentSpec],
    matched_budget: int,
    out_dir: str | Path | None = None,
) -> tuple[list[ComparisonRow], dict[str, list[RunSummary]]]:
    """Run every spec at the same expensive budget and tabulate final-M quartiles and hit rates."""
    if not specs:
        raise ConfigError("nothing to compare")
    first = specs[0]
    key = (get_objective(first.objective, first.dim).name, tuple(first.level_sets))
    for s in specs[1:]:
        if (get_objective(s.objective, s.dim).name, tuple(s.level_sets)) != key:
            raise ConfigError("compared specs must share objective, dimension and level sets")
    rows = []
    runs: dict[str, list[RunSummary]] = {}
    for spec in specs:
        matched = replace(spec, budget=matched_budget)
        summaries = run_experiment(matched, out_dir)
        label = matched.name
        if label in runs:
            label = f"{label}#{len(runs)}"
        runs[label] = summaries
        rows.append(summarize(label, matched.method, summaries, matched.level_sets))
    if out_dir is not None:
        _write(Path(out_dir) / "comparison.csv", comparison_csv(rows))
    return rows, runs


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    levels = list(rows[0].hit_fraction) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "method", "runs", "median_final_m", "q1_final_m", "q3_final_m",
                *(f"hit_{lv:g}" for lv in levels), "mean_expensive", "mean_cheap"])
    for r in rows:
        w.writerow([r.label, r.method, r.runs, _fmt(r.median_final_m), _fmt(r.q1_final_m), _fmt(r.q3_final_m),
                    *(_fmt(r.hit_fraction[lv]) for lv in levels), _fmt(r.mean_expensive), _fmt(r.mean_cheap)])
    return buf.getvalue()


def comparison_table(rows: Sequence[ComparisonRow]) -> str:
    """Aligned plain-text rendering of :func:`compare` output."""
    levels = list(rows[0].hit_fraction) if rows else []
    header = ["label", "runs", "median M", "q1", "q3", *(f"hit<={lv:g}" for lv in levels), "E calls", "V calls"]
    body = [
        [r.label, str(r.runs), f"{r.median_final_m:.4f}", f"{r.q1_final_m:.4f}", f"{r.q3_final_m:.4f}",
         *(f"{r.hit_fraction[lv]:.2f}" for lv in levels), f"{r.mean_expensive:.1f}", f"{r.mean_cheap:.1f}"]
        for r in rows
    ]
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    lines = ["  ".join(x.ljust(wd) for x, wd in zip(line, widths)).rstrip() for line in [header, *body]]
    return "\n".join(lines) + "\n"


PLOT_KINDS = ("hitting", "concentration", "decay")


def emit_plot_data(summaries: Sequence[RunSummary], kind: str, levels: Sequence[float] | None = None) -> str:
    """Long-format ``series,x,y`` CSV for hitting times, concentration or normalised M decay."""
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {PLOT_KINDS}")
    if not summaries:
        raise InvalidInputError("no summaries to plot")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y"])
    for s in summaries:
        series = f"{s.label}/run{s.run:03d}"
        if kind == "hitting":
            for lv in (levels if levels is not None else sorted(s.hitting, reverse=True)):
                hit = s.hitting.get(lv)
                w.writerow([series, _fmt(float(lv)), NOT_HIT if hit is None else hit])
        elif kind == "concentration":
            for row in s.trace:
                w.writerow([series, row.epoch, _fmt(row.concentration_effective)])
        else:
            for epoch, m in enumerate(s.m_series()):
                w.writerow([series, epoch, _fmt(normalize_cost(m, s.dim))])
    return buf.getvalue()
