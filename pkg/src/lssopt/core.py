"""The Landscape-Sketch-and-Step driver.

Each epoch fits a state-value model on the weighted history, branches every
active state into a low- and a high-temperature annealing child under that
model, picks a few children for true evaluation, and trims the FIFO queue of
active states back to its scheduled length while keeping the incumbent.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .annealer import CoolingSchedule, SaConfig, anneal, chain_rng
from .budget import AUXILIARY, CHEAP, BudgetLedger
from .concentration import ConcentrationState, apply_patience, concentration_nd
from .domain import BoxDomain, Objective, get_objective
from .errors import ConfigError, InvalidInputError
from .history import EvaluationHistory, state_key
from .policies import (
    BranchTriplet,
    SoftmaxParams,
    adjust_high_temperature,
    mu_high,
    mu_low,
    sample_without_replacement,
    split_budget,
)
from .surrogate import DEFAULT_ARMS, MIN_HISTORY, ModelSelection, Regressor

log = logging.getLogger(__name__)

EPS_DIV = 1e-12

TRACE_COLUMNS = (
    "epoch",
    "m_functional",
    "concentration_raw",
    "concentration_effective",
    "expensive_cum",
    "cheap_cum",
    "t_high_effective",
    "e_low",
    "e_high",
)


class ActiveQueue:
    """FIFO queue of active states with strictly increasing tags."""

    def __init__(self, states: Sequence = ()):
        self.entries: deque[tuple[int, np.ndarray]] = deque()
        self.next_tag = 0
        for s in states:
            self.enqueue(s)

    def enqueue(self, state) -> int:
        tag = self.next_tag
        self.entries.append((tag, np.array(state, dtype=float, ndmin=1)))
        self.next_tag += 1
        return tag

    def dequeue(self) -> tuple[int, np.ndarray]:
        if not self.entries:
            raise IndexError("dequeue from an empty queue")
        return self.entries.popleft()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[np.ndarray]:
        return (s for _, s in self.entries)

    def __contains__(self, state) -> bool:
        key = state_key(state)
        return any(state_key(s) == key for _, s in self.entries)

    @property
    def states(self) -> list[np.ndarray]:
        return [s for _, s in self.entries]

    @property
    def tags(self) -> list[int]:
        return [t for t, _ in self.entries]


def _schedule_value(seq: Sequence[Any], i: int):
    return seq[min(i, len(seq) - 1)]


@dataclass(frozen=True)
class EpochSchedules:
    """Per-epoch hyperparameters; sequences repeat their last entry.

    ``a_schedule[0]`` is the queue length after bootstrap; epoch ``t`` (from 1)
    branches ``a_schedule[t-1]`` agents, evaluates at most ``e_schedule[t-1]``
    children and trims to ``a_schedule[t]``.
    """

    e_schedule: tuple[int, ...] = (3,)
    a_schedule: tuple[int, ...] = (3,)
    k_low: tuple[int, ...] = (10,)
    k_high: tuple[int, ...] = (10,)
    box_shrink: tuple[float, ...] = (1.0,)
    model_reselect_every: int = 10

    def __post_init__(self):
        for name in ("e_schedule", "a_schedule", "k_low", "k_high", "box_shrink"):
            val = getattr(self, name)
            seq = tuple(val) if isinstance(val, (list, tuple)) else (val,)
            if not seq:
                raise ConfigError(f"{name} must not be empty")
            object.__setattr__(self, name, seq)
        if any(int(a) < 1 for a in self.a_schedule):
            raise ConfigError("queue lengths must be positive")
        if any(int(e) < 0 for e in self.e_schedule):
            raise ConfigError("evaluation counts must be non-negative")
        if any(int(k) < 0 for k in self.k_low + self.k_high):
            raise ConfigError("annealing step counts must be non-negative")
        if any(not 0.0 < f <= 1.0 for f in self.box_shrink):
            raise ConfigError("box shrink factors must lie in (0, 1]")
        if self.model_reselect_every < 1:
            raise ConfigError("model_reselect_every must be positive")
        n = max(len(self.e_schedule), len(self.a_schedule)) + 1
        for i in range(n):
            if self.e(i) > self.a(i):
                raise ConfigError(f"e_{i}={self.e(i)} exceeds a_{i}={self.a(i)}")
        for seq, name in ((self.a_schedule, "a_schedule"), (self.e_schedule, "e_schedule")):
            if any(b > a for a, b in zip(seq, seq[1:])):
                raise ConfigError(f"{name} must be non-increasing")

    def a(self, i: int) -> int:
        return int(_schedule_value(self.a_schedule, i))

    def e(self, i: int) -> int:
        return int(_schedule_value(self.e_schedule, i))

    def k(self, i: int) -> tuple[int, int]:
        return int(_schedule_value(self.k_low, i)), int(_schedule_value(self.k_high, i))

    def shrink(self, i: int) -> float:
        return float(_schedule_value(self.box_shrink, i))


@dataclass
class LssConfig:
    objective: str = "toy1d"
    dim: int | None = None
    seed: int = 0
    budget: int | None = None
    max_epochs: int = 100
    early_stop_patience: int | None = None
    schedules: EpochSchedules = field(default_factory=EpochSchedules)
    t_low: CoolingSchedule = field(default_factory=lambda: CoolingSchedule.constant(0.01))
    t_high: CoolingSchedule = field(default_factory=lambda: CoolingSchedule.constant(0.1))
    step_fraction: float = 1.0 / 12.5
    explore_threshold: float = 0.5
    weight_rate: float = 0.5
    beta_scale: float = 1.0
    softmax: SoftmaxParams = field(default_factory=SoftmaxParams)
    patience: int = 5
    deflate_factor: float = 0.9
    inflate_factor: float = 0.5
    concentration_mode: str = "mean"
    concentration_bins: int | None = None
    arms: tuple[dict, ...] = DEFAULT_ARMS
    selection: str = "bandit"
    bandit_epsilon: float = 0.1
    bandit_td_rate: float = 0.5
    cv_folds: int = 3
    min_history: int = MIN_HISTORY
    initial_states: tuple[tuple[float, ...], ...] | None = None

    def validate(self) -> None:
        if self.min_history < MIN_HISTORY:
            raise ConfigError(f"min_history must be at least {MIN_HISTORY}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be positive")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if not 0.0 <= self.weight_rate <= 1.0:
            raise ConfigError("weight_rate must lie in [0, 1]")
        if self.beta_scale <= 0 or self.step_fraction <= 0:
            raise ConfigError("beta_scale and step_fraction must be positive")
        if self.concentration_mode not in ("mean", "max"):
            raise ConfigError("concentration_mode must be 'mean' or 'max'")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be positive")
        ConcentrationState(self.patience, self.deflate_factor, self.inflate_factor)
        ModelSelection(self.arms, self.selection, self.schedules.model_reselect_every,
                       self.bandit_epsilon, self.bandit_td_rate, self.cv_folds)
        obj = get_objective(self.objective, self.dim)
        if self.initial_states is not None:
            for s in self.initial_states:
                if len(s) != obj.dim:
                    raise ConfigError(f"initial state {s} does not match dim {obj.dim}")


@dataclass
class EpochRow:
    epoch: int
    m_functional: float
    concentration_raw: float
    concentration_effective: float
    expensive_cum: int
    cheap_cum: int
    t_high_effective: float
    e_low: int
    e_high: int
    # bookkeeping not written to the CSV trace
    agents: int = 0
    k_low: int = 0
    k_high: int = 0
    new_evaluations: int = 0
    model_arm: int = 0

    def csv_row(self) -> list:
        return [getattr(self, c) for c in TRACE_COLUMNS]


@dataclass
class LssState:
    """Everything the epoch loop mutates."""

    domain: BoxDomain
    history: EvaluationHistory
    queue: ActiveQueue
    concentration: ConcentrationState
    ledger: BudgetLedger
    selection: ModelSelection
    rng: np.random.Generator
    seed: int
    epoch: int = 0
    model: Regressor | None = None


@dataclass
class RunResult:
    dim: int
    initial_m: float
    bootstrap_evaluations: int
    trace: list[EpochRow]
    incumbent: np.ndarray
    incumbent_cost: float
    ledger: BudgetLedger
    history: EvaluationHistory
    halted: str
    method: str = "lss"

    @property
    def final_m(self) -> float:
        return self.incumbent_cost

    def m_series(self) -> list[float]:
        """M after bootstrap followed by M after each epoch."""
        return [self.initial_m] + [r.m_functional for r in self.trace]


def evaluate_into(history: EvaluationHistory, objective: Callable, state, epoch: int, ledger: BudgetLedger) -> bool:
    """Evaluate and store ``state`` unless it is already known. Returns True if evaluated."""
    if state in history:
        return False
    history.record(state, objective(state), epoch, ledger)
    return True


def bootstrap(
    domain: BoxDomain,
    objective: Callable,
    rng: np.random.Generator,
    ledger: BudgetLedger,
    *,
    min_history: int = MIN_HISTORY,
    queue_length: int = 3,
    initial_states: Sequence | None = None,
) -> tuple[EvaluationHistory, ActiveQueue]:
    """Seed the history with distinct evaluated states and build the first queue."""
    if min_history < MIN_HISTORY:
        raise InvalidInputError(f"min_history must be at least {MIN_HISTORY}")
    history = EvaluationHistory(domain.dim)
    for s in initial_states or ():
        evaluate_into(history, objective, np.array(s, dtype=float, ndmin=1), 0, ledger)
    target = max(min_history, queue_length)
    while len(history) < target:
        evaluate_into(history, objective, domain.sample(rng), 0, ledger)
    recent = [r.state for r in history.records[-queue_length:]]
    star = history.incumbent.state
    if not any(state_key(s) == state_key(star) for s in recent):
        recent = [star] + recent[1:]
    return history, ActiveQueue(recent)


def shrink_box(domain: BoxDomain, center, factor: float, bounds: BoxDomain | None = None) -> BoxDomain:
    """Scale every side by ``factor`` around ``center``, shifted to stay inside ``bounds``."""
    if not 0.0 < factor <= 1.0:
        raise InvalidInputError("shrink factor must lie in (0, 1]")
    outer = bounds or domain
    if factor == 1.0 and bounds is None:
        return domain
    c = np.asarray(center, dtype=float)
    half = 0.5 * factor * domain.lengths
    lo = np.asarray(outer.lower)
    hi = np.asarray(outer.upper)
    half = np.minimum(half, 0.5 * (hi - lo))
    new_lo = np.clip(c - half, lo, hi - 2.0 * half)
    return BoxDomain(tuple(new_lo), tuple(new_lo + 2.0 * half))


def enlarge_and_trim(
    queue: ActiveQueue,
    history: EvaluationHistory,
    chosen: Sequence[np.ndarray],
    a_next: int,
    objective: Callable,
    epoch: int,
    ledger: BudgetLedger,
) -> int:
    """Enqueue ``chosen`` (evaluating unseen ones), then trim to ``a_next`` keeping the incumbent.

    Returns the number of new true evaluations.
    """
    new = 0
    for s in chosen:
        queue.enqueue(s)
        new += evaluate_into(history, objective, s, epoch, ledger)
    costs = [history.cost_of(s) for s in queue]
    star = queue.states[int(np.argmin(costs))]
    if history.cost_of(star) != history.m_functional():
        raise AssertionError("queue minimum differs from history minimum")
    removed_star = False
    while len(queue) > a_next:
        _, s = queue.dequeue()
        removed_star |= state_key(s) == state_key(star)
    if removed_star and star not in queue:
        queue.enqueue(star)
        queue.dequeue()
    return new


def check_queue_invariants(queue: ActiveQueue, history: EvaluationHistory) -> None:
    for s in queue:
        if s not in history:
            raise AssertionError(f"queue state {s.tolist()} missing from history")
    qmin = min(history.cost_of(s) for s in queue)
    if qmin != history.m_functional():
        raise AssertionError(f"queue minimum {qmin} != history minimum {history.m_functional()}")


def _concentration(queue: ActiveQueue, history: EvaluationHistory, domain: BoxDomain, cfg: LssConfig) -> float:
    pts = np.clip(np.array(queue.states), domain.lower, domain.upper)
    star = np.clip(history.incumbent.state, domain.lower, domain.upper)
    return concentration_nd(pts, star, domain, cfg.concentration_bins or len(queue), cfg.concentration_mode)


def init_state(cfg: LssConfig, objective: Objective) -> LssState:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    ledger = BudgetLedger()
    domain = objective.domain
    history, queue = bootstrap(
        domain,
        objective,
        rng,
        ledger,
        min_history=cfg.min_history,
        queue_length=cfg.schedules.a(0),
        initial_states=cfg.initial_states,
    )
    ledger.close_epoch(0)
    raw = _concentration(queue, history, domain, cfg)
    conc = ConcentrationState(cfg.patience, cfg.deflate_factor, cfg.inflate_factor, raw, raw)
    selection = ModelSelection(
        cfg.arms,
        cfg.selection,
        cfg.schedules.model_reselect_every,
        cfg.bandit_epsilon,
        cfg.bandit_td_rate,
        cfg.cv_folds,
    )
    return LssState(domain, history, queue, conc, ledger, selection, rng, cfg.seed)


def branch(
    state: LssState,
    model: Regressor,
    cfg: LssConfig,
    t_high: float,
) -> list[BranchTriplet]:
    """Anneal every active state twice under the model: once cold, once hot."""
    i = state.epoch - 1
    k_low, k_high = cfg.schedules.k(i)
    deep = state.domain.lengths * cfg.step_fraction
    explore = deep if state.concentration.effective_value >= cfg.explore_threshold else 0.5 * deep
    t_low = cfg.t_low.temperature_at(i)
    potential = model.predict
    triplets = []
    for j, parent in enumerate(state.queue.states):
        state.ledger.charge(AUXILIARY)
        pv = potential(parent)
        low = anneal(
            parent, potential, SaConfig(k_low, tuple(deep), CoolingSchedule.constant(t_low)),
            state.domain, state.ledger, cost_class=CHEAP, start_value=pv,
            rng=chain_rng(state.seed, state.epoch, j, 0),
        )
        high = anneal(
            parent, potential, SaConfig(k_high, tuple(explore), CoolingSchedule.constant(t_high)),
            state.domain, state.ledger, cost_class=CHEAP, start_value=pv,
            rng=chain_rng(state.seed, state.epoch, j, 1),
        )
        triplets.append(
            BranchTriplet(
                parent=parent,
                low_child=low.state,
                high_child=high.state,
                parent_cost=state.history.cost_of(parent),
                parent_value=pv,
                low_value=low.value,
                high_value=high.value,
            )
        )
    return triplets


def choose(
    triplets: Sequence[BranchTriplet],
    e_total: int,
    conc: float,
    star,
    params: SoftmaxParams,
    rng: np.random.Generator,
) -> tuple[list[np.ndarray], int, int]:
    """Pick ``e_total`` children: low ones first, then high ones from untouched branches."""
    n = len(triplets)
    e_total = min(e_total, n)
    e_low, e_high = split_budget(e_total, conc, rng)
    lows = sample_without_replacement(mu_low(triplets, conc, params), e_low, rng) if e_low else []
    remaining = [j for j in range(n) if j not in set(lows)]
    if e_high > len(remaining):
        # surplus goes back to the low pool
        surplus = e_high - len(remaining)
        extra = sample_without_replacement(mu_low(triplets, conc, params), surplus, rng, pool=remaining)
        lows += extra
        e_low += surplus
        e_high -= surplus
        remaining = [j for j in range(n) if j not in set(lows)]
    highs: list[int] = []
    if e_high:
        measure = mu_high(triplets, star, conc, params, already_taken=lows)
        highs = sample_without_replacement(measure, e_high, rng, pool=remaining)
    chosen = [triplets[j].low_child for j in lows] + [triplets[j].high_child for j in highs]
    return chosen, e_low, e_high


def epoch_step(state: LssState, objective: Callable, cfg: LssConfig, bounds: BoxDomain | None = None) -> EpochRow:
    """Run one full epoch and return its trace row."""
    state.epoch += 1
    i = state.epoch - 1
    hist = state.history

    if state.selection.due(state.epoch):
        state.selection.reselect(hist, state.rng, seed=state.seed)
    state.model = state.selection.fit(hist, seed=state.seed + state.epoch)

    conc = state.concentration.effective_value
    alpha = hist.amplitude()
    t_high = adjust_high_temperature(cfg.t_high.temperature_at(i), conc, alpha, EPS_DIV)
    agents = len(state.queue)
    k_low, k_high = cfg.schedules.k(i)
    triplets = branch(state, state.model, cfg, t_high)

    e_i = min(cfg.schedules.e(i), agents)
    if cfg.budget is not None:
        e_i = max(0, min(e_i, cfg.budget - state.ledger.expensive_calls))
    m_before = hist.m_functional()
    chosen, e_low, e_high = choose(triplets, e_i, conc, hist.incumbent.state, cfg.softmax, state.rng)
    new = enlarge_and_trim(state.queue, hist, chosen, cfg.schedules.a(state.epoch), objective, state.epoch, state.ledger)
    check_queue_invariants(state.queue, hist)

    beta = cfg.beta_scale / max(hist.amplitude(), EPS_DIV)
    hist.update_weights(cfg.weight_rate, beta)
    raw = _concentration(state.queue, hist, state.domain, cfg)
    apply_patience(state.concentration, raw, hist.m_functional() < m_before)
    state.ledger.close_epoch(state.epoch)

    factor = cfg.schedules.shrink(i)
    if factor < 1.0 and state.epoch % cfg.schedules.model_reselect_every == 0:
        state.domain = shrink_box(state.domain, hist.incumbent.state, factor, bounds)

    return EpochRow(
        epoch=state.epoch,
        m_functional=hist.m_functional(),
        concentration_raw=state.concentration.raw_value,
        concentration_effective=state.concentration.effective_value,
        expensive_cum=state.ledger.expensive_calls,
        cheap_cum=state.ledger.cheap_calls,
        t_high_effective=t_high,
        e_low=e_low,
        e_high=e_high,
        agents=agents,
        k_low=k_low,
        k_high=k_high,
        new_evaluations=new,
        model_arm=state.selection.current,
    )


def run(cfg: LssConfig, objective: Objective | None = None) -> RunResult:
    """Iterate epochs until the budget, the epoch cap, or early stopping halts the run."""
    cfg.validate()
    obj = objective or get_objective(cfg.objective, cfg.dim)
    state = init_state(cfg, obj)
    outer = obj.domain
    initial_m = state.history.m_functional()
    boot = state.ledger.expensive_calls
    trace: list[EpochRow] = []
    halted = "max_epochs"
    stale = 0
    while True:
        if cfg.budget is not None and state.ledger.expensive_calls >= cfg.budget:
            halted = "budget"
            break
        if state.epoch >= cfg.max_epochs:
            halted = "max_epochs"
            break
        if cfg.early_stop_patience is not None and stale >= cfg.early_stop_patience:
            halted = "early_stop"
            break
        prev = state.history.m_functional()
        row = epoch_step(state, obj, cfg, outer)
        trace.append(row)
        stale = 0 if row.m_functional < prev else stale + 1
        log.debug("epoch %d M=%.6g C=%.3f", row.epoch, row.m_functional, row.concentration_effective)
    inc = state.history.incumbent
    return RunResult(
        dim=obj.dim,
        initial_m=initial_m,
        bootstrap_evaluations=boot,
        trace=trace,
        incumbent=inc.state,
        incumbent_cost=inc.cost,
        ledger=state.ledger,
        history=state.history,
        halted=halted,
    )
