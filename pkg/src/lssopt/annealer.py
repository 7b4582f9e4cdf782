"""Simulated annealing with an arbitrary potential.

The same chain runner drives both the plain SA baseline (potential = true
cost, charged as expensive) and the surrogate-guided branching inside LSS
(potential = state-value model, charged as cheap).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .budget import CHEAP, BudgetLedger
from .domain import BoxDomain, reflect_into_box
from .errors import InvalidInputError


@dataclass(frozen=True)
class CoolingSchedule:
    """Temperature as a function of an integer index (step or epoch).

    kinds:
      ``constant``  -- params ``(t,)``
      ``geometric`` -- params ``(t_start, t_end, n)``: decays from ``t_start`` at
                       index 0 to ``t_end`` at index ``n - 1`` and stays there
      ``table``     -- params are the temperatures themselves; the last one
                       repeats past the end
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind == "constant":
            ok = len(params) == 1 and params[0] > 0
        elif self.kind == "geometric":
            ok = len(params) == 3 and params[0] > 0 and params[1] > 0 and params[2] >= 1 and params[1] <= params[0]
        elif self.kind == "table":
            ok = len(params) >= 1 and all(p > 0 for p in params)
        else:
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        if not ok:
            raise InvalidInputError(f"bad parameters {params} for {self.kind} schedule")

    @classmethod
    def constant(cls, t: float) -> "CoolingSchedule":
        return cls("constant", (t,))

    @classmethod
    def geometric(cls, t_start: float, t_end: float, n: int) -> "CoolingSchedule":
        return cls("geometric", (t_start, t_end, n))

    def temperature_at(self, index: int) -> float:
        if self.kind == "constant":
            return self.params[0]
        if self.kind == "table":
            return self.params[min(max(index, 0), len(self.params) - 1)]
        t0, t1, n = self.params
        if n <= 1:
            return t1
        frac = min(max(index, 0), n - 1) / (n - 1)
        return t0 * (t1 / t0) ** frac


@dataclass(frozen=True)
class SaConfig:
    steps: int
    step_size: tuple[float, ...]
    schedule: CoolingSchedule
    seed: int | None = None

    def __post_init__(self):
        if self.steps < 0:
            raise InvalidInputError("steps must be non-negative")
        sizes = tuple(float(s) for s in np.atleast_1d(self.step_size))
        if any(s < 0 or not math.isfinite(s) for s in sizes):
            raise InvalidInputError("step sizes must be finite and non-negative")
        object.__setattr__(self, "step_size", sizes)


@dataclass
class AnnealResult:
    state: np.ndarray
    value: float
    accepted: int = 0
    rejected: int = 0
    best_state: np.ndarray | None = None
    best_value: float = math.inf
    # best-so-far potential value after each step (only when requested)
    best_trace: list[float] = field(default_factory=list)


def propose(state, step_size, rng: np.random.Generator, domain: BoxDomain) -> np.ndarray:
    """Uniform box perturbation of half-width ``step_size``, reflected into ``domain``."""
    s = np.asarray(state, dtype=float)
    h = np.broadcast_to(np.asarray(step_size, dtype=float), s.shape)
    noise = rng.uniform(-1.0, 1.0, size=s.shape) * h
    return reflect_into_box(s + noise, domain)


def metropolis_accept(old_cost: float, new_cost: float, temperature: float, rng: np.random.Generator) -> bool:
    """Accept with probability ``exp(min((old - new) / T, 0))``."""
    if temperature <= 0:
        raise InvalidInputError("temperature must be positive")
    if new_cost <= old_cost:
        return True
    return rng.random() < math.exp((old_cost - new_cost) / temperature)


def anneal(
    start,
    potential: Callable[[np.ndarray], float],
    config: SaConfig,
    domain: BoxDomain,
    ledger: BudgetLedger | None = None,
    *,
    cost_class: str = CHEAP,
    start_value: float | None = None,
    rng: np.random.Generator | None = None,
    track: bool = False,
) -> AnnealResult:
    """Run ``config.steps`` propose/accept steps from ``start``.

    The current state's potential value is cached, so each step costs exactly
    one potential call. The start is evaluated once unless ``start_value`` is
    supplied. Every call is charged to ``ledger`` under ``cost_class``.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    state = np.array(start, dtype=float, ndmin=1)
    if len(config.step_size) not in (1, domain.dim):
        raise InvalidInputError("step_size dimension does not match the domain")

    def call(x):
        if ledger is not None:
            ledger.charge(cost_class)
        return float(potential(x))

    value = call(state) if start_value is None else float(start_value)
    res = AnnealResult(state=state, value=value, best_state=state, best_value=value)
    step = np.asarray(config.step_size)
    for k in range(config.steps):
        cand = propose(state, step, rng, domain)
        cand_value = call(cand)
        if metropolis_accept(value, cand_value, config.schedule.temperature_at(k), rng):
            state, value = cand, cand_value
            res.accepted += 1
        else:
            res.rejected += 1
        if cand_value < res.best_value:
            res.best_state, res.best_value = cand, cand_value
        if track:
            res.best_trace.append(res.best_value)
    res.state, res.value = state, value
    return res


def chain_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for one chain, keyed by ``(seed, *stream)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *(int(s) for s in stream)]))


def split_steps(total: int, chains: int) -> list[int]:
    """Spread ``total`` steps over ``chains`` as evenly as possible, front-loaded."""
    base, extra = divmod(max(total, 0), chains)
    return [base + (1 if j < extra else 0) for j in range(chains)]


def step_sizes_from_fraction(domain: BoxDomain, fraction: float | Sequence[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in domain.lengths * np.asarray(fraction, dtype=float))
