"""Selection measures over branched children and the temperature/budget policies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyHistoryError, InvalidInputError, PoolExhaustedError
from .history import EvaluationHistory


@dataclass(frozen=True)
class SoftmaxParams:
    """Sharpness of the two softmax maps; only ``abs(eta)`` is used."""

    eta1: float = -3.0
    eta2: float = -3.0
    eps: float = 1e-12

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidInputError("eps must be positive")
        if not (np.isfinite(self.eta1) and np.isfinite(self.eta2)):
            raise InvalidInputError("sharpness must be finite")


@dataclass
class BranchTriplet:
    parent: np.ndarray
    low_child: np.ndarray
    high_child: np.ndarray
    parent_cost: float
    parent_value: float
    low_value: float
    high_value: float


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if v.size == 0:
        raise InvalidInputError("empty input")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("non-finite input")
    return v


def softmax_min(x, eta: float, eps: float = 1e-12) -> np.ndarray:
    """Softmax of the distance to the maximum, scaled to [0, 1]; peaks at argmin x."""
    v = _as_vector(x)
    scaled = np.abs(v - v.max()) / (v.max() - v.min() + eps)
    return _softmax(abs(eta) * scaled)


def softmax_max(x, eta: float, eps: float = 1e-12) -> np.ndarray:
    """Softmax of the distance to the minimum, scaled to [0, 1]; peaks at argmax x."""
    v = _as_vector(x)
    scaled = np.abs(v - v.min()) / (v.max() - v.min() + eps)
    return _softmax(abs(eta) * scaled)


def amplitude(history: EvaluationHistory) -> float:
    """Largest observed cost gap, used as the energy-barrier estimate."""
    if len(history) == 0:
        raise EmptyHistoryError("history is empty")
    return history.amplitude()


def adjust_high_temperature(t_base: float, conc: float, alpha: float, eps: float = 1e-12) -> float:
    """Blend the scheduled high temperature with ``4 * alpha`` by concentration (harmonically)."""
    if t_base <= 0:
        raise InvalidInputError("base temperature must be positive")
    inv = (1.0 - conc) / t_base + conc / (4.0 * max(alpha, eps))
    return 1.0 / inv


def split_budget(e_total: int, conc: float, rng: np.random.Generator) -> tuple[int, int]:
    """``e_high ~ Binomial(e_total, conc)``; returns ``(e_low, e_high)``."""
    if e_total < 0:
        raise InvalidInputError("e_total must be non-negative")
    p = min(1.0, max(0.0, float(conc)))
    e_high = int(rng.binomial(e_total, p))
    return e_total - e_high, e_high


def mu_low(triplets: Sequence[BranchTriplet], conc: float, params: SoftmaxParams) -> np.ndarray:
    if not triplets:
        raise InvalidInputError("no low-temperature children")
    low = np.array([t.low_value for t in triplets])
    parent = np.array([t.parent_cost for t in triplets])
    scores = conc * (low - parent) + (1.0 - conc) * low
    return softmax_min(scores, params.eta1, params.eps)


def horizontal_measure(children, star) -> np.ndarray:
    """Probabilities proportional to squared distance from ``star`` (uniform if all zero)."""
    pts = np.asarray(children, dtype=float).reshape(len(children), -1)
    d2 = np.sum((pts - np.asarray(star, dtype=float)) ** 2, axis=1)
    total = d2.sum()
    if total <= 0:
        return np.full(len(d2), 1.0 / len(d2))
    return d2 / total


def mu_high(
    triplets: Sequence[BranchTriplet],
    star,
    conc: float,
    params: SoftmaxParams,
    already_taken: Iterable[int] = (),
) -> np.ndarray:
    """Measure over high children, zero on ``already_taken`` and renormalised.

    Mixes a far-from-incumbent term (weight ``conc``) with a large-jump term
    (weight ``1 - conc``). Falls back to uniform over the remainder when the
    restricted mass vanishes.
    """
    n = len(triplets)
    if n == 0:
        raise InvalidInputError("no high-temperature children")
    taken = {int(i) for i in already_taken}
    remaining = [i for i in range(n) if i not in taken]
    if not remaining:
        raise PoolExhaustedError("every high child has been removed")
    horizontal = horizontal_measure([t.high_child for t in triplets], star)
    jumps = np.abs(np.array([t.high_value - t.parent_value for t in triplets]))
    vertical = softmax_max(jumps, params.eta2, params.eps)
    combined = (1.0 - conc) * vertical + conc * horizontal
    out = np.zeros(n)
    out[remaining] = combined[remaining]
    mass = out.sum()
    if mass > 0:
        return out / mass
    out[remaining] = 1.0 / len(remaining)
    return out


def sample_without_replacement(
    measure,
    count: int,
    rng: np.random.Generator,
    pool: Iterable[int] | None = None,
) -> list[int]:
    """Sequential draws from ``measure``, renormalising after each removal.

    ``pool`` limits the eligible indices (default: all). Once the remaining
    eligible mass is zero, draws continue uniformly over what is left.
    """
    p = np.asarray(measure, dtype=float).ravel()
    if count < 0:
        raise InvalidInputError("count must be non-negative")
    eligible = list(range(p.size)) if pool is None else sorted({int(i) for i in pool})
    if count > len(eligible):
        raise PoolExhaustedError(f"cannot draw {count} from a pool of {len(eligible)}")
    chosen: list[int] = []
    for _ in range(count):
        w = p[eligible]
        total = w.sum()
        if total > 0:
            k = int(rng.choice(len(eligible), p=w / total))
        else:
            k = int(rng.integers(len(eligible)))
        chosen.append(eligible.pop(k))
    return chosen
