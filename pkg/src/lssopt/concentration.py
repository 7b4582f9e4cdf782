"""How clustered the active agents are, as a number in [0, 1].

Per coordinate, agents are binned over the box side. The score mixes a
normalised KL divergence from uniform occupancy with the fraction of agents
sharing the incumbent's bin, weighted by that same fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import BoxDomain
from .errors import InvalidInputError


def bin_histogram(agents, interval: tuple[float, float], bins: int) -> np.ndarray:
    """Fraction of agents in each of ``bins`` equal parts of ``interval``.

    The right end point belongs to the last bin.
    """
    x = np.asarray(agents, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInputError("no agents to bin")
    if bins < 1:
        raise InvalidInputError("bins must be positive")
    idx = bin_index(x, interval, bins)
    return np.bincount(idx, minlength=bins) / x.size


def bin_index(x, interval: tuple[float, float], bins: int):
    a, b = interval
    if not b > a:
        raise InvalidInputError(f"empty interval {interval}")
    pos = (np.asarray(x, dtype=float) - a) / (b - a) * bins
    return np.clip(np.floor(pos).astype(int), 0, bins - 1)


def kl_term(mu, bins: int) -> float:
    """KL(mu || uniform) / log(bins), with 0 log 0 = 0; 0 when ``bins == 1``."""
    if bins < 2:
        return 0.0
    p = np.asarray(mu, dtype=float)
    nz = p[p > 0]
    kl = float(np.sum(nz * np.log(nz * bins)))
    return min(1.0, max(0.0, kl / math.log(bins)))


def tv_term(mu, star_bin: int) -> float:
    """``1 - 0.5 * ||mu - delta_star||_1``, which equals ``mu[star_bin]``."""
    p = np.asarray(mu, dtype=float)
    if not 0 <= star_bin < p.size:
        raise IndexError(f"star bin {star_bin} outside 0..{p.size - 1}")
    delta = np.zeros_like(p)
    delta[star_bin] = 1.0
    return min(1.0, max(0.0, 1.0 - 0.5 * float(np.abs(p - delta).sum())))


def concentration_1d(agents, star: float, interval: tuple[float, float], bins: int) -> float:
    x = np.asarray(agents, dtype=float).ravel()
    if x.size == 1:
        return 1.0
    a, b = interval
    if not a <= star <= b:
        raise InvalidInputError(f"incumbent coordinate {star} outside {interval}")
    mu = bin_histogram(x, interval, bins)
    star_bin = int(bin_index(star, interval, bins))
    lam = float(mu[star_bin])
    return (1.0 - lam) * kl_term(mu, bins) + lam * tv_term(mu, star_bin)


def concentration_nd(agents, star, domain: BoxDomain, bins: int | None = None, mode: str = "mean") -> float:
    """Per-coordinate concentration aggregated by ``max`` or ``mean``.

    ``bins`` defaults to the number of agents, never fewer than 2.
    """
    pts = np.asarray(agents, dtype=float).reshape(-1, domain.dim)
    s = np.asarray(star, dtype=float).reshape(domain.dim)
    if bins is None:
        bins = len(pts)
    bins = max(2, int(bins))
    per_dim = [
        concentration_1d(pts[:, j], s[j], (domain.lower[j], domain.upper[j]), bins)
        for j in range(domain.dim)
    ]
    if mode == "max":
        return max(per_dim)
    if mode == "mean":
        return float(np.mean(per_dim))
    raise InvalidInputError(f"unknown aggregation mode {mode!r}")


@dataclass
class ConcentrationState:
    """Patience-adjusted concentration carried across epochs."""

    patience: int = 5
    deflate_factor: float = 0.9
    inflate_factor: float = 0.5
    raw_value: float = 1.0
    effective_value: float = 1.0
    epochs_without_improvement: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise InvalidInputError("patience must be positive")
        for f in (self.deflate_factor, self.inflate_factor):
            if not 0.0 < f <= 1.0:
                raise InvalidInputError("deflate/inflate factors must lie in (0, 1]")


def apply_patience(state: ConcentrationState, raw: float, improved: bool) -> ConcentrationState:
    """Deflate after ``patience`` stagnant epochs, otherwise relax toward ``raw``."""
    state.raw_value = float(raw)
    if improved:
        state.epochs_without_improvement = 0
    else:
        state.epochs_without_improvement += 1
    if state.epochs_without_improvement > state.patience:
        eff = state.deflate_factor * state.effective_value
    else:
        eff = state.effective_value + state.inflate_factor * (raw - state.effective_value)
    state.effective_value = min(1.0, max(0.0, eff))
    return state
