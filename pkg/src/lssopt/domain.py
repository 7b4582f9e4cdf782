"""Box domains and the rugged "tunneling" test landscapes.

The toy family is built from a 1-D function ``F`` that oscillates between an
upper envelope ``u`` and a lower envelope ``l``; its N-dimensional version is
the product of ``F`` over coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError

VALLEY_X = (0.1, 0.3, 0.5, 0.7, 0.9)
PEAK_X = (0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned closed box ``[lower, upper]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) == 0 or len(lower) != len(upper):
            raise InvalidInputError("lower and upper must be non-empty and of equal length")
        if not all(math.isfinite(a) and math.isfinite(b) and a < b for a, b in zip(lower, upper)):
            raise InvalidInputError(f"invalid box bounds {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, dim: int) -> "BoxDomain":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


def reflect_into_box(point, domain: BoxDomain) -> np.ndarray:
    """Fold ``point`` back into ``domain`` by mirror reflections at the faces.

    Each coordinate is folded independently with period ``2 * (upper - lower)``,
    which is what repeated reflection converges to. Points already inside the
    box are returned unchanged.
    """
    p = np.array(point, dtype=float, ndmin=1)
    if p.shape != (domain.dim,):
        raise InvalidInputError(f"point has shape {p.shape}, expected ({domain.dim},)")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError(f"non-finite coordinate in {p}")
    lo = np.asarray(domain.lower)
    hi = np.asarray(domain.upper)
    inside = (p >= lo) & (p <= hi)
    if inside.all():
        return p
    width = hi - lo
    t = np.mod(p - lo, 2.0 * width)
    folded = lo + np.where(t > width, 2.0 * width - t, t)
    out = np.where(inside, p, folded)
    # guard against round-off nudging a folded value a hair outside
    return np.clip(out, lo, hi)


def _upper_envelope(x: float) -> float:
    return (25.0 + 30.0 * (x - 0.1) ** 2) / 25.0


def _lower_envelope(x: float) -> float:
    return (5.0 + 25.0 * (x - 0.9) ** 2) / 25.0


def toy_f(x: float) -> float:
    """1-D tunneling landscape; global minimum 0.2 at x = 0.9."""
    lam = math.sin(10.0 * math.pi * x + math.pi / 2.0)
    return 0.5 * (1.0 + lam) * _upper_envelope(x) + 0.5 * (1.0 - lam) * _lower_envelope(x)


def toy_g(x) -> float:
    """Product of :func:`toy_f` over the coordinates of ``x``."""
    coords = np.atleast_1d(np.asarray(x, dtype=float))
    if coords.size == 0:
        raise InvalidInputError("toy_g needs at least one coordinate")
    out = 1.0
    for c in coords:
        out *= toy_f(float(c))
    return out


def toy_g_normalized(x) -> float:
    """N-th root of :func:`toy_g`, comparable across dimensions."""
    coords = np.atleast_1d(np.asarray(x, dtype=float))
    return normalize_cost(toy_g(coords), coords.size)


def normalize_cost(value: float, dim: int) -> float:
    return float(value) ** (1.0 / dim)


def landscape_extrema() -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Valley values ``v_k`` and peak values ``p_k`` of :func:`toy_f`, k = 1..5."""
    valleys = tuple(toy_f(x) for x in VALLEY_X)
    peaks = tuple(toy_f(x) for x in PEAK_X)
    return valleys, peaks


@dataclass(frozen=True)
class Objective:
    """Deterministic cost function with a fixed input dimension."""

    name: str
    dim: int
    func: Callable[[np.ndarray], float]
    domain: BoxDomain

    def __call__(self, x) -> float:
        return float(self.func(np.asarray(x, dtype=float)))


def get_objective(identifier: str, dim: int | None = None) -> Objective:
    """Resolve ``"toy1d"`` or ``"toyNd:<dim>"`` (``dim`` may override)."""
    ident = identifier.strip().lower()
    if ident == "toy1d":
        n = 1 if dim is None else int(dim)
        if n != 1:
            raise InvalidInputError("toy1d is one-dimensional; use toyNd:<dim>")
    elif ident.startswith("toynd"):
        _, _, tail = ident.partition(":")
        if tail:
            n = int(tail)
            if dim is not None and int(dim) != n:
                raise InvalidInputError(f"{identifier} conflicts with dim={dim}")
        elif dim is not None:
            n = int(dim)
        else:
            raise InvalidInputError("toyNd needs a dimension, e.g. toyNd:4")
    else:
        raise InvalidInputError(f"unknown objective {identifier!r}")
    if n < 1:
        raise InvalidInputError("dimension must be positive")
    name = "toy1d" if n == 1 and ident == "toy1d" else f"toyNd:{n}"
    return Objective(name=name, dim=n, func=toy_g, domain=BoxDomain.unit(n))


def as_point(values: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.array(values, dtype=float, ndmin=1)
