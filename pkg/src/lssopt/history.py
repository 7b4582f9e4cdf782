"""Evaluation history: every (state, true cost, weight) seen so far."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .budget import EXPENSIVE, BudgetLedger
from .errors import DuplicateStateError, EmptyHistoryError, InvalidInputError, UnknownStateError


def state_key(state) -> bytes:
    """Exact identity of a state: the raw float64 bytes of its coordinates."""
    return np.ascontiguousarray(state, dtype=np.float64).tobytes()


@dataclass
class EvaluationRecord:
    state: np.ndarray
    cost: float
    weight: float
    epoch_added: int


class EvaluationHistory:
    """Append-only store of true evaluations with an incumbent.

    Ties on cost keep the earliest record as incumbent.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise InvalidInputError("dim must be positive")
        self.dim = dim
        self.records: list[EvaluationRecord] = []
        self._index: dict[bytes, int] = {}
        self.incumbent_index: int | None = None

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, state) -> bool:
        return state_key(state) in self._index

    def index_of(self, state) -> int:
        try:
            return self._index[state_key(state)]
        except KeyError:
            raise UnknownStateError(f"state {np.asarray(state).tolist()} not in history") from None

    def cost_of(self, state) -> float:
        return self.records[self.index_of(state)].cost

    def record(self, state, cost: float, epoch: int, ledger: BudgetLedger | None = None) -> EvaluationRecord:
        """Append a freshly evaluated state with weight 1.

        When ``ledger`` is given, one expensive call is charged to it.
        """
        s = np.array(state, dtype=float, ndmin=1)
        if s.shape != (self.dim,):
            raise InvalidInputError(f"state has shape {s.shape}, expected ({self.dim},)")
        key = state_key(s)
        if key in self._index:
            raise DuplicateStateError(f"state {s.tolist()} already recorded")
        cost = float(cost)
        if math.isnan(cost):
            raise InvalidInputError("cost is NaN")
        rec = EvaluationRecord(state=s, cost=cost, weight=1.0, epoch_added=int(epoch))
        self._index[key] = len(self.records)
        self.records.append(rec)
        if self.incumbent_index is None or cost < self.records[self.incumbent_index].cost:
            self.incumbent_index = len(self.records) - 1
        if ledger is not None:
            ledger.charge(EXPENSIVE)
        return rec

    @property
    def incumbent(self) -> EvaluationRecord:
        if self.incumbent_index is None:
            raise EmptyHistoryError("history is empty")
        return self.records[self.incumbent_index]

    def m_functional(self) -> float:
        """Best true cost observed so far."""
        return self.incumbent.cost

    def amplitude(self) -> float:
        """Observed cost range: max recorded cost minus the best one."""
        if not self.records:
            raise EmptyHistoryError("history is empty")
        return float(self.costs.max() - self.m_functional())

    def rank(self, state, beta: float) -> float:
        """``exp(-beta * (cost - M))``; exactly 1 at the incumbent."""
        cost = self.cost_of(state)
        return math.exp(-beta * (cost - self.m_functional()))

    def ranks(self, beta: float) -> np.ndarray:
        return np.exp(-beta * (self.costs - self.m_functional()))

    def update_weights(self, alpha: float, beta: float) -> None:
        """Temporal-difference move of every weight toward its rank."""
        if not 0.0 <= alpha <= 1.0:
            raise InvalidInputError("alpha must lie in [0, 1]")
        if beta <= 0:
            raise InvalidInputError("beta must be positive")
        if not self.records:
            return
        m = self.m_functional()
        for rec in self.records:
            r = math.exp(-beta * (rec.cost - m))
            w = rec.weight + alpha * (r - rec.weight)
            rec.weight = min(1.0, max(0.0, w))

    @property
    def states(self) -> np.ndarray:
        return np.array([r.state for r in self.records]).reshape(len(self.records), self.dim)

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([r.weight for r in self.records], dtype=float)

    def to_csv(self, path: str | Path) -> None:
        """Flat rows ``epoch, x0..x{d-1}, cost, weight`` with a header."""
        header = ["epoch", *(f"x{j}" for j in range(self.dim)), "cost", "weight"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in self.records:
                w.writerow([r.epoch_added, *(repr(float(v)) for v in r.state), repr(r.cost), repr(r.weight)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "EvaluationHistory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise InvalidInputError(f"{path}: empty history file")
        header = rows[0]
        dim = len(header) - 3
        if dim < 1 or header[0] != "epoch" or header[-2:] != ["cost", "weight"]:
            raise InvalidInputError(f"{path}: unexpected header {header}")
        hist = cls(dim)
        for row in rows[1:]:
            rec = hist.record([float(v) for v in row[1 : 1 + dim]], float(row[-2]), int(row[0]))
            rec.weight = float(row[-1])
        return hist
