"""Counters separating expensive objective calls from cheap surrogate calls."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

EXPENSIVE = "expensive"
CHEAP = "cheap"
AUXILIARY = "auxiliary"


@dataclass
class BudgetLedger:
    """Exact call accounting.

    ``cheap_calls`` counts surrogate evaluations made by annealing steps.
    ``auxiliary_calls`` counts the one surrogate lookup per branching parent,
    kept apart so the per-epoch cheap total is exactly (K_low + K_high) * a_i.
    """

    expensive_calls: int = 0
    cheap_calls: int = 0
    auxiliary_calls: int = 0
    per_epoch: list[tuple[int, int, int]] = field(default_factory=list)
    _mark: tuple[int, int] = (0, 0)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def charge(self, kind: str, n: int = 1) -> None:
        if n < 0:
            raise ValueError("charge count must be non-negative")
        with self._lock:
            if kind == EXPENSIVE:
                self.expensive_calls += n
            elif kind == CHEAP:
                self.cheap_calls += n
            elif kind == AUXILIARY:
                self.auxiliary_calls += n
            else:
                raise ValueError(f"unknown cost class {kind!r}")

    def close_epoch(self, epoch: int) -> tuple[int, int, int]:
        """Record the calls made since the previous close as one row."""
        with self._lock:
            row = (epoch, self.expensive_calls - self._mark[0], self.cheap_calls - self._mark[1])
            self.per_epoch.append(row)
            self._mark = (self.expensive_calls, self.cheap_calls)
        return row
