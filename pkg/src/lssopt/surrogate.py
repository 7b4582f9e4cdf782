"""State-value models fitted on the weighted evaluation history.

Two regressors are provided, both cheap to query: a weighted kernel ridge
model (RBF or linear kernel) and a small tanh MLP trained by full-batch
gradient descent. Model choice is made either by an epsilon-greedy bandit
over cross-validated scores or by periodic best-of comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence

import numpy as np

from .errors import ConfigError, InsufficientHistoryError, InvalidInputError
from .history import EvaluationHistory

MIN_HISTORY = 3


class Regressor(Protocol):
    cost_class: str

    def fit(self, inputs, targets, sample_weights) -> "Regressor": ...

    def predict(self, point) -> float: ...


def _prep(inputs, targets, sample_weights):
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(targets, dtype=float).ravel()
    w = np.ones_like(y) if sample_weights is None else np.asarray(sample_weights, dtype=float).ravel()
    if not (len(X) == len(y) == len(w)):
        raise InvalidInputError("inputs, targets and weights differ in length")
    if len(y) == 0:
        raise InvalidInputError("cannot fit on an empty dataset")
    if np.any(w < 0) or np.any(w > 1) or not np.all(np.isfinite(w)):
        raise InvalidInputError("sample weights must lie in [0, 1]")
    return X, y, w


class KernelRidgeModel:
    """Weighted kernel ridge regression with a free intercept.

    Minimises ``sum_i w_i (y_i - f(x_i))^2 + ridge * ||g||^2`` over
    ``f = g + b``, ``g`` in the kernel's RKHS. The optimum satisfies::

        (W K + ridge I) c + W 1 b = W y
        1' W K c + (1' W 1) b     = 1' W y
    """

    cost_class = "linear-scaling"

    def __init__(self, bandwidth: float = 0.05, ridge: float = 1e-3, kernel: str = "rbf"):
        if bandwidth <= 0 or ridge <= 0:
            raise ConfigError("bandwidth and ridge must be positive")
        if kernel not in ("rbf", "linear"):
            raise ConfigError(f"unknown kernel {kernel!r}")
        self.bandwidth = float(bandwidth)
        self.ridge = float(ridge)
        self.kernel = kernel
        self.centers: np.ndarray | None = None
        self.coefficients: np.ndarray | None = None
        self.intercept = 0.0
        self.residual = math.nan

    def _gram(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.kernel == "linear":
            return A @ B.T
        d2 = np.sum(A**2, 1)[:, None] + np.sum(B**2, 1)[None, :] - 2.0 * A @ B.T
        return np.exp(-np.maximum(d2, 0.0) / (2.0 * self.bandwidth**2))

    def system(self, X, y, w) -> tuple[np.ndarray, np.ndarray]:
        n = len(y)
        K = self._gram(X, X)
        A = np.empty((n + 1, n + 1))
        A[:n, :n] = w[:, None] * K + self.ridge * np.eye(n)
        A[:n, n] = w
        A[n, :n] = w @ K
        A[n, n] = w.sum() if w.sum() > 0 else 1.0
        rhs = np.append(w * y, w @ y)
        return A, rhs

    def fit(self, inputs, targets, sample_weights=None) -> "KernelRidgeModel":
        X, y, w = _prep(inputs, targets, sample_weights)
        A, rhs = self.system(X, y, w)
        sol = np.linalg.solve(A, rhs)
        self.residual = float(np.max(np.abs(A @ sol - rhs)))
        self.centers = X
        self.coefficients = sol[:-1]
        self.intercept = float(sol[-1])
        return self

    def predict(self, point) -> float:
        return float(self.predict_many(np.asarray(point, dtype=float).reshape(1, -1))[0])

    def predict_many(self, points) -> np.ndarray:
        if self.centers is None:
            raise InvalidInputError("model is not fitted")
        P = np.asarray(points, dtype=float).reshape(-1, self.centers.shape[1])
        return self._gram(P, self.centers) @ self.coefficients + self.intercept


class MlpModel:
    """Tanh network trained on weighted MSE by plain full-batch gradient descent.

    Inputs are used as given; targets are standardised internally. The
    parameters with the lowest training loss seen are kept.
    """

    cost_class = "linear-scaling"

    def __init__(
        self,
        hidden: Sequence[int] = (32, 32),
        learning_rate: float = 0.05,
        dropout_rate: float = 0.0,
        max_epochs: int = 500,
        tol: float = 1e-6,
        seed: int = 0,
    ):
        if learning_rate <= 0 or max_epochs < 1:
            raise ConfigError("learning_rate and max_epochs must be positive")
        if not 0.0 <= dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        self.hidden = tuple(int(h) for h in hidden)
        self.learning_rate = float(learning_rate)
        self.dropout_rate = float(dropout_rate)
        self.max_epochs = int(max_epochs)
        self.tol = float(tol)
        self.seed = int(seed)
        self.params: list[tuple[np.ndarray, np.ndarray]] = []
        self.loss_history: list[float] = []
        self._y_mean = 0.0
        self._y_scale = 1.0

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        dim = self.params[0][0].shape[0] if self.params else None
        return (dim, *self.hidden, 1)

    def _init(self, dim: int, rng: np.random.Generator):
        sizes = (dim, *self.hidden, 1)
        self.params = [
            (rng.normal(0.0, 1.0 / math.sqrt(a), size=(a, b)), np.zeros(b))
            for a, b in zip(sizes[:-1], sizes[1:])
        ]

    def _forward(self, X, params, rng=None):
        acts = [X]
        masks = []
        h = X
        for li, (Wm, b) in enumerate(params):
            z = h @ Wm + b
            if li == len(params) - 1:
                h = z
            else:
                h = np.tanh(z)
                if rng is not None and self.dropout_rate > 0:
                    m = (rng.random(h.shape) >= self.dropout_rate) / (1.0 - self.dropout_rate)
                    h = h * m
                    masks.append(m)
                else:
                    masks.append(None)
            acts.append(h)
        return acts, masks

    def fit(self, inputs, targets, sample_weights=None) -> "MlpModel":
        X, y, w = _prep(inputs, targets, sample_weights)
        rng = np.random.default_rng(self.seed)
        self._init(X.shape[1], rng)
        self._y_mean = float(np.average(y, weights=w) if w.sum() > 0 else y.mean())
        spread = float(np.std(y))
        self._y_scale = spread if spread > 0 else 1.0
        t = ((y - self._y_mean) / self._y_scale)[:, None]
        wn = (w / w.sum() if w.sum() > 0 else np.full_like(w, 1.0 / len(w)))[:, None]

        best = [(Wm.copy(), b.copy()) for Wm, b in self.params]
        best_loss = math.inf
        prev = math.inf
        self.loss_history = []
        for _ in range(self.max_epochs):
            acts, masks = self._forward(X, self.params, rng)
            err = acts[-1] - t
            loss = float(np.sum(wn * err**2))
            if loss < best_loss:
                best_loss = loss
                best = [(Wm.copy(), b.copy()) for Wm, b in self.params]
            self.loss_history.append(best_loss)
            if abs(prev - loss) < self.tol:
                break
            prev = loss
            grad = 2.0 * wn * err
            new_params = list(self.params)
            for li in range(len(self.params) - 1, -1, -1):
                Wm, b = self.params[li]
                gW = acts[li].T @ grad
                gb = grad.sum(0)
                if li > 0:
                    grad = grad @ Wm.T
                    if masks[li - 1] is not None:
                        grad = grad * masks[li - 1]
                    # tanh' from the pre-dropout activation
                    pre = np.tanh(acts[li - 1] @ self.params[li - 1][0] + self.params[li - 1][1])
                    grad = grad * (1.0 - pre**2)
                new_params[li] = (Wm - self.learning_rate * gW, b - self.learning_rate * gb)
            self.params = new_params
        # final check so the kept parameters really are the best seen
        acts, _ = self._forward(X, self.params)
        final = float(np.sum(wn * (acts[-1] - t) ** 2))
        if final < best_loss:
            best = self.params
        self.params = best
        return self

    def predict(self, point) -> float:
        return float(self.predict_many(np.asarray(point, dtype=float).reshape(1, -1))[0])

    def predict_many(self, points) -> np.ndarray:
        if not self.params:
            raise InvalidInputError("model is not fitted")
        P = np.asarray(points, dtype=float).reshape(-1, self.params[0][0].shape[0])
        acts, _ = self._forward(P, self.params)
        return acts[-1][:, 0] * self._y_scale + self._y_mean


def make_model(config: Mapping[str, Any], seed: int = 0) -> Regressor:
    """Build a regressor from ``{"kind": "krr" | "mlp", ...}``."""
    cfg = dict(config)
    kind = cfg.pop("kind", "krr")
    cfg.pop("name", None)
    try:
        if kind == "krr":
            return KernelRidgeModel(**cfg)
        if kind == "mlp":
            cfg.setdefault("seed", seed)
            if "layer_sizes" in cfg:
                cfg["hidden"] = tuple(cfg.pop("layer_sizes"))[1:-1]
            return MlpModel(**cfg)
    except TypeError as exc:
        raise ConfigError(f"bad model options {config}: {exc}") from None
    raise ConfigError(f"unknown model kind {kind!r}")


def build_state_value(history: EvaluationHistory, model: Regressor) -> Regressor:
    if len(history) < MIN_HISTORY:
        raise InsufficientHistoryError(f"need at least {MIN_HISTORY} records, have {len(history)}")
    return model.fit(history.states, history.costs, history.weights)


def _fold_error(model: Regressor, X, y, w) -> float:
    pred = np.array([model.predict(x) for x in X])
    sq = (y - pred) ** 2
    if w.sum() > 0:
        return float(np.sum(w * sq) / w.sum())
    return float(sq.mean())


def cross_validate(
    model_config: Mapping[str, Any],
    history: EvaluationHistory,
    folds: int = 3,
    rng: np.random.Generator | None = None,
    seed: int = 0,
) -> float:
    """Mean held-out weighted squared error over ``folds`` random parts."""
    if folds < 2:
        raise InvalidInputError("cross-validation needs at least 2 folds")
    n = len(history)
    if n < folds:
        raise InsufficientHistoryError(f"{n} records cannot fill {folds} folds")
    rng = rng if rng is not None else np.random.default_rng(seed)
    X, y, w = history.states, history.costs, history.weights
    parts = np.array_split(rng.permutation(n), folds)
    errors = []
    for held in parts:
        train = np.setdiff1d(np.arange(n), held)
        model = make_model(model_config, seed=seed)
        model.fit(X[train], y[train], w[train])
        errors.append(_fold_error(model, X[held], y[held], w[held]))
    return float(np.mean(errors))


@dataclass
class BanditSelector:
    arms: list[dict]
    epsilon: float = 0.1
    td_rate: float = 0.5
    scores: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.arms:
            raise ConfigError("bandit needs at least one arm")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1]")
        if not 0.0 < self.td_rate <= 1.0:
            raise ConfigError("td_rate must lie in (0, 1]")
        if not self.scores:
            self.scores = [0.0] * len(self.arms)
        if len(self.scores) != len(self.arms):
            raise ConfigError("one score per arm required")


def select_model(selector: BanditSelector, rng: np.random.Generator) -> int:
    """Epsilon-greedy arm index; greedy ties go to the lowest index."""
    if not selector.arms:
        raise ConfigError("bandit needs at least one arm")
    if len(selector.arms) > 1 and rng.random() < selector.epsilon:
        return int(rng.integers(len(selector.arms)))
    return int(np.argmax(selector.scores))


def update_selector(selector: BanditSelector, arm: int, reward: float) -> BanditSelector:
    if not 0 <= arm < len(selector.arms):
        raise IndexError(f"arm {arm} out of range")
    selector.scores[arm] += selector.td_rate * (reward - selector.scores[arm])
    return selector


def normalized_rewards(cv_errors: Sequence[float]) -> np.ndarray:
    """Map CV errors to rewards in [0, 1]: best arm 1, worst arm 0."""
    e = -np.asarray(cv_errors, dtype=float)
    span = e.max() - e.min()
    if not np.isfinite(span) or span <= 0:
        return np.ones_like(e)
    return (e - e.min()) / span


DEFAULT_ARMS = (
    {"name": "krr-narrow", "kind": "krr", "bandwidth": 0.03, "ridge": 1e-3},
    {"name": "krr-mid", "kind": "krr", "bandwidth": 0.08, "ridge": 1e-3},
    {"name": "krr-wide", "kind": "krr", "bandwidth": 0.2, "ridge": 1e-3},
    {"name": "mlp", "kind": "mlp", "hidden": (32, 32), "learning_rate": 0.05, "max_epochs": 500},
)


class ModelSelection:
    """Chooses which arm fits the state-value model, refreshed every ``every`` epochs.

    ``strategy="bandit"`` keeps TD-smoothed scores from normalised CV rewards
    and picks epsilon-greedily; ``strategy="periodic"`` simply takes the arm
    with the lowest CV error.
    """

    def __init__(
        self,
        arms: Sequence[Mapping[str, Any]] = DEFAULT_ARMS,
        strategy: str = "bandit",
        every: int = 10,
        epsilon: float = 0.1,
        td_rate: float = 0.5,
        folds: int = 3,
    ):
        if strategy not in ("bandit", "periodic"):
            raise ConfigError(f"unknown selection strategy {strategy!r}")
        if every < 1:
            raise ConfigError("reselection period must be positive")
        self.arms = [dict(a) for a in arms]
        self.strategy = strategy
        self.every = int(every)
        self.folds = int(folds)
        self.selector = BanditSelector(self.arms, epsilon=epsilon, td_rate=td_rate)
        self.current = 0
        self.last_errors: list[float] | None = None

    def due(self, epoch: int) -> bool:
        return len(self.arms) > 1 and (epoch - 1) % self.every == 0

    def reselect(self, history: EvaluationHistory, rng: np.random.Generator, seed: int = 0) -> int:
        if len(self.arms) == 1 or len(history) < self.folds:
            self.current = 0
            return self.current
        cv_seed = int(rng.integers(2**31))
        errors = [
            cross_validate(arm, history, self.folds, rng=np.random.default_rng(cv_seed), seed=seed)
            for arm in self.arms
        ]
        self.last_errors = errors
        if self.strategy == "periodic":
            self.current = int(np.argmin(errors))
        else:
            for j, r in enumerate(normalized_rewards(errors)):
                update_selector(self.selector, j, float(r))
            self.current = select_model(self.selector, rng)
        return self.current

    def fit(self, history: EvaluationHistory, seed: int = 0) -> Regressor:
        return build_state_value(history, make_model(self.arms[self.current], seed=seed))
