"""Loss assembly, finite-difference gradients, and (stochastic) gradient descent.

Gradients are central finite differences (one-sided at active box bounds);
the parameter counts here are tiny, so this costs a handful of loss
evaluations per step. Both optimizers verify descent on the full loss:
steepest descent backtracks within each iteration, minibatch SGD accepts or
reverts whole epochs. Accepted epochs may be extended by a doubling line
search along the epoch's net displacement, which is what lets the iterate
traverse the long, shallow valleys these training landscapes produce without
thousands of crawling epochs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .datasets import stream
from .errors import GradientFailureError

DEFAULT_BOUND = 20.0
BOUND_PIN_TOL = 1e-7
MAX_HALVINGS = 30
_SHUFFLE_STREAM = 2 ** 33   # keeps optimizer draws off the dataset streams


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), v.shape).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), v.shape).copy()
        labels = tuple(self.labels)
        if len(labels) != v.size or len(set(labels)) != v.size:
            raise ValueError("labels must be unique and match the value count")
        if np.any(lo > hi):
            raise ValueError("lower bounds exceed upper bounds")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "labels", labels)

    def clipped(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lower, self.upper)

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return replace(self, values=np.asarray(values, dtype=float))


def make_params(values, labels, lower=-DEFAULT_BOUND, upper=DEFAULT_BOUND) -> ParamVector:
    values = np.asarray(values, dtype=float)
    return ParamVector(values, np.full_like(values, lower), np.full_like(values, upper),
                       tuple(labels))


class Termination(Enum):
    GRAD_TOL = "grad_tol"
    MAX_ITERS = "max_iters"
    BOUND_HIT = "bound_hit"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_iters: int = 500
    grad_tol: float = 1e-10
    batch_size: int = 4
    seed: int = 0
    sequential_in_time: bool = True
    fd_step: float = 1e-6
    lr_growth: float = 2.0
    extend_epochs: bool = True
    bound_patience: int = 10

    def __post_init__(self):
        if min(self.learning_rate, self.grad_tol, self.fd_step) <= 0:
            raise ValueError("rates, tolerances, and fd_step must be positive")
        if self.max_iters < 1 or self.batch_size < 1:
            raise ValueError("max_iters and batch_size must be >= 1")


@dataclass
class TrainResult:
    theta_star: ParamVector
    loss_history: list[float]
    termination: Termination
    initial_loss: float

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]

    def to_json(self) -> str:
        return json.dumps({
            "labels": list(self.theta_star.labels),
            "values": self.theta_star.values.tolist(),
            "loss_history": self.loss_history,
            "termination": self.termination.value,
            "initial_loss": self.initial_loss,
        }, sort_keys=True)


def loss_lp(u: np.ndarray, u_ref: np.ndarray, p: int, scale: float) -> float:
    """scale * sum |u - u_ref|^p over all entries (samples, levels, nodes)."""
    u = np.asarray(u, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u.shape != u_ref.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {u_ref.shape}")
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    return float(scale * np.sum(np.abs(u - u_ref) ** p))


def _loss_at(loss: Callable[[np.ndarray], float], values: np.ndarray, label: str) -> float:
    out = float(loss(values))
    if not np.isfinite(out):
        raise GradientFailureError(f"non-finite loss while perturbing '{label}'")
    return out


def grad_fd(loss: Callable[[np.ndarray], float], theta: ParamVector,
            fd_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient; one-sided at active box bounds."""
    x = theta.values
    g = np.empty_like(x)
    for k in range(x.size):
        h = fd_step * max(1.0, abs(x[k]))
        lab = theta.labels[k]
        if x[k] + h > theta.upper[k]:
            xm = x.copy()
            xm[k] -= h
            g[k] = (_loss_at(loss, x, lab) - _loss_at(loss, xm, lab)) / h
        elif x[k] - h < theta.lower[k]:
            xp = x.copy()
            xp[k] += h
            g[k] = (_loss_at(loss, xp, lab) - _loss_at(loss, x, lab)) / h
        else:
            xp = x.copy()
            xm = x.copy()
            xp[k] += h
            xm[k] -= h
            g[k] = (_loss_at(loss, xp, lab) - _loss_at(loss, xm, lab)) / (2.0 * h)
    return g


def _finite_or_inf(loss: Callable[[np.ndarray], float], values: np.ndarray) -> float:
    try:
        out = float(loss(values))
    except (FloatingPointError, ValueError, RuntimeError):
        return np.inf
    return out if np.isfinite(out) else np.inf


class _BoundTracker:
    """Counts consecutive iterations each entry stays pinned at a box bound."""

    def __init__(self, theta: ParamVector, patience: int):
        self.counts = np.zeros(theta.values.size, dtype=int)
        self.patience = patience

    def update(self, theta: ParamVector) -> bool:
        pinned = (np.abs(theta.values - theta.lower) <= BOUND_PIN_TOL) | \
                 (np.abs(theta.values - theta.upper) <= BOUND_PIN_TOL)
        self.counts = np.where(pinned, self.counts + 1, 0)
        return bool(self.counts.max(initial=0) >= self.patience)


def steepest_descent(loss: Callable[[np.ndarray], float], theta0: ParamVector,
                     cfg: TrainConfig) -> TrainResult:
    """Full-batch gradient descent with backtracking line search and box clipping."""
    theta = theta0
    L = float(loss(theta.values))
    if not np.isfinite(L):
        raise ValueError("loss is not finite at the starting point")
    history = [L]
    lr = cfg.learning_rate
    bounds = _BoundTracker(theta0, cfg.bound_patience)
    termination = Termination.MAX_ITERS
    for _ in range(cfg.max_iters):
        g = grad_fd(loss, theta, cfg.fd_step)
        if np.max(np.abs(g)) < cfg.grad_tol:
            termination = Termination.GRAD_TOL
            break
        accepted = False
        trial = lr
        for _ in range(MAX_HALVINGS + 1):
            cand = theta.clipped(theta.values - trial * g)
            Lc = _finite_or_inf(loss, cand)
            if Lc < L:
                accepted = True
                break
            trial /= 2.0
        if not accepted:
            termination = Termination.GRAD_TOL   # no descent direction at resolution
            break
        theta = theta.with_values(cand)
        L = Lc
        history.append(L)
        lr = trial * cfg.lr_growth
        if bounds.update(theta):
            termination = Termination.BOUND_HIT
            break
    return TrainResult(theta, history, termination, history[0])


def minibatch_sgd(batch_loss: Callable[[np.ndarray, np.ndarray], float],
                  theta0: ParamVector, n_train: int, cfg: TrainConfig) -> TrainResult:
    """Epoch-verified minibatch SGD over sample indices 0..n_train-1.

    batch_loss(values, indices) returns the loss restricted to those samples.
    Each epoch shuffles the samples with the run's own seeded stream and steps
    through consecutive batches; if the epoch raised the full loss it is
    reverted and the learning rate halved, otherwise the net displacement is
    extended by a doubling line search and the learning rate grows.
    """
    if cfg.batch_size > n_train:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds training size {n_train}")
    rng = stream(cfg.seed, _SHUFFLE_STREAM)
    all_idx = np.arange(n_train)
    full = lambda v: batch_loss(v, all_idx)
    theta = theta0
    L = float(full(theta.values))
    if not np.isfinite(L):
        raise ValueError("loss is not finite at the starting point")
    history = [L]
    lr = cfg.learning_rate
    bounds = _BoundTracker(theta0, cfg.bound_patience)
    termination = Termination.MAX_ITERS
    for _ in range(cfg.max_iters):
        start = theta
        perm = rng.permutation(n_train)
        for s in range(0, n_train, cfg.batch_size):
            idx = perm[s:s + cfg.batch_size]
            g = grad_fd(lambda v: batch_loss(v, idx), theta, cfg.fd_step)
            theta = theta.with_values(theta.clipped(theta.values - lr * g))
        Ln = _finite_or_inf(full, theta.values)
        if Ln >= L:
            theta = start
            lr /= 2.0
        else:
            if cfg.extend_epochs:
                theta, Ln = _extend(full, start, theta, Ln)
            L = Ln
            lr *= cfg.lr_growth
        history.append(L)
        if bounds.update(theta):
            termination = Termination.BOUND_HIT
            break
        g_full = grad_fd(full, theta, cfg.fd_step)
        if np.max(np.abs(g_full)) < cfg.grad_tol:
            termination = Termination.GRAD_TOL
            break
    return TrainResult(theta, history, termination, history[0])


def _extend(full: Callable[[np.ndarray], float], start: ParamVector,
            theta: ParamVector, L: float) -> tuple[ParamVector, float]:
    """Double the epoch displacement while the full loss keeps dropping."""
    direction = theta.values - start.values
    t = 2.0
    while t <= 2.0 ** 30:
        cand = start.clipped(start.values + t * direction)
        Lc = _finite_or_inf(full, cand)
        if Lc < L:
            theta = start.with_values(cand)
            L = Lc
            t *= 2.0
        else:
            break
    return theta, L


def train_sequential(make_level_loss: Callable,
                     theta0_per_level: Sequence[ParamVector],
                     n_train: int, cfg: TrainConfig) -> list[TrainResult]:
    """Optimize one time level at a time, earlier levels frozen at their optima.

    make_level_loss(k, trained_prefix) returns the batch loss of level k's
    parameters with the already-trained value arrays for levels < k frozen in.
    """
    results: list[TrainResult] = []
    prefix: list[np.ndarray] = []
    for k, theta0 in enumerate(theta0_per_level):
        batch_loss = make_level_loss(k, prefix)
        res = minibatch_sgd(batch_loss, theta0, n_train, cfg)
        results.append(res)
        prefix.append(res.theta_star.values)
    return results
