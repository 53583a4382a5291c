"""Minibatch subgradient baselines: Nesterov momentum, AdaDelta and Adam.

All three minimize the unsmoothed l1-l2 hinge objective using the fixed
subgradient selection ``sign(0) = 0`` and ``1[u > 0]`` for the hinge.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset
from .objective import Hyperparams
from .rng import Xoshiro256

OPTIMIZERS = ("nesterov", "adadelta", "adam")


@dataclass(frozen=True)
class SgdConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    rho: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.8
    epsilon: float = 1e-8
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        for name in ("rho", "adam_beta1", "adam_beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must be in [0,1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def subgradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float, mu: float) -> np.ndarray:
    """A subgradient of ``lam/2 |w|^2 + mean(max(0, 1 - y Xw)) + mu |w|_1``."""
    if X.shape[0] == 0:
        raise ValueError("batch is empty")
    u = 1.0 - y * (X @ w)
    hit = (u > 0).astype(np.float64) * y
    return lam * w - (X.T @ hit) / X.shape[0] + mu * np.sign(w)


class Nesterov:
    """Lookahead form: ``v <- rho v - lr grad(w + rho v)``, ``w <- w + v``."""

    def __init__(self, cfg: SgdConfig, m: int):
        self.lr = cfg.learning_rate
        self.rho = cfg.rho
        self.v = np.zeros(m)

    def step(self, w: np.ndarray, grad: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        g = grad(w + self.rho * self.v)
        self.v = self.rho * self.v - self.lr * g
        return w + self.v


class AdaDelta:
    def __init__(self, cfg: SgdConfig, m: int):
        self.rho = cfg.rho
        self.eps = cfg.epsilon
        self.eg2 = np.zeros(m)
        self.edx2 = np.zeros(m)

    def step(self, w, grad):
        g = grad(w)
        rho = self.rho
        self.eg2 = rho * self.eg2 + (1 - rho) * g * g
        dx = -np.sqrt(self.edx2 + self.eps) / np.sqrt(self.eg2 + self.eps) * g
        self.edx2 = rho * self.edx2 + (1 - rho) * dx * dx
        return w + dx


class Adam:
    """Adam with bias-corrected moments."""

    def __init__(self, cfg: SgdConfig, m: int):
        self.lr = cfg.learning_rate
        self.b1 = cfg.adam_beta1
        self.b2 = cfg.adam_beta2
        self.eps = cfg.epsilon
        self.m1 = np.zeros(m)
        self.m2 = np.zeros(m)
        self.t = 0

    def step(self, w, grad):
        g = grad(w)
        self.t += 1
        self.m1 = self.b1 * self.m1 + (1 - self.b1) * g
        self.m2 = self.b2 * self.m2 + (1 - self.b2) * g * g
        mhat = self.m1 / (1 - self.b1**self.t)
        vhat = self.m2 / (1 - self.b2**self.t)
        return w - self.lr * mhat / (np.sqrt(vhat) + self.eps)


_CLASSES = {"nesterov": Nesterov, "adadelta": AdaDelta, "adam": Adam}


def make_optimizer(cfg: SgdConfig, m: int):
    return _CLASSES[cfg.optimizer](cfg, m)


def sgd_train(d: Dataset, h: Hyperparams, cfg: SgdConfig, w0=None) -> np.ndarray:
    """Run ``epochs`` passes of minibatch subgradient steps; return the final weights.

    Each epoch reshuffles the rows with a generator seeded from ``cfg.seed``;
    the last minibatch of an epoch may be short.
    """
    n, m = d.X.shape
    w = np.zeros(m) if w0 is None else np.array(w0, dtype=np.float64)
    opt = make_optimizer(cfg, m)
    rng = Xoshiro256(cfg.seed)
    bs = cfg.batch_size
    X, y = d.X, d.y
    lam, mu = h.lam, h.mu
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, bs):
            rows = perm[start:start + bs]
            Xb, yb = X[rows], y[rows]
            w = opt.step(w, lambda v: subgradient(v, Xb, yb, lam, mu))
        if not np.all(np.isfinite(w)):
            raise FloatingPointError("non-finite weights; learning rate too large?")
    return w
