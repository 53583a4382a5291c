"""Smoothed hinge loss and the smoothed l1-l2 SVM objective.

The smoother is ``psi(t) = (t + sqrt(1 + t^2)) / 2`` and the per-row loss is
``alpha * psi(u / alpha)`` with margin residual ``u = 1 - y * x.w``. All
formulas are written with ``hypot`` and cancellation-free branches so they
stay finite and accurate for arbitrarily large ``|t|``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset


@dataclass(frozen=True)
class Hyperparams:
    lam: float = 1e-3
    mu: float = 0.0
    alpha0: float = 1.0
    alpha_min: float = 1e-6
    beta: float = 0.1
    eta: float = 0.1
    c1: float = 1e-4
    s_min: float = 2.0**-30
    # after Armijo backtracking, minimize f_alpha along the ray (no extra data passes)
    ray_refine: bool = True

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name != "ray_refine" and not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
        checks = [
            (self.lam >= 0, "lambda must be >= 0"),
            (self.mu >= 0, "mu must be >= 0"),
            (self.alpha0 > 0, "alpha0 must be > 0"),
            (self.alpha_min > 0, "alpha_min must be > 0"),
            (self.alpha0 >= self.alpha_min, "alpha0 must be >= alpha_min"),
            (0 < self.beta < 1, "beta must be in (0,1)"),
            (0 < self.eta < 1, "eta must be in (0,1)"),
            (0 < self.c1 < 1, "c1 must be in (0,1)"),
            (self.s_min > 0, "s_min must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def to_dict(self) -> dict:
        return asdict(self)


def _psi_parts(t: np.ndarray):
    t = np.asarray(t, dtype=np.float64)
    h = np.hypot(1.0, t)
    neg = t < 0
    # for t < 0, t + h = 1 / (h - t) avoids cancellation
    with np.errstate(divide="ignore", over="ignore"):
        tph = np.where(neg, 1.0 / (h - t), t + h)
    return t, h, tph


def psi(u):
    """Return ``(psi(u), psi'(u), psi''(u))``; works on scalars or arrays."""
    t, h, tph = _psi_parts(u)
    value = 0.5 * tph
    first = 0.5 * tph / h  # = (1 + t/h)/2
    with np.errstate(over="ignore", under="ignore"):
        second = 0.5 / (h * h * h)
    if np.ndim(u) == 0:
        return float(value), float(first), float(second)
    return value, first, second


def psi_prime(t):
    _, h, tph = _psi_parts(t)
    return 0.5 * tph / h


def psi_second(t):
    _, h, _ = _psi_parts(t)
    with np.errstate(over="ignore", under="ignore"):
        return 0.5 / (h * h * h)


def smoothed_hinge(u, alpha):
    """``(u + sqrt(alpha^2 + u^2)) / 2``, i.e. ``alpha * psi(u / alpha)``; broadcasts."""
    alpha = np.asarray(alpha, dtype=np.float64)
    if not np.all(alpha > 0):
        raise ValueError("alpha must be positive")
    u = np.asarray(u, dtype=np.float64)
    h = np.hypot(alpha, u)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(u < 0, 0.5 * alpha * alpha / (h - u), 0.5 * (u + h))
    return float(out) if out.ndim == 0 else out


def margins(w: np.ndarray, d: Dataset) -> np.ndarray:
    """Residuals ``u_i = 1 - y_i * x_i.w``."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (d.n_features,):
        raise ValueError(f"w has shape {w.shape}, expected ({d.n_features},)")
    return 1.0 - d.y * (d.X @ w)


def hinge_objective(w: np.ndarray, d: Dataset, lam: float, mu: float) -> float:
    """Unsmoothed l1-l2 SVM objective."""
    u = margins(w, d)
    return float(0.5 * lam * (w @ w) + np.maximum(u, 0.0).mean() + mu * np.abs(w).sum())


def objective(w: np.ndarray, d: Dataset, h: Hyperparams, alpha: float) -> tuple[float, float]:
    """Return ``(f_alpha, fhat_alpha)``: smoothed objective with and without the l1 term."""
    u = margins(w, d)
    fhat = 0.5 * h.lam * float(w @ w) + float(np.mean(smoothed_hinge(u, alpha)))
    f = fhat + h.mu * float(np.abs(w).sum())
    return f, fhat


def gradient_smooth(w: np.ndarray, d: Dataset, h: Hyperparams, alpha: float) -> np.ndarray:
    """Gradient of the smooth part: ``lam*w - mean_i psi'(u_i/alpha) y_i x_i``."""
    u = margins(w, d)
    coef = psi_prime(u / alpha) * d.y
    return h.lam * w - (d.X.T @ coef) / d.n_samples


def hessian_active(w, d: Dataset, h: Hyperparams, alpha: float, active) -> np.ndarray:
    """Hessian of the smooth part restricted to rows/columns ``active``.

    Only the ``|active| x |active|`` block is ever formed.
    """
    active = np.asarray(active, dtype=np.int64).reshape(-1)
    m = d.n_features
    if active.size and (active.min() < 0 or active.max() >= m):
        raise IndexError("active index out of range")
    if np.unique(active).size != active.size:
        raise ValueError("active indices must be distinct")
    u = margins(w, d)
    weights = psi_second(u / alpha) / alpha
    return _weighted_gram(d.X[:, active], weights, d.n_samples) + h.lam * np.eye(active.size)


def _weighted_gram(XA: np.ndarray, weights: np.ndarray, n: int) -> np.ndarray:
    B = XA * np.sqrt(weights / n)[:, None]
    H = B.T @ B
    return 0.5 * (H + H.T)
