"""Smoothing active-set Newton solver for the l1-l2 soft-margin SVM.

The outer loop drives the smoothing parameter ``alpha`` down geometrically.
For each ``alpha`` it takes guarded Newton steps on the active coordinates,
line-searching the quadratic model plus the exact l1 term, then checks
sufficient decrease on the true smoothed objective (and, if backtracking
was needed, refines the step along the ray). When the predicted
decrease ``|d.g|`` falls below ``eta * alpha`` the active set is grown once
(by a gradient step on the newly freed coordinates) or ``alpha`` is reduced.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, optimize

from .dataset import Dataset
from .linesearch import AT_ZERO, BREAKPOINT, UNBOUNDED, linesearch_l1
from .objective import Hyperparams, psi_prime, psi_second, smoothed_hinge

log = logging.getLogger(__name__)

ZERO_SNAP_RTOL = 1e-14
ALPHA_RTOL = 1e-9
CURV_ROW_RTOL = 1e-8  # on sqrt(weight), i.e. 1e-16 on the weight itself
# |g_j - lam w_j| <= mean_i |x_ij| since 0 < psi' < 1; gradient entries within
# this fraction of that bound are summation noise and never trigger activation
ACTIVATE_RTOL = 1e-11


class SolverError(ArithmeticError):
    pass


@dataclass
class SolverStats:
    steps_per_alpha: list[int] = field(default_factory=list)
    data_passes: int = 0
    fevals: int = 0
    gevals: int = 0
    hevals: int = 0
    linesearch_failures: int = 0
    ray_evals: int = 0  # f evaluations along a ray from cached X w, X d
    fallbacks: int = 0


@dataclass
class SolverState:
    w: np.ndarray
    inactive: np.ndarray  # boolean mask, True where w_j is held at exactly 0
    newly_activated: np.ndarray  # boolean mask J
    alpha: float
    adjust: bool = True
    stats: SolverStats = field(default_factory=SolverStats)
    # per-alpha bookkeeping
    steps_this_alpha: int = 0
    reduced: bool = False

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(~self.inactive)

    def reduce_alpha(self, beta: float) -> None:
        self.stats.steps_per_alpha.append(self.steps_this_alpha)
        self.steps_this_alpha = 0
        self.alpha *= beta
        self.adjust = True
        self.inactive = self.w == 0.0
        self.newly_activated = np.zeros_like(self.inactive)
        self.reduced = True


@dataclass
class SolveResult:
    w: np.ndarray
    alpha_final: float
    history: list[tuple[float, int, float]]
    converged: bool
    stats: SolverStats

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.w))


class _Problem:
    """Cached data access; counts passes over the data."""

    def __init__(self, d: Dataset, h: Hyperparams, stats: SolverStats):
        self.X = d.X
        self.y = d.y
        self.n = d.n_samples
        self.h = h
        self.stats = stats
        self.grad_noise = ACTIVATE_RTOL * np.abs(d.X).mean(axis=0)

    def xw(self, w: np.ndarray) -> np.ndarray:
        self.stats.data_passes += 1
        nz = np.flatnonzero(w)
        if nz.size * 4 < w.size:
            return self.X[:, nz] @ w[nz]
        return self.X @ w

    def f_at(self, w: np.ndarray, z: np.ndarray, alpha: float) -> float:
        """Smoothed objective given ``z = X w``."""
        self.stats.fevals += 1
        u = 1.0 - self.y * z
        val = 0.5 * self.h.lam * float(w @ w) + float(np.mean(smoothed_hinge(u, alpha)))
        return val + self.h.mu * float(np.abs(w).sum())

    def grad(self, w: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Smooth gradient given scaled residuals ``t = u / alpha``."""
        self.stats.gevals += 1
        self.stats.data_passes += 1
        return self.h.lam * w - (self.X.T @ (psi_prime(t) * self.y)) / self.n


def _newton_direction(prob: _Problem, act: np.ndarray, g_act: np.ndarray, curv_sqrt: np.ndarray,
                      stats: SolverStats) -> np.ndarray:
    """Solve ``H_AA d = -g_A`` with ``H_AA = lam I + B^T B``, ``B = diag(sqrt(curv/N)) X_A``."""
    lam = prob.h.lam
    stats.hevals += 1
    stats.data_passes += 1
    # rows whose curvature weight is below double precision relative to the
    # largest one cannot change H_AA; skip them
    rows = np.flatnonzero(curv_sqrt > CURV_ROW_RTOL * curv_sqrt.max())
    if rows.size == prob.n:
        B = prob.X[:, act] * curv_sqrt[:, None]
    else:
        B = prob.X[np.ix_(rows, act)] * curv_sqrt[rows, None]
    k = act.size
    if lam > 0 and k > B.shape[0]:
        # Woodbury: (lam I + B^T B)^-1 = (I - B^T (lam I + B B^T)^-1 B) / lam
        K = B @ B.T
        K[np.diag_indices_from(K)] += lam
        try:
            c = linalg.cho_factor(K, check_finite=False)
            return -(g_act - B.T @ linalg.cho_solve(c, B @ g_act, check_finite=False)) / lam
        except linalg.LinAlgError:
            pass
    H = B.T @ B
    H[np.diag_indices_from(H)] += lam
    try:
        c = linalg.cho_factor(H, check_finite=False)
        return -linalg.cho_solve(c, g_act, check_finite=False)
    except linalg.LinAlgError:
        pass
    stats.fallbacks += 1
    ridge = 1e-10 * (1.0 + np.trace(H) / max(k, 1))
    H[np.diag_indices_from(H)] += ridge
    try:
        c = linalg.cho_factor(H, check_finite=False)
        d = -linalg.cho_solve(c, g_act, check_finite=False)
        if np.all(np.isfinite(d)):
            return d
    except linalg.LinAlgError:
        pass
    return -g_act


def adjust_or_reduce(state: SolverState, g_hat: np.ndarray, g: np.ndarray, d: np.ndarray,
                     h: Hyperparams, noise=0.0) -> bool:
    """Grow the active set once per alpha, else reduce alpha.

    On activation ``g`` and ``d`` are edited in place (gradient step on the new
    coordinates) and True is returned. Otherwise alpha is reduced and False is
    returned, meaning the current iteration ends without a line search.
    """
    J = state.inactive & (np.abs(g_hat) > h.mu + noise)
    if J.any() and state.adjust:
        state.inactive &= ~J
        state.newly_activated = J
        g[J] = g_hat[J] - h.mu * np.sign(g_hat[J])
        d[J] = -g[J]
        state.adjust = False
        return True
    state.reduce_alpha(h.beta)
    return False


def newton_step(state: SolverState, d: Dataset, h: Hyperparams, trace=None,
                _prob: Optional[_Problem] = None) -> None:
    """One guarded Newton iteration; updates ``state`` in place."""
    prob = _prob if _prob is not None else _Problem(d, h, state.stats)
    mu = h.mu
    alpha = state.alpha
    w = state.w
    z = prob.xw(w)
    t = (1.0 - prob.y * z) / alpha
    g_hat = prob.grad(w, t)
    g = g_hat + mu * np.sign(w)
    J = state.newly_activated
    if J.any():
        g[J] -= mu * np.sign(g_hat[J])

    act = state.active
    curv = psi_second(t) / alpha
    step = np.zeros_like(w)
    if act.size:
        step[act] = _newton_direction(prob, act, g[act], np.sqrt(curv / prob.n), state.stats)
    dg = float(step @ g)

    if not math.isfinite(dg):
        raise SolverError("non-finite Newton direction; is the data standardized?")
    if abs(dg) < h.eta * alpha:
        if not adjust_or_reduce(state, g_hat, g, step, h, prob.grad_noise):
            return
        dg = float(step @ g)

    state.steps_this_alpha += 1
    xd = prob.X @ step
    prob.stats.data_passes += 1
    b = float(step @ g_hat)
    a = 0.5 * (h.lam * float(step @ step) + float(curv @ (xd * xd)) / prob.n)
    d_l1 = float(np.abs(step).sum())
    s_max = (abs(b) + mu * d_l1) / (2.0 * a) if a > 0 else math.inf
    f0 = prob.f_at(w, z, alpha)

    failed = True
    s = 0.0
    w_new = w
    if np.any(step) and dg < 0:
        ls = linesearch_l1(w, step, b, a, mu, s_max)
        if ls.status not in (UNBOUNDED, AT_ZERO):
            s = ls.s
            zero_index = ls.zero_index if ls.status == BREAKPOINT else None
            while True:
                w_new = _trial_point(w, step, s, zero_index)
                z_new = _trial_xw(prob, z, xd, w, step, s, w_new)
                f_new = prob.f_at(w_new, z_new, alpha)
                if f_new <= f0 + h.c1 * s * dg:
                    failed = False
                    break
                if s < h.s_min:
                    break
                s *= 0.5
                zero_index = None
                if s < h.s_min:
                    break

    if not failed and h.ray_refine and s < ls.s:
        # The quadratic model overshot. Its step still bounds the ray minimizer
        # from above, and f along the ray only needs X w and X d, which we hold.
        s_ref = _minimize_on_ray(prob, w, step, z, xd, alpha, ls.s, s, f_new)
        if s_ref != s:
            w_ref = _trial_point(w, step, s_ref, None)
            f_ref = prob.f_at(w_ref, _trial_xw(prob, z, xd, w, step, s_ref, w_ref), alpha)
            if f_ref < f_new:
                s, w_new, f_new = s_ref, w_ref, f_ref

    if failed:
        state.stats.linesearch_failures += 1
        if trace is not None:
            trace(alpha, state.steps_this_alpha, f0, int(act.size), 0.0)
        state.reduce_alpha(h.beta)
        return

    state.w = w_new
    state.inactive = w_new == 0.0
    state.newly_activated = np.zeros_like(state.inactive)
    if trace is not None:
        trace(alpha, state.steps_this_alpha, f_new, int((~state.inactive).sum()), s)


def _minimize_on_ray(prob: _Problem, w, d, z, xd, alpha, s_hi, s_acc, f_acc) -> float:
    """Bounded scalar minimization of ``f_alpha(w + s d)`` over ``[0, s_hi]``."""
    lam, mu, y = prob.h.lam, prob.h.mu, prob.y

    def phi(s):
        v = w + s * d
        u = 1.0 - y * (z + s * xd)
        return (0.5 * lam * float(v @ v) + float(np.mean(smoothed_hinge(u, alpha)))
                + mu * float(np.abs(v).sum()))

    res = optimize.minimize_scalar(phi, bounds=(0.0, s_hi), method="bounded",
                                   options={"xatol": 1e-3 * s_acc})
    prob.stats.ray_evals += int(res.nfev)
    return float(res.x) if res.fun < f_acc else s_acc


def _trial_xw(prob: _Problem, z, xd, w, d, s, w_new) -> np.ndarray:
    """``X w_new`` from ``X w`` and ``X d`` without a full pass over the data."""
    z_new = z + s * xd
    delta = w_new - (w + s * d)
    fix = np.flatnonzero(delta)
    if fix.size:
        z_new += prob.X[:, fix] @ delta[fix]
    return z_new


def _trial_point(w: np.ndarray, d: np.ndarray, s: float, zero_index: Optional[int]) -> np.ndarray:
    """``w + s d`` with exact zeroing of coordinates that hit or cross zero."""
    w_new = w + s * d
    if zero_index is not None:
        w_new[zero_index] = 0.0
        snap = np.abs(w_new) <= ZERO_SNAP_RTOL * (np.abs(w) + s * np.abs(d))
        w_new[snap] = 0.0
    crossed = np.sign(w_new) == -np.sign(w)
    crossed &= w != 0
    w_new[crossed] = 0.0
    return w_new


def solve(d: Dataset, h: Optional[Hyperparams] = None, w0: Optional[np.ndarray] = None,
          max_steps: int = 10_000, trace=None) -> SolveResult:
    """Minimize the l1-l2 SVM objective on ``d`` by the smoothing method.

    Parameters
    ----------
    d : Dataset
        Training data, ideally standardized and bias-augmented.
    h : Hyperparams
        Regularization weights and solver knobs.
    w0 : ndarray, optional
        Warm start; defaults to zeros. Its zero coordinates start inactive.
    max_steps : int
        Safety cap on the total number of Newton iterations.
    trace : callable, optional
        Called as ``trace(alpha, step, f_alpha, n_active, s)`` after each step.
    """
    h = h or Hyperparams()
    m = d.n_features
    if w0 is None:
        w = np.zeros(m)
    else:
        w = np.array(w0, dtype=np.float64)
        if w.shape != (m,):
            raise ValueError(f"w0 has shape {w.shape}, expected ({m},)")
    stats = SolverStats()
    prob = _Problem(d, h, stats)
    alpha = h.alpha0

    g_hat = prob.grad(w, (1.0 - d.y * prob.xw(w)) / alpha)
    inactive = w == 0.0
    J = inactive & (np.abs(g_hat) > h.mu + prob.grad_noise)
    state = SolverState(w=w, inactive=inactive & ~J, newly_activated=J, alpha=alpha, stats=stats)

    history: list[tuple[float, int, float]] = []
    stop = h.beta * h.alpha_min * (1.0 + ALPHA_RTOL)
    converged = True
    iters = 0
    last_alpha = state.alpha
    while state.alpha > stop:
        if iters >= max_steps:
            converged = False
            log.warning("solver hit max_steps=%d at alpha=%g", max_steps, state.alpha)
            break
        iters += 1
        state.reduced = False
        alpha_before = state.alpha
        newton_step(state, d, h, trace, _prob=prob)
        if state.reduced:
            f_alpha = prob.f_at(state.w, prob.xw(state.w), alpha_before)
            history.append((alpha_before, stats.steps_per_alpha[-1], f_alpha))
            last_alpha = alpha_before
    if not np.all(np.isfinite(state.w)):
        raise SolverError("non-finite weights")
    return SolveResult(w=state.w, alpha_final=last_alpha, history=history,
                       converged=converged, stats=stats)
