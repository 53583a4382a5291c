"""Exact minimization of a quadratic plus l1 penalty along a ray.

Minimizes ``j(s) = a s^2 + b s + c + mu * ||w + s d||_1`` over ``0 <= s <= s_max``.
``j`` is convex and piecewise quadratic with kinks at ``sigma_k = -w_k/d_k``, so
the minimizer is found by a binary search over the sorted positive kinks using
one-sided slopes ``j'(s-)`` and ``j'(s+)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class UnboundedDescentError(ArithmeticError):
    """``j`` decreases without bound (``a = 0`` and the slope never turns nonnegative)."""


INTERIOR = "interior"
BREAKPOINT = "breakpoint"
AT_ZERO = "at_zero"
UNBOUNDED = "unbounded"

SLOPE_ZERO_RTOL = 1e-12


@dataclass(frozen=True)
class LineSearchResult:
    s: float
    status: str
    zero_index: Optional[int] = None
    probes: int = 0


def one_sided_slopes(s: float, w, d, b: float, a: float, mu: float) -> tuple[float, float]:
    """``(j'(s-), j'(s+))`` straight from the slope formula; used by checks and tests."""
    w = np.asarray(w, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    base = 2.0 * a * s + b
    nz = d != 0
    sigma = np.full(w.shape, -np.inf)
    sigma[nz] = -w[nz] / d[nz]
    ad = np.abs(d)
    # sign(w_k + r d_k) * d_k for r just left / right of s
    at = nz & (sigma == s)
    off = nz & ~at
    off_sum = float(np.sum(np.where(sigma[off] < s, ad[off], -ad[off])))
    # coordinates with d = 0 contribute nothing
    jump = float(ad[at].sum())
    return base + mu * (off_sum - jump), base + mu * (off_sum + jump)


def linesearch_l1(
    w,
    d,
    b: float,
    a: float,
    mu: float,
    s_max: float = math.inf,
    raise_unbounded: bool = False,
) -> LineSearchResult:
    """Return the minimizer of ``a s^2 + b s + mu*||w + s d||_1`` on ``[0, s_max]``.

    ``status`` is ``breakpoint`` when the minimizer is exactly a kink
    ``-w[j]/d[j]`` (``zero_index`` is then the smallest such ``j``), ``at_zero``
    when ``j'(0+) >= 0``, ``unbounded`` when ``a = 0``, the slope stays
    negative and ``s_max`` is infinite, and ``interior`` otherwise (including a clamp to ``s_max``).
    """
    w = np.asarray(w, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if a < 0 or mu < 0 or s_max < 0:
        raise ValueError("a, mu and s_max must be nonnegative")
    if not np.any(d):
        raise ValueError("direction d must be nonzero")

    ad = np.abs(d)
    d_l1 = float(ad.sum())
    nz = d != 0
    sigma = np.full(w.shape, -np.inf)
    sigma[nz] = -w[nz] / d[nz]

    # Right-derivative at 0: coordinates sitting at zero move off with slope |d_k|.
    slope1 = b + mu * float(np.sum(np.where(w != 0, np.sign(w) * d, ad)))
    if mu == 0:
        return _pure_quadratic(b, a, s_max, raise_unbounded)
    if slope1 >= 0:
        return LineSearchResult(0.0, AT_ZERO)
    slope_inf = b + mu * d_l1
    if a == 0 and slope_inf <= 0:
        if math.isfinite(s_max):
            return LineSearchResult(float(s_max), INTERIOR)
        if raise_unbounded:
            raise UnboundedDescentError("unbounded descent")
        return LineSearchResult(math.inf, UNBOUNDED)

    # Distinct positive kinks in ascending order, each with its total jump
    # 2*mu*sum|d_k| and the smallest coordinate index attaining it.
    pos = np.flatnonzero(sigma > 0)
    order = pos[np.lexsort((pos, sigma[pos]))]
    kinks, first_start = np.unique(sigma[order], return_index=True)
    group_abs = np.add.reduceat(ad[order], first_start) if order.size else np.empty(0)
    first_index = order[first_start]
    # |d| mass of kinks strictly left of kink i (positive kinks only); the
    # nonpositive kinks are always to the left of any s > 0.
    left_fixed = d_l1 - float(ad[pos].sum())
    cum_left = np.concatenate([[0.0], np.cumsum(group_abs)[:-1]]) + left_fixed
    total = d_l1

    def slopes_at(i: int) -> tuple[float, float]:
        s = kinks[i]
        left = cum_left[i]
        right = total - left - group_abs[i]
        s0 = 2.0 * a * s + b + mu * (left - right)
        jump = mu * group_abs[i]
        return s0 - jump, s0 + jump

    r = kinks.size
    lo, hi = -1, r  # sentinels: s=0 and s=+inf
    s_lo, slope_lo = 0.0, slope1
    probes = 0
    while hi > lo + 1:
        i = (lo + hi) // 2
        s = float(kinks[i])
        minus, plus = slopes_at(i)
        probes += 1
        tol = SLOPE_ZERO_RTOL * (abs(b) + 2.0 * a * s + mu * d_l1)
        if abs(minus) <= tol or abs(plus) <= tol or (minus < 0 < plus):
            if s > s_max:
                return LineSearchResult(float(s_max), INTERIOR, None, probes)
            return LineSearchResult(s, BREAKPOINT, int(first_index[i]), probes)
        if plus < 0:
            lo, s_lo, slope_lo = i, s, plus
        else:
            hi = i

    # The slope is 2a s + const on (s_lo, next kink); its root is the minimizer.
    if a > 0:
        s = s_lo - slope_lo / (2.0 * a)
        if hi < r:
            s = min(s, float(kinks[hi]))
    else:
        s = s_lo  # a = 0: slope is piecewise constant, so the root is a kink
    if s > s_max:
        s = float(s_max)
    return LineSearchResult(max(s, 0.0), INTERIOR, None, probes)


def _pure_quadratic(b: float, a: float, s_max: float, raise_unbounded: bool) -> LineSearchResult:
    if b >= 0:
        return LineSearchResult(0.0, AT_ZERO)
    if a == 0:
        if math.isfinite(s_max):
            return LineSearchResult(float(s_max), INTERIOR)
        if raise_unbounded:
            raise UnboundedDescentError("unbounded descent")
        return LineSearchResult(math.inf, UNBOUNDED)
    return LineSearchResult(min(-b / (2.0 * a), float(s_max)), INTERIOR)


def line_objective(s: float, w, d, b: float, a: float, mu: float, c: float = 0.0) -> float:
    return a * s * s + b * s + c + mu * float(np.abs(np.asarray(w) + s * np.asarray(d)).sum())
