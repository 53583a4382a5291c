import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import direct_smoothed_objective, fd_gradient, fd_jacobian, rel_err, symmetric_dataset
from smsvm.dataset import Dataset
from smsvm.objective import (
    Hyperparams, gradient_smooth, hessian_active, hinge_objective, margins, objective, psi,
    psi_prime, psi_second, smoothed_hinge,
)

ONE_ROW = Dataset(np.array([[1.0]]), np.array([1.0]))


def test_psi_at_zero():
    assert psi(0.0) == (0.5, 0.5, 0.5)


def test_psi_pythagorean_point():
    value, first, second = psi(0.75)
    assert value == 1.0
    assert first == pytest.approx(0.5 * (1 + 0.75 / 1.25), rel=1e-15)
    assert second == pytest.approx(0.5 / 1.25**3, rel=1e-15)


@settings(max_examples=200)
@given(st.floats(-1e6, 1e6))
def test_psi_reflection(t):
    # psi(t) - psi(-t) = t and psi'(t) + psi'(-t) = 1
    v, p1, _ = psi(t)
    vm, pm, _ = psi(-t)
    assert v - vm == pytest.approx(t, rel=1e-12, abs=1e-12)
    assert p1 + pm == pytest.approx(1.0, rel=1e-12)


def test_psi_tails_are_finite():
    t = np.array([-1e300, -1e10, 1e10, 1e300])
    v, p1, p2 = psi(t)
    assert np.all(np.isfinite(v)) and np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))
    np.testing.assert_allclose(v[2:], t[2:], rtol=1e-15)
    assert np.all(v[:2] > 0) and np.all(v[:2] < 1e-9)
    np.testing.assert_allclose(p1, [0, 0, 1, 1], atol=1e-15)
    assert np.all(p2 < 1e-29)


def test_psi_derivatives_match_finite_differences():
    for t in np.linspace(-5, 5, 41):
        hstep = 1e-5
        fd1 = (psi(t + hstep)[0] - psi(t - hstep)[0]) / (2 * hstep)
        fd2 = (psi_prime(t + hstep) - psi_prime(t - hstep)) / (2 * hstep)
        assert psi(t)[1] == pytest.approx(fd1, rel=1e-8)
        assert psi_second(t) == pytest.approx(fd2, rel=1e-7)


def test_smoothed_hinge_examples():
    assert smoothed_hinge(0.0, 0.5) == 0.25
    assert smoothed_hinge(3.0, 4.0) == 4.0
    assert smoothed_hinge(-3.0, 4.0) == 1.0
    with pytest.raises(ValueError):
        smoothed_hinge(1.0, 0.0)


@settings(max_examples=300)
@given(st.floats(-1e8, 1e8), st.floats(1e-8, 1e3))
def test_smoothed_hinge_sandwich(u, alpha):
    gap = smoothed_hinge(u, alpha) - max(0.0, u)
    assert 0.0 <= gap <= alpha / 2 + math.ulp(max(abs(u), alpha))


@settings(max_examples=100)
@given(st.floats(-50, 50), st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_smoothed_hinge_monotone_in_alpha(u, a1, a2):
    lo, hi = sorted((a1, a2))
    assert smoothed_hinge(u, lo) <= smoothed_hinge(u, hi) * (1 + 1e-15)


def test_margins_examples():
    d = Dataset(np.array([[2.0]]), np.array([1.0]))
    np.testing.assert_array_equal(margins(np.zeros(1), d), [1.0])
    np.testing.assert_array_equal(margins(np.array([0.5]), d), [0.0])
    d_neg = Dataset(np.array([[2.0]]), np.array([-1.0]))
    np.testing.assert_array_equal(margins(np.array([0.5]), d_neg), [2.0])
    with pytest.raises(ValueError):
        margins(np.zeros(2), d)


def test_objective_one_row():
    h = Hyperparams(lam=0.0, mu=0.0)
    f, fhat = objective(np.zeros(1), ONE_ROW, h, 1.0)
    assert fhat == pytest.approx(0.5 * (1 + math.sqrt(2)), rel=1e-15)
    assert fhat == pytest.approx(1.2071068, abs=5e-8)
    assert f == fhat
    f, fhat = objective(np.zeros(1), ONE_ROW, Hyperparams(lam=0.0, mu=3.0), 1.0)
    assert f == fhat


def test_objective_matches_direct_loop(rng):
    for _ in range(20):
        n, m = rng.integers(1, 30), rng.integers(1, 8)
        X, y = rng.normal(size=(n, m)), np.where(rng.random(n) < 0.5, 1.0, -1.0)
        w = rng.normal(size=m)
        lam, mu, alpha = rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0.05, 5)
        f, _ = objective(w, Dataset(X, y), Hyperparams(lam=lam, mu=mu), alpha)
        assert f == pytest.approx(direct_smoothed_objective(w, X, y, lam, mu, alpha), rel=1e-12)


def test_gradient_one_row():
    g = gradient_smooth(np.zeros(1), ONE_ROW, Hyperparams(lam=0.0), 1.0)
    assert g[0] == pytest.approx(-psi(1.0)[1], rel=1e-15)
    assert g[0] == pytest.approx(-0.85355339, abs=5e-9)
    fd = fd_gradient(lambda w: objective(w, ONE_ROW, Hyperparams(lam=0.0), 1.0)[1], np.zeros(1))
    assert rel_err(g, fd) <= 1e-6


def test_gradient_with_ridge_one_row():
    h = Hyperparams(lam=1.0)
    w = np.array([2.0])
    g = gradient_smooth(w, ONE_ROW, h, 1.0)
    # u = 1 - 2 = -1, so loss gradient is -psi'(-1)
    assert g[0] == pytest.approx(2.0 - psi(-1.0)[1], rel=1e-14)
    fd = fd_gradient(lambda v: objective(v, ONE_ROW, h, 1.0)[1], w)
    assert rel_err(g, fd) <= 1e-6


def test_gradient_vanishes_on_symmetric_data(rng):
    d = symmetric_dataset(rng, 10, 4)
    g = gradient_smooth(np.zeros(4), d, Hyperparams(lam=0.0), 0.3)
    np.testing.assert_allclose(g, 0.0, atol=1e-15)


def test_hessian_one_row():
    H = hessian_active(np.zeros(1), ONE_ROW, Hyperparams(lam=0.0), 1.0, [0])
    assert H[0, 0] == pytest.approx(psi(1.0)[2], rel=1e-15)
    assert H[0, 0] == pytest.approx(0.17677670, abs=5e-9)


def test_hessian_tails_leave_ridge():
    d = Dataset(np.array([[1e12, 1.0]]), np.array([1.0]))
    H = hessian_active(np.array([1.0, 0.0]), d, Hyperparams(lam=3.0), 1.0, [0, 1])
    np.testing.assert_allclose(H, 3.0 * np.eye(2), atol=1e-12)


def test_hessian_block_matches_full_brute_force(rng):
    n, m = 15, 6
    X, y = rng.normal(size=(n, m)), np.where(rng.random(n) < 0.5, 1.0, -1.0)
    d, h, alpha = Dataset(X, y), Hyperparams(lam=0.2), 0.4
    w = rng.normal(size=m)
    full = h.lam * np.eye(m)
    for xi, yi in zip(X, y):
        u = 1.0 - yi * xi @ w
        full += np.outer(xi, xi) * 0.5 * alpha**2 / (alpha**2 + u * u) ** 1.5 / n
    act = np.array([4, 1, 3])
    np.testing.assert_allclose(hessian_active(w, d, h, alpha, act), full[np.ix_(act, act)],
                               rtol=1e-12)
    assert hessian_active(w, d, h, alpha, []).shape == (0, 0)
    with pytest.raises(IndexError):
        hessian_active(w, d, h, alpha, [6])
    with pytest.raises(ValueError):
        hessian_active(w, d, h, alpha, [1, 1])


def test_random_derivatives_against_finite_differences(rng):
    for _ in range(30):
        n, m = int(rng.integers(1, 50)), int(rng.integers(1, 10))
        d = Dataset(rng.normal(size=(n, m)), np.where(rng.random(n) < 0.5, 1.0, -1.0))
        h = Hyperparams(lam=float(rng.uniform(0, 1)))
        alpha = float(10 ** rng.uniform(-2, 1))
        w = rng.normal(size=m) * 0.5
        g = gradient_smooth(w, d, h, alpha)
        assert rel_err(g, fd_gradient(lambda v: objective(v, d, h, alpha)[1], w)) <= 1e-6
        act = np.flatnonzero(rng.random(m) < 0.7)
        if act.size:
            H = hessian_active(w, d, h, alpha, act)
            fd = fd_jacobian(lambda v: gradient_smooth(v, d, h, alpha), w, act)
            assert rel_err(H, fd) <= 1e-5


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_smoothed_objective_convex_along_segments(seed):
    rng = np.random.default_rng(seed)
    d = Dataset(rng.normal(size=(8, 3)), np.where(rng.random(8) < 0.5, 1.0, -1.0))
    h = Hyperparams(lam=0.1, mu=0.2)
    w1, w2 = rng.normal(size=3), rng.normal(size=3)
    t = rng.uniform()
    f = lambda v: objective(v, d, h, 0.5)[0]
    assert f(t * w1 + (1 - t) * w2) <= t * f(w1) + (1 - t) * f(w2) + 1e-12


def test_smoothed_objective_bounds_hinge(rng):
    d = Dataset(rng.normal(size=(20, 3)), np.where(rng.random(20) < 0.5, 1.0, -1.0))
    h = Hyperparams(lam=0.1, mu=0.2)
    for alpha in (1.0, 0.1, 1e-3):
        w = rng.normal(size=3)
        f, _ = objective(w, d, h, alpha)
        base = hinge_objective(w, d, h.lam, h.mu)
        assert base <= f <= base + alpha / 2 + 1e-15


def test_hyperparams_validation():
    with pytest.raises(ValueError, match=r"beta must be in \(0,1\)"):
        Hyperparams(beta=1.5)
    with pytest.raises(ValueError, match="mu"):
        Hyperparams(mu=-1)
    with pytest.raises(ValueError, match="finite"):
        Hyperparams(lam=math.inf)
    assert Hyperparams().to_dict()["s_min"] == 2.0**-30
