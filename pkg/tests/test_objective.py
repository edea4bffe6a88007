from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netoutlier.graph import network_factor
from netoutlier.objective import (
    build_problem,
    gradient,
    hessian,
    objective_value,
    restrict,
    signed_design,
    split,
    split_penalty,
    with_lambda1,
)

from conftest import random_design, random_graph, random_problem


def elementwise_objective(p, w):
    """Loop-based evaluation of the primal objective."""
    N = len(w)
    quad = 0.0
    for i in range(N):
        for j in range(N):
            quad += w[i] * p.Q[i, j] * w[j]
    loss = 0.0
    for i in range(N):
        m = p.y[i] * sum(p.Q[i, j] * w[j] for j in range(N))
        loss += max(0.0, 1.0 - m) ** 2
    return quad + p.lambda2 * loss


def central_difference(f, w, h=1e-6):
    g = np.zeros_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def away_from_kinks(p, rng, scale=0.05, gap=1e-3):
    while True:
        w = rng.normal(scale=scale, size=p.y.size)
        if np.min(np.abs(p.y * (p.Q @ w) - 1.0)) > gap:
            return w


def test_shapes_and_zero_penalty_rows(rng):
    design = random_design(rng, 5, 3)
    factor = network_factor(random_graph(rng, 5, 0.6))
    p = build_problem(design, factor, 0.7, 1.0)
    assert p.Xtilde.shape == (11, 10) and p.Q.shape == (10, 10)
    np.testing.assert_array_equal(p.y, [1] * 5 + [-1] * 5)
    p0 = build_problem(design, None, 0.0, 1.0)
    np.testing.assert_array_equal(p0.Xtilde[6:], 0.0)
    np.testing.assert_allclose(p.Q, p.Xtilde.T @ p.Xtilde, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        build_problem(design, None, 0.5, 1.0)


def test_objective_special_points(rng):
    p = random_problem(rng, n=6, K=3, lambda2=0.7)
    assert objective_value(p, np.zeros(12)) == pytest.approx(0.7 * 12, rel=1e-15)
    np.testing.assert_allclose(gradient(p, np.zeros(12)), -2 * 0.7 * p.Q @ p.y, rtol=1e-13, atol=1e-13)


def test_flat_region_exact():
    # diagonal Q: margins are y_i * q_i * w_i, easy to push past 1
    from netoutlier.objective import SolverProblem

    q = np.array([2.0, 3.0, 1.0, 4.0])
    Q = np.diag(q)
    y = np.array([1.0, 1.0, -1.0, -1.0])
    p = SolverProblem(Q, y, 0.0, 1.5, np.zeros((2, 2)), np.zeros((2, 2)), None, np.arange(2))
    w = y * 2.0
    assert objective_value(p, w) == w @ Q @ w
    np.testing.assert_array_equal(gradient(p, w), 2 * Q @ w)
    np.testing.assert_array_equal(hessian(p, w), 2 * Q)


def test_objective_matches_elementwise_oracle(rng):
    for _ in range(20):
        p = random_problem(rng, n=5, K=2, lambda1=rng.choice([0.0, 0.3, 2.0]), lambda2=rng.uniform(0.1, 3))
        w = rng.normal(scale=0.1, size=10)
        assert objective_value(p, w) == pytest.approx(elementwise_objective(p, w), rel=1e-10)


def test_gradient_and_hessian_finite_differences(rng):
    for _ in range(25):
        p = random_problem(rng, n=6, K=3, lambda1=rng.choice([0.0, 1.0]), lambda2=rng.uniform(0.2, 2))
        w = away_from_kinks(p, rng)
        g = gradient(p, w)
        fd = central_difference(lambda v: objective_value(p, v), w)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(g))
        H = hessian(p, w)
        J = np.column_stack([
            (gradient(p, w + h) - gradient(p, w - h)) / 2e-6 for h in np.eye(w.size) * 1e-6
        ])
        assert np.abs(H - J).max() <= 1e-4 * max(1.0, np.abs(H).max())


def test_margin_exactly_one_is_inactive():
    from netoutlier.objective import SolverProblem

    Q = np.diag([1.0, 1.0])
    y = np.array([1.0, -1.0])
    p = SolverProblem(Q, y, 0.0, 1.0, np.zeros((2, 1)), np.zeros((2, 1)), None, np.arange(1))
    w = np.array([1.0, -1.0])
    np.testing.assert_array_equal(hessian(p, w), 2 * Q)


def test_split_and_augmented_design_identities(rng):
    for _ in range(30):
        n = int(rng.integers(2, 12))
        g = random_graph(rng, n, 0.4)
        L = network_factor(g).L
        w = rng.normal(size=n)
        assert w @ L @ w == pytest.approx(split_penalty(split(w), L), rel=1e-10, abs=1e-12)
        l1 = float(rng.choice([0.0, 0.1, 1.0, 10.0]))
        design = random_design(rng, n, int(rng.integers(1, 5)))
        p = build_problem(design, network_factor(g) if l1 else None, l1, 1.0)
        wt = np.abs(rng.normal(size=2 * n))
        X1, X2 = p.X1, p.X2
        lhs = np.sum((np.hstack([X1, -X2]) @ wt) ** 2) + l1 * split_penalty(wt, L)
        Xs = signed_design(p)
        assert lhs == pytest.approx(wt @ Xs.T @ Xs @ wt, rel=1e-8)


def test_with_lambda1_matches_direct_build(rng):
    design = random_design(rng, 7, 3)
    factor = network_factor(random_graph(rng, 7, 0.5))
    base = build_problem(design, None, 0.0, 1.3)
    for l1 in (0.0, 0.5, 4.0):
        direct = build_problem(design, factor if l1 else None, l1, 1.3)
        via = with_lambda1(base, factor, l1)
        np.testing.assert_allclose(via.Q, direct.Q, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(via.Xtilde, direct.Xtilde)


def test_restrict_is_principal_submatrix_of_refactored_problem(rng):
    p = random_problem(rng, n=9, K=3, lambda1=2.0)
    keep = np.array([0, 2, 3, 8])
    r = restrict(p, keep)
    cols = np.r_[keep, keep + 9]
    np.testing.assert_array_equal(r.Q, p.Q[np.ix_(cols, cols)])
    # rebuilding from the refactored penalty on the kept nodes agrees
    np.testing.assert_allclose(r.Xtilde.T @ r.Xtilde, r.Q, atol=1e-12)
    np.testing.assert_array_equal(r.nodes, keep)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(1, 4), st.sampled_from([0.0, 0.1, 1.0, 10.0]),
       st.floats(0.0, 5.0), st.integers(0, 2**31 - 1))
def test_convexity_and_psd(n, K, l1, l2, seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, n=n, K=K, lambda1=l1, lambda2=l2)
    np.testing.assert_array_equal(p.Q, p.Q.T)
    assert np.linalg.eigvalsh(p.Q).min() >= -1e-10 * max(1.0, np.abs(p.Q).max())
    for _ in range(10):
        a, b = rng.normal(scale=0.3, size=(2, 2 * n))
        t = rng.random()
        f = lambda v: objective_value(p, v)
        assert f(t * a + (1 - t) * b) <= t * f(a) + (1 - t) * f(b) + 1e-9
        H = hessian(p, a)
        al = rng.normal(size=2 * n)
        assert al @ H @ al >= -1e-10 * (al @ al)
