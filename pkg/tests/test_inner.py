import numpy as np
import pytest

from mmgmc import (
    InnerConfig,
    NotCertifiedError,
    ProblemInstance,
    SurrogateParams,
    lipschitz_bound,
    majorizer_smooth_gradient,
    majorizer_value,
    minimal_gamma,
    minimize_majorizer_in_ball,
    project_ball,
    prox_l1_plus_ball,
)
from mmgmc.inner import InnerSolverError
from mmgmc.moreau import scaled_l1
from mmgmc.oracle import GridSpec, ball_grid, grid_minimize

from conftest import majorizer_rows, random_problem


def test_project_ball_examples(rng):
    np.testing.assert_allclose(project_ball([0, 0], 1.0, [3.0, 4.0]), [0.6, 0.8])
    x = np.array([0.1, -0.2])
    np.testing.assert_array_equal(project_ball([0, 0], 1.0, x), x)
    with pytest.raises(ValueError):
        project_ball([0, 0], 0.0, x)
    box = GridSpec([-2, -2], [2, 2], 401).points()
    for _ in range(20):
        c, x = rng.normal(size=(2, 2))
        r = rng.uniform(0.2, 1.5)
        p = project_ball(c, r, x)
        assert np.linalg.norm(p - c) <= r + 1e-12
        inside = box[np.linalg.norm(box - c, axis=1) <= r]
        assert np.linalg.norm(p - x) <= np.min(np.linalg.norm(inside - x, axis=1)) + 1e-12


def test_prox_shortcuts():
    c = np.zeros(2)
    x = np.array([3.0, 4.0])
    np.testing.assert_allclose(prox_l1_plus_ball(0.0, c, 1.0, x), project_ball(c, 1.0, x))
    np.testing.assert_allclose(prox_l1_plus_ball(0.5, c, 10.0, x), [2.5, 3.5])
    with pytest.raises(ValueError):
        prox_l1_plus_ball(-1.0, c, 1.0, x)


@pytest.mark.parametrize("method", ["multiplier", "dykstra"])
def test_prox_matches_grid_oracle(method, rng):
    for _ in range(10):
        t = rng.uniform(0.1, 1.0)
        c = rng.normal(size=2)
        r = rng.uniform(0.3, 1.0)
        x = c + rng.normal(scale=2, size=2)
        v = prox_l1_plus_ball(t, c, r, x, max_iter=20000, method=method)
        obj = lambda P: t * np.abs(P).sum(axis=1) + 0.5 * ((P - x) ** 2).sum(axis=1)
        grid = ball_grid(c, r, 801)
        P = grid.points()
        vals = np.where(np.linalg.norm(P - c, axis=1) <= r, obj(P), np.inf)
        best = P[np.argmin(vals)]
        assert np.linalg.norm(v - c) <= r + 1e-12
        assert obj(v[None])[0] <= vals.min() + 1e-12
        # the prox objective is 1-strongly convex on the ball
        fv = obj(v[None])[0]
        assert np.linalg.norm(v - best) <= np.sqrt(2 * (vals.min() - fv)) + 1e-6


def test_prox_failure_is_reported():
    with pytest.raises(InnerSolverError, match="did not converge"):
        prox_l1_plus_ball(0.5, np.zeros(3), 0.1, np.array([5.0, -3.0, 2.0]), max_iter=2)


def test_lipschitz_examples(rng):
    assert lipschitz_bound(np.eye(2), 1.0, 1.0, 0.0) == 2.0
    A = rng.normal(size=(3, 4))
    assert lipschitz_bound(A, 0.0, 2.0, 5.0) == pytest.approx(np.linalg.eigvalsh(A.T @ A)[-1])
    for _ in range(200):
        p = random_problem(rng)
        g = rng.uniform(0, 2)
        prm = SurrogateParams(g, rng.normal(size=p.N))
        L = lipschitz_bound(p.A, p.lam, p.alpha, g)
        u, v = rng.normal(scale=2, size=(2, p.N))
        diff = majorizer_smooth_gradient(p, prm, u) - majorizer_smooth_gradient(p, prm, v)
        assert np.linalg.norm(diff) <= L * np.linalg.norm(u - v) + 1e-10


def test_least_squares_with_proximal_term(rng):
    A = rng.normal(size=(5, 3))
    y = rng.normal(size=5)
    gamma = 3.0
    w = rng.normal(size=3)
    # lam = 0 zeroes the proximal term too: the normal equations give the answer
    p = ProblemInstance(A, y, 0.0, 1.0)
    res = minimize_majorizer_in_ball(p, SurrogateParams(gamma, w), 1e6, InnerConfig(tol_inner=1e-12, max_inner_iter=100000))
    np.testing.assert_allclose(res.x_star, np.linalg.solve(A.T @ A, A.T @ y), atol=1e-6)
    pz = ProblemInstance(A, y, 0.5, 1.0, "zero")
    res = minimize_majorizer_in_ball(pz, SurrogateParams(gamma, w), 1e6, InnerConfig(tol_inner=1e-12, max_inner_iter=100000))
    # base zero: a strongly convex LASSO with a proximal term; check the subgradient condition
    H = A.T @ A + 2 * 0.5 * gamma * np.eye(3)
    b = A.T @ y + 2 * 0.5 * gamma * w
    x = res.x_star
    sub = H @ x - b
    for i in range(3):
        if abs(x[i]) > 1e-8:
            assert sub[i] + 0.5 * np.sign(x[i]) == pytest.approx(0.0, abs=1e-6)
        else:
            assert abs(sub[i]) <= 0.5 + 1e-6


def test_tiny_radius_returns_anchor(rng):
    p = random_problem(rng, M=3, N=2)
    g = minimal_gamma(p.A, p.lam, p.alpha, 0.0) + 0.1
    w = rng.normal(size=2)
    res = minimize_majorizer_in_ball(p, SurrogateParams(g, w), 1e-12)
    np.testing.assert_allclose(res.x_star, w, atol=1e-12)


def test_refuses_uncertified_surrogate():
    p = ProblemInstance(np.eye(2), [1.0, 1.0], 1.0, 2.0)
    with pytest.raises(NotCertifiedError, match="gamma_m"):
        minimize_majorizer_in_ball(p, SurrogateParams(0.4, [0.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        minimize_majorizer_in_ball(p, SurrogateParams(0.5, [0.0, 0.0]), -1.0)


@pytest.mark.parametrize("method", ["multiplier", "dykstra"])
def test_feasibility_and_descent(method, rng):
    cfg = InnerConfig(prox_method=method, dykstra_iter=5000)
    for _ in range(40):
        p = random_problem(rng, N=int(rng.integers(1, 6)))
        g = minimal_gamma(p.A, p.lam, p.alpha, 0.0) + rng.uniform(0, 0.3)
        w = rng.normal(size=p.N)
        r = rng.uniform(0.01, 1.0)
        prm = SurrogateParams(g, w)
        res = minimize_majorizer_in_ball(p, prm, r, cfg)
        assert np.linalg.norm(res.x_star - w) <= r + 1e-9
        assert res.objective <= majorizer_value(p, prm, w) + 1e-12
        assert res.objective == pytest.approx(majorizer_value(p, prm, res.x_star), abs=1e-12)


def test_methods_and_paths_agree(rng):
    for _ in range(20):
        p = random_problem(rng, M=4, N=3)
        g = minimal_gamma(p.A, p.lam, p.alpha, 0.0) + 0.2
        prm = SurrogateParams(g, rng.normal(size=3))
        a = minimize_majorizer_in_ball(p, prm, 0.6)
        b = minimize_majorizer_in_ball(p, prm, 0.6, InnerConfig(prox_method="dykstra", dykstra_iter=20000))
        assert a.objective == pytest.approx(b.objective, abs=1e-8)


def test_scaled_base_kernel_matches_generic_loop(rng):
    # a lambda-wrapped base has no scale attribute and takes the Python loop
    for _ in range(10):
        p = random_problem(rng, M=4, N=3, base=scaled_l1(rng.uniform(0, 1, size=3)))
        slow = p.replace(base=p.base.__class__(p.base.name, p.base.value, p.base.prox))
        g = minimal_gamma(p.A, p.lam, p.alpha, 0.0) + 0.2
        prm = SurrogateParams(g, rng.normal(size=3))
        a = minimize_majorizer_in_ball(p, prm, 0.5)
        b = minimize_majorizer_in_ball(slow, prm, 0.5)
        np.testing.assert_allclose(a.x_star, b.x_star, atol=1e-8)


def test_strong_convexity_gap(rng):
    for _ in range(20):
        p = random_problem(rng, M=4, N=2)
        a = rng.uniform(0.05, 0.5)
        g = minimal_gamma(p.A, p.lam, p.alpha, a)
        w = rng.normal(size=2)
        prm = SurrogateParams(g, w, a)
        r = 0.5
        res = minimize_majorizer_in_ball(p, prm, r, InnerConfig(tol_inner=1e-12))
        X = ball_grid(w, r, 101).points()
        X = X[np.linalg.norm(X - w, axis=1) <= r]
        gap = majorizer_rows(p, g, w, X) - res.objective
        d2 = ((X - res.x_star) ** 2).sum(axis=1)
        # a-strong convexity on a convex set: f(x) - f(x*) >= a/2 |x - x*|^2
        assert np.all(gap >= 0.5 * a * d2 - 1e-7)


def test_matches_masked_grid_minimum(rng):
    for _ in range(5):
        p = random_problem(rng, M=3, N=2, alpha=rng.uniform(1.5, 3.0))
        g = minimal_gamma(p.A, p.lam, p.alpha, 0.0) + 0.05
        w = rng.normal(size=2)
        r = 0.7
        res = minimize_majorizer_in_ball(p, SurrogateParams(g, w), r)
        grid = ball_grid(w, r, 201)

        def f(X):
            vals = majorizer_rows(p, g, w, X)
            return np.where(np.linalg.norm(X - w, axis=1) <= r, vals, np.inf)

        _, fmin = grid_minimize(f, grid, batched=True)
        assert res.objective <= fmin + 1e-4
