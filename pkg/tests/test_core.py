import numpy as np
import pytest

from mmgmc import (
    ProblemInstance,
    directional_derivative,
    evaluate_objective,
    evaluate_penalty,
    make_base,
    residual_gradient,
)

from conftest import envelope_grid_1d, random_problem


def test_objective_vanishes_at_origin():
    p = ProblemInstance(np.eye(1), [0.0], 1.0, 1.0, "l1")
    assert evaluate_objective(p, [0.0]).total == 0.0


def test_objective_scalar_example():
    p = ProblemInstance([[1.0]], [1.0], 0.5, 1.0, "l1")
    # envelope value at 1 from the grid oracle: Huber_1(1) = 0.5
    huber = envelope_grid_1d(np.abs, 1.0, 1.0)
    expected = 0.0 + 0.5 * 1.0 - 0.5 * huber
    val = evaluate_objective(p, [1.0])
    assert expected == pytest.approx(0.25, abs=1e-8)
    assert val.total == pytest.approx(0.25, abs=1e-15)
    assert (val.data_fidelity, val.l1_term, val.envelope_term) == pytest.approx((0.0, 0.5, 0.25))


def test_zero_penalty_weight_is_least_squares(rng):
    p = random_problem(rng, M=4, N=3, lam=0.0)
    x = rng.normal(size=3)
    r = p.y - p.A @ x
    assert evaluate_objective(p, x).total == 0.5 * r @ r


def test_objective_decomposition_is_exact(rng):
    for _ in range(100):
        p = random_problem(rng)
        v = evaluate_objective(p, rng.normal(size=p.N))
        assert v.total == v.data_fidelity + v.l1_term - v.envelope_term


def test_penalty_examples():
    p = ProblemInstance([[1.0]], [0.0], 1.0, 1.0, "l1")
    assert evaluate_penalty(p, [0.0]) == 0.0
    oracle = 2.0 - envelope_grid_1d(np.abs, 1.0, 2.0, lo=-3, hi=3)
    assert oracle == pytest.approx(0.5, abs=1e-8)
    assert evaluate_penalty(p, [2.0]) == pytest.approx(0.5, abs=1e-15)
    pz = ProblemInstance(np.eye(3), np.zeros(3), 0.7, 2.0, "zero")
    x = np.array([1.0, -2.0, 0.5])
    assert evaluate_penalty(pz, x) == pytest.approx(0.7 * 3.5)


@pytest.mark.parametrize("base", ["l1", "zero"])
def test_penalty_nonnegative(base, rng):
    for _ in range(1000):
        p = random_problem(rng, M=2, N=4, base=base)
        assert evaluate_penalty(p, rng.normal(scale=3, size=4)) >= -1e-12


def test_directional_derivative_at_kink():
    p = ProblemInstance([[1.0]], [0.0], 1.0, 1.0, "l1")
    F = lambda z: evaluate_objective(p, z).total
    slopes = [(F(np.array([h])) - F(np.zeros(1))) / h for h in (1e-4, 1e-5, 1e-6)]
    assert slopes[-1] == pytest.approx(1.0, abs=1e-5)
    assert directional_derivative(p, [0.0], [1.0]) == 1.0
    assert directional_derivative(p, [0.3], [0.0]) == 0.0


def test_directional_derivative_finite_difference_slope(rng):
    for _ in range(100):
        p = random_problem(rng)
        x = rng.normal(size=p.N)
        x[rng.random(p.N) < 0.3] = 0.0
        d = rng.normal(size=p.N)
        F = lambda z: evaluate_objective(p, z).total
        dd = directional_derivative(p, x, d)
        for theta in (1e-4, 1e-5, 1e-6):
            slope = (F(x + theta * d) - F(x)) / theta
            # O(theta) curvature bound: |A d|^2 + lam alpha |d|^2
            c = np.linalg.norm(p.A @ d) ** 2 + p.lam * p.alpha * d @ d
            assert abs(slope - dd) <= c * theta + 1e-7


def test_directional_derivative_linear_off_axes(rng):
    for _ in range(100):
        p = random_problem(rng)
        x = rng.normal(size=p.N)
        d1, d2 = rng.normal(size=(2, p.N))
        lhs = directional_derivative(p, x, d1 + d2)
        rhs = directional_derivative(p, x, d1) + directional_derivative(p, x, d2)
        assert lhs == pytest.approx(rhs, abs=1e-12)
        assert directional_derivative(p, x, -d1) == pytest.approx(-directional_derivative(p, x, d1))


def test_residual_gradient():
    p = ProblemInstance(np.eye(3), np.zeros(3), 1.0, 1.0)
    x = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(residual_gradient(p, x), x)
    A = np.array([[1.0, 2.0], [0.0, 1.0], [1.0, 1.0]])
    xs = np.array([0.5, -1.0])
    q = ProblemInstance(A, A @ xs, 1.0, 1.0)
    np.testing.assert_allclose(residual_gradient(q, xs), 0.0, atol=1e-15)


def test_residual_gradient_central_differences(rng):
    p = random_problem(rng, M=3, N=2)
    x = rng.normal(size=2)
    f = lambda z: 0.5 * np.sum((p.y - p.A @ z) ** 2)
    h = 1e-6
    fd = [(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(residual_gradient(p, x), fd, atol=1e-6)


def test_validation_errors():
    with pytest.raises(ValueError):
        ProblemInstance(np.eye(2), [0.0, 0.0], -1.0, 1.0)
    with pytest.raises(ValueError):
        ProblemInstance(np.eye(2), [0.0, 0.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        ProblemInstance([[np.nan, 0.0]], [0.0], 1.0, 1.0)
    with pytest.raises(ValueError, match="shape"):
        ProblemInstance(np.eye(2), [0.0], 1.0, 1.0)
    p = ProblemInstance(np.eye(2), [0.0, 0.0], 1.0, 1.0)
    with pytest.raises(ValueError, match="shape"):
        evaluate_objective(p, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="non-finite"):
        evaluate_objective(p, [1.0, np.inf])
    with pytest.raises(ValueError):
        directional_derivative(p, [1.0, 2.0], [1.0])


def test_instance_is_read_only():
    A = np.eye(2)
    p = ProblemInstance(A, [1.0, 2.0], 1.0, 1.0)
    A[0, 0] = 5.0
    assert p.A[0, 0] == 1.0
    with pytest.raises(ValueError):
        p.A[0, 0] = 3.0
    with pytest.raises(AttributeError):
        p.lam = 2.0
    assert p.base.name == "l1"
    assert p.replace(base=make_base("zero")).base.name == "zero"
