import numpy as np
import pytest

from mmgmc import ProblemInstance, make_base


def random_problem(rng, M=None, N=None, lam=None, alpha=None, base="l1"):
    M = M or int(rng.integers(1, 8))
    N = N or int(rng.integers(1, 8))
    A = rng.normal(size=(M, N)) / np.sqrt(M)
    y = rng.normal(size=M)
    lam = rng.uniform(0.1, 2.0) if lam is None else lam
    alpha = rng.uniform(0.2, 3.0) if alpha is None else alpha
    return ProblemInstance(A, y, lam, alpha, make_base(base) if isinstance(base, str) else base)


def huber_rows(alpha, X):
    """Row-wise l1 envelope written out from the piecewise formula."""
    a = np.abs(X)
    return np.where(a <= 1 / alpha, 0.5 * alpha * X**2, a - 0.5 / alpha).sum(axis=-1)


def majorizer_rows(problem, gamma_m, w, X):
    """Independent batched F^M(., w) for the l1 base, one row per point."""
    R = X @ problem.A.T - problem.y
    pen = np.abs(X).sum(axis=1) - huber_rows(problem.alpha, X)
    D = X - w
    return 0.5 * (R**2).sum(axis=1) + problem.lam * pen + problem.lam * gamma_m * (D**2).sum(axis=1)


def envelope_grid_1d(f, alpha, x, lo=-2.0, hi=2.0, step=1e-4):
    """inf over a dense 1-D grid of f(v) + alpha/2 (v - x)^2."""
    v = np.arange(lo, hi + step / 2, step)
    return float(np.min(f(v) + 0.5 * alpha * (v - x) ** 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def identity2():
    return np.eye(2)
