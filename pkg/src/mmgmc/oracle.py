"""Brute-force and closed-form reference solvers for desk-scale checks.

Nothing here imports solver code; callers pass the functions to be checked
as plain callbacks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_LIMIT = 10**7


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    lower: np.ndarray
    upper: np.ndarray
    points_per_dim: int

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("need lower < upper componentwise")
        if int(self.points_per_dim) < 1:
            raise ValueError("points_per_dim must be positive")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "points_per_dim", int(self.points_per_dim))

    @property
    def size(self):
        return self.points_per_dim ** len(self.lower)

    @property
    def spacing(self):
        if self.points_per_dim == 1:
            return np.zeros_like(self.lower)
        return (self.upper - self.lower) / (self.points_per_dim - 1)

    def points(self):
        """Lattice points in lexicographic order, shape ``(size, n)``."""
        axes = [np.linspace(a, b, self.points_per_dim) for a, b in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def ball_grid(center, radius, points_per_dim):
    """Grid over the box bounding ``B_radius(center)``."""
    center = np.asarray(center, dtype=float)
    return GridSpec(center - radius, center + radius, points_per_dim)


def grid_minimize(f, grid: GridSpec, batched=False):
    """Exhaustive lattice minimum of ``f``.

    ``f`` maps one point to a float, or with ``batched=True`` an ``(K, n)``
    array to ``K`` values. Return ``inf``/``nan`` to mask points out. Ties go
    to the lexicographically first lattice point.
    """
    if grid.size > GRID_LIMIT:
        raise OracleError(f"grid of {grid.size} points exceeds the {GRID_LIMIT} guard")
    pts = grid.points()
    if batched:
        vals = np.asarray(f(pts), dtype=float)
    else:
        vals = np.array([f(p) for p in pts], dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        raise OracleError("f is masked on the whole grid")
    return pts[i].copy(), float(vals[i])


def finite_difference_directional(f, x, d, h):
    """Forward difference ``(f(x + h d) - f(x)) / h``."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    return (f(x + h * d) - f(x)) / h


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def lasso_objective(A, y, lam, x):
    r = y - A @ x
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())


def ista_lasso(A, y, lam, tol=1e-12, max_iter=200000):
    """Iterative soft thresholding for ``0.5||y - Ax||^2 + lam ||x||_1`` with
    step ``1 / lambda_max(A^T A)``, started at zero."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    L = float(np.linalg.eigvalsh(A.T @ A)[-1])
    x = np.zeros(A.shape[1])
    if L == 0:
        return x
    Aty = A.T @ y
    G = A.T @ A
    step = np.inf
    for _ in range(max_iter):
        xn = _soft(x - (G @ x - Aty) / L, lam / L)
        step = np.linalg.norm(xn - x)
        x = xn
        if step <= tol:
            return x
    raise OracleError(
        f"ISTA did not reach tol={tol:g} in {max_iter} iterations; last step {step:.3e}"
    )


def least_squares_solve(A, y):
    """Minimum-norm minimizer of ``0.5 ||y - A x||^2``."""
    return np.linalg.lstsq(np.asarray(A, dtype=float), np.asarray(y, dtype=float), rcond=None)[0]
