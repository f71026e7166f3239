"""Problem instance and evaluation of the cost

    F(x) = 0.5 ||y - A x||^2 + lam * (||x||_1 - f_alpha(x)),

where ``f_alpha`` is the Moreau envelope of the instance's base function.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .moreau import ProxFunction, make_base, moreau_envelope, moreau_gradient


def as_vector(x, n, name="x"):
    """Validate a length-``n`` finite real vector and return it as float64."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Immutable ``(A, y, lam, alpha, base)``.

    ``lam = 0`` is accepted so the pure least-squares special case can be run
    through the same machinery. ``base`` may be a :class:`ProxFunction` or a
    registry name.
    """

    A: np.ndarray
    y: np.ndarray
    lam: float
    alpha: float
    base: ProxFunction = field(default_factory=lambda: make_base("l1"))

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError(f"A must be a non-empty 2-D matrix, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A has non-finite entries")
        y = as_vector(self.y, A.shape[0], "y").copy()
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be nonnegative, got {self.lam!r}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        base = make_base(self.base) if isinstance(self.base, str) else self.base
        A.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "base", base)

    @property
    def M(self):
        return self.A.shape[0]

    @property
    def N(self):
        return self.A.shape[1]

    @cached_property
    def _gram_spectrum(self):
        return gram_eigh(self.A)

    @property
    def gram_eigenvalues(self):
        """Ascending eigenvalues of ``A^T A``."""
        return self._gram_spectrum[0]

    @property
    def gram_min_eigvec(self):
        return self._gram_spectrum[1][:, 0]

    def replace(self, **changes):
        fields = dict(A=self.A, y=self.y, lam=self.lam, alpha=self.alpha, base=self.base)
        fields.update(changes)
        return ProblemInstance(**fields)


def gram_eigh(A):
    """Dense symmetric eigendecomposition of ``A^T A``."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("A has non-finite entries")
    G = A.T @ A
    return np.linalg.eigh(0.5 * (G + G.T))


@dataclass(frozen=True)
class ObjectiveValue:
    total: float
    data_fidelity: float
    l1_term: float
    envelope_term: float


def evaluate_objective(problem: ProblemInstance, x) -> ObjectiveValue:
    x = as_vector(x, problem.N)
    r = problem.y - problem.A @ x
    fid = 0.5 * float(r @ r)
    l1_term = problem.lam * float(np.abs(x).sum())
    env_term = problem.lam * moreau_envelope(problem.base, problem.alpha, x)
    return ObjectiveValue(fid + l1_term - env_term, fid, l1_term, env_term)


def evaluate_penalty(problem: ProblemInstance, x):
    x = as_vector(x, problem.N)
    return problem.lam * (float(np.abs(x).sum()) - moreau_envelope(problem.base, problem.alpha, x))


def residual_gradient(problem: ProblemInstance, x):
    x = as_vector(x, problem.N)
    return problem.A.T @ (problem.A @ x - problem.y)


def l1_directional(x, d):
    """One-sided derivative of ``||.||_1`` at ``x`` along ``d``."""
    return float(np.sum(np.where(x != 0, np.sign(x) * d, np.abs(d))))


def directional_derivative(problem: ProblemInstance, x, d):
    """Exact one-sided directional derivative ``F'(x; d)``.

    The envelope is differentiable, so only the l1 term needs the one-sided
    rule ``|d_i|`` at zero coordinates.
    """
    x = as_vector(x, problem.N)
    d = as_vector(d, problem.N, "d")
    smooth = float(residual_gradient(problem, x) @ d)
    env = float(moreau_gradient(problem.base, problem.alpha, x) @ d)
    return smooth + problem.lam * (l1_directional(x, d) - env)
