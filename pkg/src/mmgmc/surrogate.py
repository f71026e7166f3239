"""Local majorizers of the cost and their spectral convexity certificates.

Subtracting ``gamma_m ||x - w||^2`` from the envelope gives a minorizer of
``f_alpha`` that touches it at ``w``. Substituting it into the cost yields

    F^M(x, w) = F(x) + lam * gamma_m * ||x - w||^2,

a majorizer of ``F`` tangent at ``w``. Because ``f_alpha`` has an
alpha-Lipschitz gradient, ``F^M(., w)`` is convex once
``A^T A + lam (2 gamma_m - alpha) I`` is PSD.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import (
    ProblemInstance,
    as_vector,
    evaluate_objective,
    gram_eigh,
    l1_directional,
    residual_gradient,
)
from .moreau import moreau_envelope, moreau_gradient


class NotCertifiedError(ValueError):
    """Raised when a solver is asked to work on an uncertified surrogate."""


class Verdict(str, enum.Enum):
    STRICTLY_CONVEX = "strictly_convex"
    CONVEX = "convex"
    NOT_CERTIFIED = "not_certified"


@dataclass(frozen=True)
class SurrogateParams:
    gamma_m: float
    anchor: np.ndarray
    a: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.gamma_m) and self.gamma_m >= 0):
            raise ValueError(f"gamma_m must be nonnegative, got {self.gamma_m!r}")
        if not (np.isfinite(self.a) and self.a >= 0):
            raise ValueError(f"a must be nonnegative, got {self.a!r}")
        anchor = np.array(self.anchor, dtype=float)
        if anchor.ndim != 1 or not np.all(np.isfinite(anchor)):
            raise ValueError("anchor must be a finite vector")
        anchor.setflags(write=False)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "gamma_m", float(self.gamma_m))
        object.__setattr__(self, "a", float(self.a))


@dataclass(frozen=True)
class ConvexityCertificate:
    min_eigenvalue: float
    margin: float
    verdict: Verdict
    tol_psd: float

    @property
    def certified(self):
        return self.verdict is not Verdict.NOT_CERTIFIED

    def to_dict(self):
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "margin": self.margin,
            "verdict": self.verdict.value,
        }


def psd_tolerance(max_eig):
    return 1e-10 * max(1.0, float(max_eig))


def _gram_extremes(A):
    eigs = gram_eigh(A)[0]
    return float(eigs[0]), float(eigs[-1])


def _certificate(min_eig, max_eig, margin):
    tol = psd_tolerance(max_eig)
    if margin > tol:
        verdict = Verdict.STRICTLY_CONVEX
    elif margin >= -tol:
        verdict = Verdict.CONVEX
    else:
        verdict = Verdict.NOT_CERTIFIED
    return ConvexityCertificate(min_eig, float(margin), verdict, tol)


def _check_positive(**kw):
    for name, val in kw.items():
        if not (np.isfinite(val) and val > 0):
            raise ValueError(f"{name} must be positive, got {val!r}")


def certify_objective_convexity(A, lam, alpha):
    """Check ``A^T A - lam alpha I >= 0``."""
    _check_positive(lam=lam, alpha=alpha)
    lo, hi = _gram_extremes(A)
    return _certificate(lo, hi, lo - lam * alpha)


def certify_surrogate_convexity(A, lam, alpha, gamma_m):
    """Check ``A^T A + lam (2 gamma_m - alpha) I >= 0``."""
    _check_positive(lam=lam, alpha=alpha)
    if gamma_m < 0:
        raise ValueError("gamma_m must be nonnegative")
    lo, hi = _gram_extremes(A)
    return _certificate(lo, hi, lo + lam * (2.0 * gamma_m - alpha))


def certify_strong_convexity(A, lam, alpha, gamma_m, a):
    """Check ``0.5 A^T A + lam (gamma_m - alpha/2) I >= a I``.

    This quadratic form bounds half the Hessian of the smooth part, so a
    passing margin gives strong convexity with modulus ``2a`` in the
    ``f - (mu/2)||.||^2 convex`` sense, and in particular the gap inequality
    ``a ||x - x*||^2 <= F^M(x) - F^M(x*)``.
    """
    _check_positive(lam=lam, alpha=alpha)
    if gamma_m < 0 or a < 0:
        raise ValueError("gamma_m and a must be nonnegative")
    lo, hi = _gram_extremes(A)
    margin = 0.5 * lo + lam * (gamma_m - 0.5 * alpha) - a
    return _certificate(lo, hi, margin)


def minimal_gamma(A, lam, alpha, a):
    """Smallest ``gamma_m >= 0`` whose strong-convexity margin is nonnegative."""
    _check_positive(lam=lam, alpha=alpha)
    if a < 0:
        raise ValueError("a must be nonnegative")
    lo, _ = _gram_extremes(A)
    return max(0.0, (a - 0.5 * lo) / lam + 0.5 * alpha)


def surrogate_certificate(problem: ProblemInstance, gamma_m):
    """Surrogate certificate from the instance's cached spectrum.

    Unlike :func:`certify_surrogate_convexity` this accepts ``lam = 0``.
    """
    eigs = problem.gram_eigenvalues
    lo, hi = float(eigs[0]), float(eigs[-1])
    return _certificate(lo, hi, lo + problem.lam * (2.0 * gamma_m - problem.alpha))


def _anchor(problem, params):
    return as_vector(params.anchor, problem.N, "anchor")


def minorizer_envelope(problem: ProblemInstance, params: SurrogateParams, x):
    x = as_vector(x, problem.N)
    d = x - _anchor(problem, params)
    return moreau_envelope(problem.base, problem.alpha, x) - params.gamma_m * float(d @ d)


def majorizer_value(problem: ProblemInstance, params: SurrogateParams, x):
    x = as_vector(x, problem.N)
    r = problem.y - problem.A @ x
    return 0.5 * float(r @ r) + problem.lam * (
        float(np.abs(x).sum()) - minorizer_envelope(problem, params, x)
    )


def minorizer_objective_value(problem: ProblemInstance, gamma_M, w, x):
    """``F(x) - lam gamma_M ||x - w||^2``: the mirror-image local minorizer."""
    _check_positive(gamma_M=gamma_M)
    x = as_vector(x, problem.N)
    d = x - as_vector(w, problem.N, "w")
    return evaluate_objective(problem, x).total - problem.lam * gamma_M * float(d @ d)


def majorizer_smooth_gradient(problem: ProblemInstance, params: SurrogateParams, x):
    """Gradient of ``F^M(., w) - lam ||.||_1``."""
    x = as_vector(x, problem.N)
    env_grad = moreau_gradient(problem.base, problem.alpha, x)
    return (
        residual_gradient(problem, x)
        - problem.lam * env_grad
        + 2.0 * problem.lam * params.gamma_m * (x - _anchor(problem, params))
    )


def majorizer_directional_derivative(problem: ProblemInstance, params: SurrogateParams, x, d):
    """Exact one-sided derivative of ``F^M(., w)`` at ``x`` along ``d``."""
    x = as_vector(x, problem.N)
    d = as_vector(d, problem.N, "d")
    smooth = float(majorizer_smooth_gradient(problem, params, x) @ d)
    return smooth + problem.lam * l1_directional(x, d)
