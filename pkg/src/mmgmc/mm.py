"""Shrinking-ball majorization-minimization.

Iteration ``k`` minimizes ``F^M(., x_k)`` over the ball of radius
``epsilon / 2^k`` around ``x_k``. Steps are summable (total travel below
``2 epsilon``), so the iterates are Cauchy, and starting with
``||x_0|| > 2 epsilon`` keeps them away from the origin.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import ProblemInstance, as_vector, directional_derivative, evaluate_objective
from .inner import InnerConfig, minimize_majorizer_in_ball
from .surrogate import NotCertifiedError, SurrogateParams, minimal_gamma, surrogate_certificate

logger = logging.getLogger(__name__)

GAMMA_MODES = ("manual", "auto")


class InitializationError(ValueError):
    """``x0`` violates the start rule ``||x0||_2 > 2 epsilon``."""


@dataclass(frozen=True)
class MMConfig:
    """Outer-loop settings.

    ``gamma_mode="manual"`` uses ``gamma`` as ``gamma_m`` directly;
    ``"auto"`` reads ``gamma`` as the strong-convexity modulus ``a`` and sets
    ``gamma_m = minimal_gamma(A, lam, alpha, a)``. ``radius_floor`` defaults
    to ``1e-8 * epsilon``.
    """

    epsilon: float
    max_outer_iter: int = 200
    radius_floor: Optional[float] = None
    gamma_mode: str = "auto"
    gamma: float = 0.0
    stationarity_directions: int = 100

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        if self.radius_floor is not None and not self.radius_floor > 0:
            raise ValueError("radius_floor must be positive")
        if int(self.max_outer_iter) < 1:
            raise ValueError("max_outer_iter must be at least 1")
        if self.gamma_mode not in GAMMA_MODES:
            raise ValueError(f"gamma_mode must be one of {GAMMA_MODES}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError("gamma must be nonnegative")
        if int(self.stationarity_directions) < 1:
            raise ValueError("stationarity_directions must be at least 1")

    @property
    def floor(self):
        return 1e-8 * self.epsilon if self.radius_floor is None else float(self.radius_floor)


@dataclass
class IterationRecord:
    """Outcome of outer iteration ``k``: ``x`` is ``x^(k+1)``, found inside the
    ball of radius ``radius = epsilon / 2^k`` around ``x^(k)``."""

    k: int
    radius: float
    x: np.ndarray
    F: float
    inner_iters: int
    inner_converged: bool
    inner_active: bool = False

    def to_json(self):
        return {
            "k": self.k,
            "radius": self.radius,
            "x": [float(v) for v in self.x],
            "F": self.F,
            "inner_iters": self.inner_iters,
            "inner_converged": self.inner_converged,
        }


@dataclass
class StationarityReport:
    min_dd: float
    direction: np.ndarray
    n_directions: int
    seed: int
    tol: float
    stationary: bool
    n_probed: int = 0

    def to_json(self):
        return {"min_dd": self.min_dd, "n_directions": self.n_directions, "seed": self.seed}


@dataclass
class IterationTrace:
    x0: np.ndarray
    F0: float
    records: list = field(default_factory=list)
    gamma_m: float = 0.0
    a: Optional[float] = None
    lam_gamma_m: float = 0.0
    stationarity: Optional[StationarityReport] = None

    @property
    def points(self):
        """``x^(0), x^(1), ...`` as a 2-D array."""
        return np.vstack([self.x0] + [r.x for r in self.records])

    @property
    def values(self):
        return np.array([self.F0] + [r.F for r in self.records])

    def jsonl_lines(self):
        lines = [json.dumps(r.to_json()) for r in self.records]
        if self.stationarity is not None:
            lines.append(json.dumps({"stationarity": self.stationarity.to_json()}))
        return lines

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.jsonl_lines():
                fh.write(line + "\n")


def resolve_gamma(problem: ProblemInstance, config: MMConfig):
    """Return ``(gamma_m, a)`` for the configured mode; ``a`` is None in manual mode."""
    if config.gamma_mode == "manual":
        return float(config.gamma), None
    if problem.lam == 0:
        # no penalty: the majorizer equals F for any gamma_m
        return 0.0, float(config.gamma)
    return minimal_gamma(problem.A, problem.lam, problem.alpha, config.gamma), float(config.gamma)


def run_mm(problem: ProblemInstance, config: MMConfig, x0,
           inner: InnerConfig = InnerConfig()):
    """Run the shrinking-ball MM iteration from ``x0``.

    Stops after the iteration whose successor radius would fall below
    ``config.floor``, or after ``max_outer_iter`` iterations. Returns
    ``(x_final, trace)``; the trace has no stationarity report yet.
    """
    x0 = as_vector(x0, problem.N, "x0").copy()
    eps = float(config.epsilon)
    if not np.linalg.norm(x0) > 2.0 * eps:
        raise InitializationError(
            f"initialization rule violated: need ||x0||_2 > 2*epsilon "
            f"({np.linalg.norm(x0):.6g} <= {2 * eps:.6g})"
        )
    gamma_m, a = resolve_gamma(problem, config)
    cert = surrogate_certificate(problem, gamma_m)
    if not cert.certified:
        raise NotCertifiedError(
            f"gamma_m={gamma_m:g} does not certify surrogate convexity (margin "
            f"{cert.margin:.3e}); raise gamma_m to at least "
            f"{max(0.0, (problem.alpha - problem.gram_eigenvalues[0] / problem.lam) / 2):.6g} "
            f"or use gamma_mode='auto'"
        )
    trace = IterationTrace(x0=x0, F0=evaluate_objective(problem, x0).total,
                           gamma_m=gamma_m, a=a, lam_gamma_m=problem.lam * gamma_m)
    x = x0
    floor = config.floor
    for k in range(int(config.max_outer_iter)):
        radius = eps / 2.0**k
        params = SurrogateParams(gamma_m=gamma_m, anchor=x, a=a or 0.0)
        res = minimize_majorizer_in_ball(problem, params, radius, inner)
        x = res.x_star
        F = evaluate_objective(problem, x).total
        trace.records.append(IterationRecord(k, radius, x, F, res.iterations,
                                             res.converged, res.active_constraint))
        logger.debug("k=%d radius=%.3e F=%.12g inner=%d", k, radius, F, res.iterations)
        if radius / 2.0 < floor:
            break
    return x, trace


@dataclass
class CheckResult:
    name: str
    passed: bool
    first_violation: Optional[int] = None
    detail: str = ""


@dataclass
class TraceReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def by_name(self, name):
        return next(c for c in self.checks if c.name == name)


def check_trace_invariants(trace: IterationTrace, epsilon, x0_norm=None,
                           descent_tol=1e-10, step_tol=1e-9):
    """Post-hoc checks of a trace.

    * ``descent``: ``F(x^(k+1)) <= F(x^(k))``, relative tolerance ``descent_tol``.
    * ``step_bound``: ``||x^(k+1) - x^(k)|| <= epsilon / 2^k``.
    * ``cauchy``: ``||x^(m) - x^(k)|| <= 2 epsilon / 2^k`` for all ``k < m``.
    * ``origin_avoidance``: ``||x^(k)|| >= ||x^(0)|| - 2 epsilon``.

    Violation indices refer to the outer iteration ``k``.
    """
    pts = trace.points
    F = trace.values
    if x0_norm is None:
        x0_norm = float(np.linalg.norm(pts[0]))
    checks = []

    bad = None
    for k in range(len(F) - 1):
        if F[k + 1] > F[k] + descent_tol * max(1.0, abs(F[k])):
            bad = k
            break
    checks.append(CheckResult("descent", bad is None, bad))

    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    bounds = epsilon / 2.0 ** np.arange(len(steps))
    viol = np.nonzero(steps > bounds + step_tol)[0]
    bad = int(viol[0]) if viol.size else None
    checks.append(CheckResult("step_bound", bad is None, bad,
                              f"max step/bound {np.max(steps / bounds, initial=0):.3g}"))

    bad = None
    for k in range(len(pts) - 1):
        tail = np.linalg.norm(pts[k + 1:] - pts[k], axis=1)
        if np.any(tail > 2.0 * epsilon / 2.0**k + step_tol):
            bad = k
            break
    checks.append(CheckResult("cauchy", bad is None, bad))

    norms = np.linalg.norm(pts, axis=1)
    viol = np.nonzero(norms < x0_norm - 2.0 * epsilon - step_tol)[0]
    bad = int(viol[0]) if viol.size else None
    checks.append(CheckResult("origin_avoidance", bad is None, bad))
    return TraceReport(checks)


def probe_directions(n, n_random, seed):
    """The ``2n`` signed coordinate directions followed by ``n_random`` seeded
    uniform unit vectors."""
    eye = np.eye(n)
    rng = np.random.default_rng(seed)
    rand = rng.normal(size=(int(n_random), n))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([eye, -eye, rand])


def stationarity_report(problem: ProblemInstance, x, n_directions=100, seed=0, tol=None):
    """Smallest one-sided directional derivative of ``F`` at ``x`` over probe
    directions; ``x`` is flagged stationary when it is ``>= -tol`` with
    default ``tol = 1e-6 (1 + |F(x)|)``."""
    x = as_vector(x, problem.N)
    dirs = probe_directions(problem.N, n_directions, seed)
    vals = np.array([directional_derivative(problem, x, d) for d in dirs])
    i = int(np.argmin(vals))
    if tol is None:
        tol = 1e-6 * (1.0 + abs(evaluate_objective(problem, x).total))
    return StationarityReport(float(vals[i]), dirs[i], int(n_directions), int(seed),
                              float(tol), bool(vals[i] >= -tol), len(dirs))
