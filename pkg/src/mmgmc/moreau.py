"""Prox oracles, the Moreau envelope and its gradient.

The envelope of a convex ``f`` with parameter ``alpha`` is

    f_alpha(x) = min_v f(v) + (alpha / 2) ||v - x||^2,

attained at ``v = prox_{f / alpha}(x)``. Prox functions here use the scale
convention ``prox(x, t) = argmin_v f(v) + ||v - x||^2 / (2 t)``, so the
envelope calls ``prox(x, 1 / alpha)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class AdmissibilityError(ValueError):
    """A base function failed the registration self-test."""


def _check_alpha(alpha):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")


def soft_threshold(x, t):
    """Coordinatewise ``sign(x) * max(|x| - t, 0)``; ``t`` may be a vector."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("soft-threshold level must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t_arr, 0.0)


@dataclass(frozen=True)
class ProxFunction:
    """A convex base function exposed through value and prox oracles.

    ``scale`` is set only for the scaled-l1 family ``sum_i s_i |v_i|`` (the l1
    norm and the zero function included); the solver uses it to pick the
    compiled inner loop. Custom functions leave it ``None``.
    """

    name: str
    value: Callable[[np.ndarray], float]
    prox: Callable[[np.ndarray, float], np.ndarray]
    params: dict = field(default_factory=dict)
    scale: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def scale_vector(self, n):
        """Per-coordinate weights broadcast to length ``n`` or ``None``."""
        if self.scale is None:
            return None
        return np.broadcast_to(np.asarray(self.scale, dtype=float), (n,)).copy()


def scaled_l1(scale=1.0, name=None):
    """``sum_i s_i |v_i|`` with ``0 <= s_i <= 1``."""
    s = np.asarray(scale, dtype=float)
    if s.ndim > 1 or np.any(~np.isfinite(s)) or np.any(s < 0) or np.any(s > 1):
        raise AdmissibilityError("scaled_l1 weights must lie in [0, 1]")
    s = s.copy()
    s.setflags(write=False)

    def value(v):
        return float(np.sum(s * np.abs(v)))

    def prox(x, t):
        return soft_threshold(x, t * s)

    if name is None:
        name = "scaled_l1"
    params = {"scale": s.tolist()} if name == "scaled_l1" else {}
    return ProxFunction(name=name, value=value, prox=prox, params=params, scale=s)


def l1():
    return scaled_l1(1.0, name="l1")


def zero():
    return scaled_l1(0.0, name="zero")


def self_test(f: ProxFunction, n=4, trials=200, seed=0):
    """Sampled admissibility checks for a base function.

    Checks ``f(0) = 0``, ``0 <= f <= ||.||_1``, midpoint convexity, prox
    nonexpansiveness and prox optimality against random perturbations. Raises
    :class:`AdmissibilityError` naming the first failing property.
    """
    rng = np.random.default_rng(seed)
    zero_vec = np.zeros(n)
    if abs(f.value(zero_vec)) > 1e-12:
        raise AdmissibilityError(f"{f.name}: f(0) != 0")
    for _ in range(trials):
        u = rng.normal(scale=2.0, size=n)
        v = rng.normal(scale=2.0, size=n)
        t = rng.uniform(0.05, 3.0)
        fu, fv = f.value(u), f.value(v)
        if fu < -1e-12:
            raise AdmissibilityError(f"{f.name}: negative value")
        if fu > np.abs(u).sum() + 1e-10:
            raise AdmissibilityError(f"{f.name}: exceeds the l1 norm")
        if f.value(0.5 * (u + v)) > 0.5 * (fu + fv) + 1e-10:
            raise AdmissibilityError(f"{f.name}: not midpoint convex")
        pu, pv = f.prox(u, t), f.prox(v, t)
        if np.linalg.norm(pu - pv) > np.linalg.norm(u - v) + 1e-10:
            raise AdmissibilityError(f"{f.name}: prox is expansive")
        best = f.value(pu) + (pu - u) @ (pu - u) / (2 * t)
        for q in pu + rng.normal(scale=0.1, size=(5, n)):
            if best > f.value(q) + (q - u) @ (q - u) / (2 * t) + 1e-10:
                raise AdmissibilityError(f"{f.name}: prox is not optimal")


_REGISTRY: dict[str, Callable[..., ProxFunction]] = {
    "l1": l1,
    "zero": zero,
    "scaled_l1": scaled_l1,
}


def register(name, factory, **test_params):
    """Add a base-function factory after it passes :func:`self_test`.

    ``test_params`` are forwarded to the factory for the self-test instance.
    """
    if name in _REGISTRY:
        raise ValueError(f"base function {name!r} already registered")
    self_test(factory(**test_params))
    _REGISTRY[name] = factory


def available():
    return sorted(_REGISTRY)


def make_base(name, **params) -> ProxFunction:
    """Build a registered base function by name, e.g. ``make_base("l1")``."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            f"unknown base function {name!r}; available: {', '.join(available())}"
        ) from None
    return factory(**params)


def moreau_envelope(f: ProxFunction, alpha, x):
    """Value of the Moreau envelope of ``f`` at ``x``, via the prox."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    p = f.prox(x, 1.0 / alpha)
    d = p - x
    return f.value(p) + 0.5 * alpha * float(d @ d)


def moreau_gradient(f: ProxFunction, alpha, x):
    """``alpha * (x - prox(x, 1/alpha))``; alpha-Lipschitz."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    return alpha * (x - f.prox(x, 1.0 / alpha))


def huber_closed_form(alpha, x):
    """Sum of ``alpha t^2 / 2`` for ``|t| <= 1/alpha`` and ``|t| - 1/(2 alpha)``
    otherwise; the envelope of the l1 norm."""
    _check_alpha(alpha)
    a = np.abs(np.asarray(x, dtype=float))
    return float(np.sum(np.where(a <= 1.0 / alpha, 0.5 * alpha * a * a, a - 0.5 / alpha)))
