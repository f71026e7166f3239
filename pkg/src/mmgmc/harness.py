"""Experiment plumbing behind the command line: config parsing, CSV I/O,
synthetic instances, experiment runs and the verification suite."""
from __future__ import annotations

import copy
import csv
import json
import os
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import oracle
from .core import ProblemInstance, directional_derivative, evaluate_objective
from .inner import InnerConfig, minimize_majorizer_in_ball
from .mm import (
    CheckResult,
    MMConfig,
    check_trace_invariants,
    resolve_gamma,
    run_mm,
    stationarity_report,
)
from .moreau import make_base
from .surrogate import (
    NotCertifiedError,
    SurrogateParams,
    certify_objective_convexity,
    majorizer_directional_derivative,
    majorizer_value,
    surrogate_certificate,
)

OUTPUT_ENV = "MMGMC_OUTPUT_DIR"
DEFAULT_CONFIG = Path(__file__).with_name("data") / "default_config.json"
GRID_MAX_N = 3


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ CSV


def read_csv_matrix(path):
    """Header-free, comma-separated, ``.`` decimal. Errors name file and line."""
    path = Path(path)
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: cannot parse number ({exc})") from None
            if not all(np.isfinite(vals)):
                raise ConfigError(f"{path}:{lineno}: non-finite value")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ConfigError(
                    f"{path}:{lineno}: ragged row with {len(vals)} columns, expected {width}"
                )
            rows.append(vals)
    if not rows:
        raise ConfigError(f"{path}: empty file")
    return np.array(rows, dtype=float)


def read_csv_vector(path):
    """A vector stored as one column or as one row."""
    arr = read_csv_matrix(path)
    if arr.shape[0] != 1 and arr.shape[1] != 1:
        raise ConfigError(f"{path}: expected a single row or column, got shape {arr.shape}")
    return arr.ravel()


def write_csv(path, arr):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    np.savetxt(path, arr, fmt="%.17g", delimiter=",")


# ------------------------------------------------------------------ synthetic


@dataclass(frozen=True)
class SyntheticSpec:
    M: int
    N: int
    sparsity: int = 0
    noise_sigma: float = 0.0
    matrix_kind: str = "gaussian"
    frame_constant: float = 1.0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ConfigError("M and N must be positive")
        if not 0 <= self.sparsity <= self.N:
            raise ConfigError("sparsity must lie in [0, N]")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be nonnegative")
        if self.matrix_kind not in ("gaussian", "tight_frame"):
            raise ConfigError(f"unknown matrix_kind {self.matrix_kind!r}")
        if self.matrix_kind == "tight_frame":
            if not self.frame_constant > 0:
                raise ConfigError("frame_constant must be positive")
            if self.M < self.N:
                raise ConfigError("tight_frame needs M >= N")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synthetic fields: {sorted(unknown)}")
        return cls(**d)


def generate_synthetic(spec: SyntheticSpec, seed):
    """Return ``(A, y, x_true)`` drawn from ``seed``.

    ``tight_frame`` scales a matrix with orthonormal columns so that
    ``A^T A = C I``.
    """
    rng = np.random.default_rng(seed)
    if spec.matrix_kind == "gaussian":
        A = rng.standard_normal((spec.M, spec.N)) / np.sqrt(spec.M)
    else:
        Q, R = np.linalg.qr(rng.standard_normal((spec.M, spec.N)))
        Q = Q * np.sign(np.diag(R))
        A = np.sqrt(spec.frame_constant) * Q
    x_true = np.zeros(spec.N)
    support = rng.choice(spec.N, size=spec.sparsity, replace=False)
    signs = rng.choice([-1.0, 1.0], size=spec.sparsity)
    x_true[np.sort(support)] = signs * rng.uniform(1.0, 2.0, size=spec.sparsity)
    y = A @ x_true + spec.noise_sigma * rng.standard_normal(spec.M)
    return A, y, x_true


# ------------------------------------------------------------------ config


@dataclass
class ExperimentConfig:
    problem: dict
    lam: float
    alpha: float
    mm: MMConfig
    inner: InnerConfig = field(default_factory=InnerConfig)
    base: dict = field(default_factory=lambda: {"name": "l1", "params": {}})
    seed: int = 0
    output_dir: str = "mmgmc_out"
    x0: Optional[object] = None
    write_x: bool = True
    base_dir: Path = field(default_factory=Path.cwd)

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_path(self):
        # relative output paths are taken from the working directory
        env = os.environ.get(OUTPUT_ENV)
        return Path(env) if env else Path(self.output_dir)


def _set_dotted(d, key, value):
    parts = key.split(".")
    node = d
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {key}: {part} is not a section")
    node[parts[-1]] = value


def _parse_override(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def config_from_dict(raw, base_dir=None, overrides=None):
    """Build an :class:`ExperimentConfig` from the JSON document layout.

    ``overrides`` maps dotted paths (``"mm.epsilon"``) to values; string
    values are JSON-decoded when possible.
    """
    raw = copy.deepcopy(raw)
    for key, val in (overrides or {}).items():
        _set_dotted(raw, key, _parse_override(val) if isinstance(val, str) else val)
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    try:
        mm = MMConfig(**raw.pop("mm"))
        inner = InnerConfig(**raw.pop("inner", {}))
        lam = float(raw.pop("lambda"))
        alpha = float(raw.pop("alpha"))
        problem = raw.pop("problem")
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    base = raw.pop("base", {"name": "l1"})
    if isinstance(base, str):
        base = {"name": base}
    base.setdefault("params", {})
    cfg = ExperimentConfig(
        problem=problem, lam=lam, alpha=alpha, mm=mm, inner=inner, base=base,
        seed=int(raw.pop("seed", 0)), output_dir=raw.pop("output_dir", "mmgmc_out"),
        x0=raw.pop("x0", None), write_x=bool(raw.pop("write_x", True)), base_dir=base_dir,
    )
    if raw:
        raise ConfigError(f"unknown config fields: {sorted(raw)}")
    if not isinstance(problem, dict) or not ({"A", "y"} <= set(problem) or "synthetic" in problem):
        raise ConfigError("problem needs either A and y file paths or a synthetic spec")
    if "synthetic" not in problem:
        for key in ("A", "y"):
            if not cfg.resolve(problem[key]).is_file():
                raise ConfigError(f"problem.{key}: file not found: {cfg.resolve(problem[key])}")
    if lam < 0 or not alpha > 0:
        raise ConfigError("need lambda >= 0 and alpha > 0")
    try:
        make_base(base["name"], **base["params"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid base function: {exc}") from None
    return cfg


def load_config(path, overrides=None):
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return config_from_dict(raw, base_dir=path.parent, overrides=overrides)


def load_problem(config: ExperimentConfig):
    """Build the instance; returns ``(problem, x_true or None)``."""
    base = make_base(config.base["name"], **config.base["params"])
    src = config.problem
    if "synthetic" in src:
        spec = SyntheticSpec.from_dict(src["synthetic"])
        A, y, x_true = generate_synthetic(spec, config.seed)
    else:
        A = read_csv_matrix(config.resolve(src["A"]))
        y = read_csv_vector(config.resolve(src["y"]))
        x_true = None
        if y.shape[0] != A.shape[0]:
            raise ConfigError(f"y has length {y.shape[0]} but A has {A.shape[0]} rows")
    return ProblemInstance(A, y, config.lam, config.alpha, base), x_true


def default_x0(n, epsilon, seed):
    """Seeded random direction scaled to norm ``4 epsilon``."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    return 4.0 * epsilon * u / np.linalg.norm(u)


def initial_point(config: ExperimentConfig, n):
    if config.x0 is None:
        return default_x0(n, config.mm.epsilon, config.seed)
    if isinstance(config.x0, str):
        x0 = read_csv_vector(config.resolve(config.x0))
    else:
        x0 = np.asarray(config.x0, dtype=float)
    if x0.shape != (n,):
        raise ConfigError(f"x0 must have length {n}")
    return x0


# ------------------------------------------------------------------ runs


@dataclass
class ExperimentResult:
    summary: dict
    trace: object
    x_final: np.ndarray
    problem: ProblemInstance


def _lasso_agreement(problem, x_final, F_final):
    xl = oracle.ista_lasso(problem.A, problem.y, problem.lam)
    F_ista = oracle.lasso_objective(problem.A, problem.y, problem.lam, xl)
    tol = 1e-8 * max(1.0, np.abs(xl).max(initial=0.0))
    return {
        "F_ista": F_ista,
        "F_gap": F_final - F_ista,
        "support_match": bool(np.array_equal(np.abs(xl) > tol, np.abs(x_final) > tol)),
    }


def solve(config: ExperimentConfig):
    """Certificates, MM run and stationarity report; nothing is written."""
    t0 = time.perf_counter()
    problem, _ = load_problem(config)
    x0 = initial_point(config, problem.N)
    gamma_m, a = resolve_gamma(problem, config.mm)
    obj_cert = (certify_objective_convexity(problem.A, problem.lam, problem.alpha)
                if problem.lam > 0 else None)
    sur_cert = surrogate_certificate(problem, gamma_m)
    x, trace = run_mm(problem, config.mm, x0, config.inner)
    stat = stationarity_report(problem, x, config.mm.stationarity_directions, config.seed)
    trace.stationarity = stat
    inv = check_trace_invariants(trace, config.mm.epsilon)
    F_final = evaluate_objective(problem, x).total
    summary = {
        "certificates": {
            "objective": obj_cert.to_dict() if obj_cert else None,
            "surrogate": sur_cert.to_dict(),
        },
        "gamma_m": gamma_m,
        "a": a,
        "lam_gamma_m": problem.lam * gamma_m,
        "x0": [float(v) for v in x0],
        "F0": trace.F0,
        "F_final": F_final,
        "iterations": len(trace.records),
        "min_directional_derivative": stat.min_dd,
        "stationary": stat.stationary,
        "trace_invariants": {c.name: c.passed for c in inv.checks},
    }
    if problem.base.name == "zero" and problem.lam > 0:
        summary["lasso_agreement"] = _lasso_agreement(problem, x, F_final)
    summary["wall_time"] = time.perf_counter() - t0
    return ExperimentResult(summary, trace, x, problem)


def summary_json(summary):
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def run_experiment(config: ExperimentConfig, output_dir=None):
    """:func:`solve`, then write ``trace.jsonl``, ``summary.json`` and
    optionally ``x_final.csv`` into ``output_dir`` (default
    ``config.out_path``)."""
    result = solve(config)
    out = Path(output_dir) if output_dir is not None else config.out_path
    out.mkdir(parents=True, exist_ok=True)
    result.trace.write_jsonl(out / "trace.jsonl")
    (out / "summary.json").write_text(summary_json(result.summary), encoding="utf-8")
    if config.write_x:
        write_csv(out / "x_final.csv", result.x_final)
    return result


# ------------------------------------------------------------------ verify


def _sample_scale(problem, x0):
    return max(1.0, float(np.linalg.norm(x0)), float(np.abs(problem.y).max(initial=0.0)))


def _check_majorization(problem, gamma_m, x0, rng, n=200):
    s = _sample_scale(problem, x0)
    worst, tang = np.inf, 0.0
    for _ in range(n):
        w = rng.normal(scale=s, size=problem.N)
        x = w + rng.normal(scale=s, size=problem.N)
        p = SurrogateParams(gamma_m, w)
        worst = min(worst, majorizer_value(problem, p, x) - evaluate_objective(problem, x).total)
        tang = max(tang, abs(majorizer_value(problem, p, w) - evaluate_objective(problem, w).total))
    ok = worst >= -1e-10 and tang <= 1e-12
    return CheckResult("majorization", ok, detail=f"min gap {worst:.2e}, tangency {tang:.1e}")


def _check_tangency(problem, gamma_m, x0, rng):
    s = _sample_scale(problem, x0)
    w = rng.normal(scale=s, size=problem.N)
    p = SurrogateParams(gamma_m, w)
    eye = np.eye(problem.N)
    dirs = np.vstack([eye, -eye, rng.normal(size=(50, problem.N))])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    exact_gap = fd_gap = 0.0
    h = 1e-7
    for d in dirs:
        dm = majorizer_directional_derivative(problem, p, w, d)
        df = directional_derivative(problem, w, d)
        fd = oracle.finite_difference_directional(lambda z: majorizer_value(problem, p, z), w, d, h)
        exact_gap = max(exact_gap, abs(dm - df))
        fd_gap = max(fd_gap, abs(fd - dm) / (1.0 + abs(dm)))
    ok = exact_gap <= 2e-5 and fd_gap <= 1e-4
    return CheckResult("tangency", ok, detail=f"exact {exact_gap:.1e}, finite-diff {fd_gap:.1e}")


def midpoint_violation(f, u, v):
    """``f((u+v)/2) - (f(u)+f(v))/2``; positive means midpoint convexity fails."""
    return f(0.5 * (u + v)) - 0.5 * (f(u) + f(v))


def find_convexity_witness(problem, params, rng, attempts=50):
    """Search for a midpoint-convexity violation of ``F^M(., w)`` along the
    bottom eigenvector of ``A^T A``, centred where the envelope is locally
    quadratic and no coordinate changes sign. Returns the violation or None."""
    v = problem.gram_min_eigvec
    vmax = np.abs(v).max()
    scale = problem.base.scale_vector(problem.N)
    kink = (np.ones(problem.N) if scale is None else scale) / problem.alpha
    f = lambda z: majorizer_value(problem, params, z)
    for _ in range(attempts):
        signs = rng.choice([-1.0, 1.0], size=problem.N)
        c = signs * kink * rng.uniform(0.4, 0.6, size=problem.N)
        t = rng.uniform(0.1, 0.3) * kink.min() / vmax
        viol = midpoint_violation(f, c + t * v, c - t * v)
        if viol > 1e-12 * max(1.0, abs(f(c))):
            return viol
    return None


def _check_certificate(problem, gamma_m, x0, rng, n=200):
    cert = surrogate_certificate(problem, gamma_m)
    params = SurrogateParams(gamma_m, x0)
    if cert.certified:
        s = _sample_scale(problem, x0)
        f = lambda z: majorizer_value(problem, params, z)
        worst = max(
            midpoint_violation(f, rng.normal(scale=s, size=problem.N),
                               rng.normal(scale=s, size=problem.N))
            for _ in range(n)
        )
        return CheckResult("certificate_soundness", worst <= 1e-8,
                           detail=f"{cert.verdict.value}, worst violation {worst:.1e}")
    viol = find_convexity_witness(problem, params, rng)
    return CheckResult("certificate_soundness", viol is not None,
                       detail=f"not_certified, witness {viol}")


def _check_refusal(problem, config, x0):
    try:
        run_mm(problem, config.mm, x0, config.inner)
    except NotCertifiedError as exc:
        return CheckResult("refusal", True, detail=str(exc).split(";")[0])
    return CheckResult("refusal", False, detail="uncertified surrogate was not refused")


def _grid_points(n):
    return {1: 20001, 2: 201, 3: 101}[n]


def _check_inner_vs_grid(problem, gamma_m, x0, config):
    radius = config.mm.epsilon
    params = SurrogateParams(gamma_m, x0)
    res = minimize_majorizer_in_ball(problem, params, radius, config.inner)
    f = lambda z: (majorizer_value(problem, params, z)
                   if np.linalg.norm(z - x0) <= radius else np.inf)
    _, gmin = oracle.grid_minimize(f, oracle.ball_grid(x0, radius, _grid_points(problem.N)))
    gap = res.objective - gmin
    return CheckResult("inner_vs_grid", gap <= 1e-4, detail=f"F^M - grid_min = {gap:.2e}")


def verify(config: ExperimentConfig, grid=True):
    """Run the cross-check suite on the configured instance.

    Grid comparisons need ``N <= 3``; pass ``grid=False`` to skip them for
    larger instances.
    """
    problem, _ = load_problem(config)
    if grid and problem.N > GRID_MAX_N:
        raise ConfigError(
            f"grid checks need N <= {GRID_MAX_N} (got N = {problem.N}); an exhaustive "
            f"lattice grows as points^N. Re-run without grid checks."
        )
    x0 = initial_point(config, problem.N)
    rng = np.random.default_rng(config.seed)
    gamma_m, _ = resolve_gamma(problem, config.mm)
    cert = surrogate_certificate(problem, gamma_m)
    checks = [
        _check_majorization(problem, gamma_m, x0, rng),
        _check_tangency(problem, gamma_m, x0, rng),
        _check_certificate(problem, gamma_m, x0, rng),
    ]
    if not cert.certified:
        checks.append(_check_refusal(problem, config, x0))
        return checks
    if grid:
        checks.append(_check_inner_vs_grid(problem, gamma_m, x0, config))
    _, trace = run_mm(problem, config.mm, x0, config.inner)
    report = check_trace_invariants(trace, config.mm.epsilon)
    for c in report.checks:
        checks.append(replace(c, name=f"trace_{c.name}"))
    return checks


def format_checks(checks):
    width = max(len(c.name) for c in checks)
    lines = []
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        extra = f"  {c.detail}" if c.detail else ""
        if c.first_violation is not None:
            extra += f"  (first violation at k={c.first_violation})"
        lines.append(f"{c.name:<{width}}  {status}{extra}")
    return "\n".join(lines)


def sweep_configs(directory):
    return sorted(Path(directory).glob("*.json"))


def _sweep_one(args):
    path, out_root = args
    try:
        run_experiment(load_config(path), Path(out_root) / path.stem)
        return path.name, None
    except Exception as exc:  # reported per config, sweep keeps going
        return path.name, f"{type(exc).__name__}: {exc}"


def sweep(directory, out_root, workers=1):
    """Run every ``*.json`` config in ``directory``, each into
    ``out_root/<stem>``. Returns ``[(name, error or None), ...]``."""
    jobs = [(p, out_root) for p in sweep_configs(directory)]
    if workers <= 1:
        return [_sweep_one(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))

