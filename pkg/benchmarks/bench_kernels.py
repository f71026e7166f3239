"""Numba vs numpy timings for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 4 16 64]

Both variants are called directly, so the env flag does not matter here.
The first numba call per signature is excluded (JIT warm-up).
"""
import argparse
import time

import numpy as np

from mmgmc import kernels


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def _inner_case(rng, n):
    A = rng.normal(size=(n + 2, n)) / np.sqrt(n + 2)
    y = rng.normal(size=n + 2)
    lam, alpha = 0.5, 2.0
    sig = np.linalg.eigvalsh(A.T @ A)
    gamma = max(0.0, (alpha - sig[0] / lam) / 2) + 0.05
    L = sig[-1] + lam * alpha + 2 * lam * gamma
    w = rng.normal(size=n)
    return (A, y, lam, alpha, np.ones(n), gamma, w, 0.3, L, 1e-9, 10000, 500, 1e-15)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 16, 64])
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<22}{'N':>5}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>9}")
    for n in args.sizes:
        c = rng.normal(size=n)
        x = c + 3 * rng.normal(size=n)
        prox_args = (0.7, c, 0.5, x, 500, 1e-15)
        batch = 200

        def prox_np():
            for _ in range(batch):
                kernels.multiplier_l1_ball_np(*prox_args)

        def prox_nb():
            for _ in range(batch):
                kernels.multiplier_l1_ball_nb(*prox_args)

        case = _inner_case(rng, n)
        kernels.multiplier_l1_ball_nb(*prox_args)
        kernels.inner_scaled_l1_nb(*case)
        rows = [
            (f"prox x{batch}", prox_np, prox_nb),
            ("inner solve", lambda: kernels.inner_scaled_l1_np(*case),
             lambda: kernels.inner_scaled_l1_nb(*case)),
        ]
        for name, f_np, f_nb in rows:
            t_np, t_nb = _best(f_np, args.repeat), _best(f_nb, args.repeat)
            print(f"{name:<22}{n:>5}{1e3 * t_np:>13.3f}{1e3 * t_nb:>13.3f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
