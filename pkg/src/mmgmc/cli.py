"""``mmgmc`` command line.

    mmgmc solve  [config.json] [--mm.epsilon 0.3 ...]
    mmgmc verify [config.json] [--no-grid] [--section.field value ...]
    mmgmc generate spec.json --seed S [--out DIR]
    mmgmc sweep DIR [--workers N] [--out DIR]

Any ``--section.field value`` flag overrides the matching config entry.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import harness


def _split_overrides(extra):
    """Return ``(config_path or None, {dotted.key: raw value})``."""
    overrides = {}
    config = None
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            if config is not None:
                raise SystemExit(f"unrecognized argument: {tok}")
            config = tok
            continue
        if len(tok) < 3:
            raise SystemExit(f"unrecognized argument: {tok}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            try:
                val = next(it)
            except StopIteration:
                raise SystemExit(f"missing value for {tok}") from None
        overrides[key] = val
    return config, overrides


def _load(args, extra):
    config, overrides = _split_overrides(extra)
    path = Path(config) if config else harness.DEFAULT_CONFIG
    return harness.load_config(path, overrides)


def cmd_solve(args, extra):
    cfg = _load(args, extra)
    result = harness.run_experiment(cfg)
    s = result.summary
    print(f"F: {s['F0']:.10g} -> {s['F_final']:.10g} in {s['iterations']} iterations")
    print(f"gamma_m = {s['gamma_m']:.6g}, min directional derivative = "
          f"{s['min_directional_derivative']:.3e}")
    print(f"outputs written to {cfg.out_path}")
    return 0


def cmd_verify(args, extra):
    cfg = _load(args, extra)
    checks = harness.verify(cfg, grid=not args.no_grid)
    print(harness.format_checks(checks))
    ok = all(c.passed for c in checks)
    print("all checks passed" if ok else "verification FAILED")
    return 0 if ok else 1


def cmd_generate(args, extra):
    if extra:
        raise SystemExit(f"unrecognized arguments: {' '.join(extra)}")
    with open(args.spec, encoding="utf-8") as fh:
        spec = harness.SyntheticSpec.from_dict(json.load(fh))
    A, y, x_true = harness.generate_synthetic(spec, args.seed)
    out = Path(args.out or os.environ.get(harness.OUTPUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    for name, arr in (("A", A), ("y", y), ("x_true", x_true)):
        harness.write_csv(out / f"{name}.csv", arr)
    print(f"wrote A.csv ({spec.M}x{spec.N}), y.csv, x_true.csv to {out}")
    return 0


def cmd_sweep(args, extra):
    if extra:
        raise SystemExit(f"unrecognized arguments: {' '.join(extra)}")
    out = Path(args.out or os.environ.get(harness.OUTPUT_ENV) or "sweep_out")
    results = harness.sweep(args.directory, out, workers=args.workers)
    if not results:
        print(f"no *.json configs in {args.directory}")
        return 1
    failed = 0
    for name, err in results:
        print(f"{name}: {'ok' if err is None else 'FAILED ' + err}")
        failed += err is not None
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mmgmc", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    # the config path and --section.field overrides are parsed by hand
    p = sub.add_parser("solve", help="run one experiment [config.json]")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the oracle cross-check suite [config.json]")
    p.add_argument("--no-grid", action="store_true", help="skip grid checks (needed for N > 3)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a synthetic instance as CSV")
    p.add_argument("spec")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="run every config in a directory")
    p.add_argument("directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, extra)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
