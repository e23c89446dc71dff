"""Command-line interface: ``nsdelta solve | sweep | check``.

Exit codes: 0 on success, 1 for configuration errors, 2 when a solve fails
(or, for ``check``, when a preset misses its slope band).
"""
from __future__ import annotations

import argparse
import logging
import sys

from nsdelta.experiments import (DEFAULT_ALPHAS, PRESETS, ConfigError, ExperimentConfig,
                                 alpha_sweep, load_config, make_config, run_experiment)
from nsdelta.mesh import MeshError
from nsdelta.solver import SingularSystemError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

# slope bands and refinement counts used by ``check``
CHECKS = {
    "square-single-delta": ((-1.15, -0.85), 20),
    "lshape-single-delta": ((-1.15, -0.85), 30),
    "square-four-deltas": ((-1.15, -0.85), 30),
    "channel": ((-1.2, -0.8), 30),
    "channel-obstacle": ((-1.2, -0.8), 100),
}

_FLAG_KEYS = ("alpha", "refinements", "element", "tol", "domain", "z", "force", "bc", "mode",
              "name", "output_dir")


def _common(p):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named experiment")
    p.add_argument("--alpha", help="weight exponent in (0, 2)")
    p.add_argument("--refinements", help="number of adaptive refinements")
    p.add_argument("--element", help="taylor_hood or mini")
    p.add_argument("--tol", help="Picard increment tolerance")
    p.add_argument("--domain", help="unit_square, l_shape, channel_4x1 or channel_10x1_obstacle")
    p.add_argument("--z", help="source points 'x,y;x,y;...'")
    p.add_argument("--force", help="forces 'fx,fy;...' (one pair is used for every point)")
    p.add_argument("--bc", help="homogeneous or inflow")
    p.add_argument("--mode", help="auto, single or multi")
    p.add_argument("--name", help="run name (output subdirectory)")
    p.add_argument("--output-dir", dest="output_dir",
                   help="output directory (NSDELTA_OUTPUT_DIR takes precedence)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any other configuration key")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsdelta", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("solve", help="run one adaptive experiment"))
    sw = sub.add_parser("sweep", help="run an experiment for several alphas")
    _common(sw)
    sw.add_argument("--alphas", default=",".join(f"{a:g}" for a in DEFAULT_ALPHAS),
                    help="comma separated alpha values")
    ck = sub.add_parser("check", help="run the presets and check their slopes")
    ck.add_argument("--only", action="append", choices=sorted(CHECKS), help="restrict to a preset")
    ck.add_argument("--output-dir", dest="output_dir", default="output/check")
    ck.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args) -> ExperimentConfig:
    values = {}
    if args.preset:
        values["preset"] = args.preset
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        values[k.strip()] = v.strip()
    for key in _FLAG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.config:
        return load_config(args.config, values)
    return make_config(values)


def _check(args) -> int:
    failed = []
    for name in args.only or list(CHECKS):
        (lo, hi), n = CHECKS[name]
        cfg = make_config({"preset": name, "refinements": str(n), "output_dir": args.output_dir,
                           "write_fields": "false"})
        res = run_experiment(cfg)
        ok = res.ok and res.slope is not None and lo <= res.slope <= hi
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: slope {res.slope} in [{lo}, {hi}]")
        if not ok:
            failed.append(name)
    return EXIT_SOLVER if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "check":
            return _check(args)
        cfg = config_from_args(args)
        if args.command == "sweep":
            try:
                alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --alphas: {exc}") from None
            results, path = alpha_sweep(cfg, alphas)
            print(f"sweep table written to {path}")
            return EXIT_OK if all(r.ok for r in results) else EXIT_SOLVER
        res = run_experiment(cfg)
        print(f"outputs in {res.directory}")
        return EXIT_OK if res.ok else EXIT_SOLVER
    except (ConfigError, MeshError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
