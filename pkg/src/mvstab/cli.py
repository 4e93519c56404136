"""Command-line front end: one subcommand per experiment kind.

Usage:
    mvstab <kind> --config experiment.json [--out DIR] [--threads N]
                  [--override dotted.path=value ...]

Exit status: 0 on success, 1 when an embedded assertion fails (e.g. the
Hautus test), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (EXPERIMENT_KINDS, ConfigError, ExperimentConfig, run)
from .models import ModelError
from .operators import OperatorError
from .riccati import RiccatiError
from .simulate import SimulationError
from .stationary import StationaryError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvstab",
        description="Spectral Galerkin feedback-stabilization experiments "
                    "for mean-field dynamics on the circle.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run a '{kind}' experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None,
                       help="output directory (default: value in config or '.')")
        p.add_argument("--threads", type=int, default=1,
                       help="worker pool size for sweep points")
        p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, args.override)
        if cfg.kind != args.kind:
            raise ConfigError(
                f"config kind {cfg.kind!r} does not match subcommand {args.kind!r}")
        out_dir = args.out if args.out is not None else "."
        manifest = run(cfg, out_dir, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, OperatorError, RiccatiError, SimulationError,
            StationaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for item in manifest.outputs:
        print(f"wrote {item['path']}  sha256={item['sha256'][:12]}  "
              f"({item['bytes']} bytes)")
    status = "pass" if manifest.passed else "FAIL"
    print(f"{args.kind}: {status} in {manifest.wall_clock_s:.2f}s "
          f"[{manifest.backend} backend]")
    return 0 if manifest.passed else 1


if __name__ == "__main__":
    sys.exit(main())
