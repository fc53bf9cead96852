"""Command-line interface.

Subcommands: validate, simulate, hypotheses, batch, sensitivity.
Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config, load_manifest
from .environment import EnvironmentFormatError
from .pipelines import (
    run_batch,
    run_facade,
    run_hypothesis_matrix,
    run_sensitivity,
    run_validation,
)
from .solver import DivergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _add_common(parser):
    parser.add_argument("--config", type=Path, help="run configuration (TOML)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--scheme", choices=("df", "explicit", "implicit", "adi"))
    parser.add_argument("--dt", type=float, help="time step override [s]")
    parser.add_argument("--nx", type=int, help="node count through the wall")
    parser.add_argument("--ny", type=int, help="node count up the facade")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facade2d",
        description="2D transient conduction in multi-layer facades",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="run the analytical validation case")
    p.add_argument("--out", type=Path)
    p.add_argument("--dt", type=float, default=1e-4,
                   help="dimensionless step for DF/implicit/ADI")
    p.add_argument("--dt-explicit", type=float, default=1e-5)
    p.add_argument("--nx", type=int, default=101)
    p.add_argument("--ny", type=int, default=101)
    p.add_argument("--no-sweep", action="store_true",
                   help="skip the time-step sweep")

    for name, help_ in (("simulate", "yearly facade simulation"),
                        ("hypotheses", "Table-style hypothesis comparison"),
                        ("sensitivity", "co-stepped tangent sensitivity run")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)

    p = sub.add_parser("batch", help="multi-site 1D-vs-2D comparison")
    p.add_argument("--config", type=Path, required=True, help="batch manifest (TOML)")
    p.add_argument("--out", type=Path)
    p.add_argument("--jobs", type=int, default=None)
    return parser


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    overrides = {}
    if args.scheme:
        overrides["scheme"] = args.scheme
    if args.dt:
        overrides["dt_s"] = args.dt
    if args.nx:
        overrides["nx"] = args.nx
    if args.ny:
        overrides["ny"] = args.ny
    return cfg.with_overrides(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            out = args.out or Path("validation_out")
            run_validation(out, dt_star=args.dt, dt_star_explicit=args.dt_explicit,
                           nx=args.nx, ny=args.ny,
                           sweep=None if args.no_sweep else
                           (1e-5, 2e-5, 5e-5, 1e-4, 2e-4, 5e-4, 1e-3))
            print(f"validation outputs written to {out}")
        elif args.command == "simulate":
            cfg = _load(args)
            out = args.out or cfg.output_dir
            report = run_facade(cfg, out_dir=out)
            print(f"{report.n_steps} steps ({report.scheme}, {report.mode});"
                  f" outputs written to {out}")
        elif args.command == "hypotheses":
            cfg = _load(args)
            out = args.out or cfg.output_dir
            run_hypothesis_matrix(cfg, out_dir=out)
            print(f"hypothesis table written to {out}")
        elif args.command == "batch":
            manifest = load_manifest(args.config)
            out = args.out or manifest.template.output_dir
            rows = run_batch(manifest, out_dir=out, jobs=args.jobs)
            failures = [r for r in rows if r[3] != "ok"]
            print(f"{len(rows)} sites processed, {len(failures)} failed;"
                  f" table written to {out}")
        elif args.command == "sensitivity":
            cfg = _load(args)
            out = args.out or cfg.output_dir
            report = run_sensitivity(cfg, out_dir=out)
            print(f"sensitivity run finished (cost ratio"
                  f" {report.cost_ratio():.2f}x); outputs written to {out}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (EnvironmentFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
