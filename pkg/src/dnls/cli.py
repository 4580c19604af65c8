"""Command-line interface: one subcommand per experiment.

Examples:
    dnls fig5-spectrum --n-sites 3 --epsilon 0.01 --out out/fig5
    dnls breather-table --n-sites 3 --order 3 --out out/table
    dnls fig3-crossings --epsilon 0.1 --t-end 30000 --out out/fig3

A --config file with key=value lines overrides flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, DnlsError
from .experiments import EXPERIMENTS, ExperimentConfig, run, validate


def _parse_config_file(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_FLOAT_KEYS = {"epsilon", "gamma", "t_end", "dt", "delta", "gamma_max"}
_INT_KEYS = {"n_sites", "seed", "sample_stride", "order", "gamma_points"}


def _coerce(key: str, value: str):
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    if key == "epsilons":
        return tuple(float(v) for v in value.split(",") if v)
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnls",
        description="damped discrete-NLS breather experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--n-sites", type=int, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--epsilons", type=str, default=None,
                       help="comma-separated sweep values (fig3/fig4)")
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--t-end", type=float, default=None)
        p.add_argument("--dt", type=float, default=0.01)
        p.add_argument("--sample-stride", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--delta", type=float, default=None,
                       help="perturbation seed amplitude")
        p.add_argument("--order", type=int, default=3, help="series order")
        p.add_argument("--gamma-points", type=int, default=11)
        p.add_argument("--gamma-max", type=float, default=0.5)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--config", type=str, default=None,
                       help="key=value file overriding flags")
        p.add_argument("--validate-only", action="store_true",
                       help="print diagnostics and exit")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    fields = {
        "n_sites": args.n_sites,
        "epsilon": args.epsilon,
        "gamma": args.gamma,
        "t_end": args.t_end,
        "dt": args.dt,
        "sample_stride": args.sample_stride,
        "seed": args.seed,
        "delta": args.delta,
        "order": args.order,
        "gamma_points": args.gamma_points,
        "gamma_max": args.gamma_max,
    }
    if args.epsilons:
        fields["epsilons"] = tuple(float(v) for v in args.epsilons.split(",") if v)
    out = args.out
    if args.config:
        overrides = _parse_config_file(args.config)
        for key, value in overrides.items():
            if key == "out" or key == "output_dir":
                out = value
                continue
            if key == "experiment":
                raise ConfigError("config file cannot change the experiment")
            if key not in fields and key != "epsilons":
                raise ConfigError(f"unknown config key {key!r}")
            fields[key] = _coerce(key, value)
    if out is None:
        out = f"out/{args.experiment}"
    return ExperimentConfig(experiment=args.experiment, output_dir=Path(out), **fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    if args.validate_only:
        for note in validate(config):
            print(note)
        return 0
    try:
        result = run(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DnlsError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for e in result.expectations:
        print(f"[{'PASS' if e.passed else 'FAIL'}] {e.name}: {e.detail}")
    if result.manifest:
        print(f"artifacts in {config.output_dir}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
