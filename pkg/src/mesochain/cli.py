"""Command line interface for the experiment harness.

Subcommands: run-micro, compare-closure, sweep-n, oscillatory, run-meso,
reconstruct.  Options given on the command line override the config file.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from . import harness
from .errors import ConfigError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="JSON or TOML experiment config")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--n", help="particle count (comma list for sweep-n)")
    parser.add_argument("--b", type=int, help="number of mesoscale cells")
    parser.add_argument("--eta", type=float,
                        help="mesoscale resolution (must satisfy b*eta = 1)")
    parser.add_argument("--order", type=int, help="closure order n")
    parser.add_argument("--window", choices=["box", "gaussian-truncated"],
                        help="window kind")
    parser.add_argument("--ic", choices=["ramp", "oscillatory"],
                        help="initial condition")
    parser.add_argument("--gamma", type=float, help="wave amplitude")
    parser.add_argument("--amp", type=float, help="oscillation amplitude a")
    parser.add_argument("--freq", type=float, help="oscillation frequency k")
    parser.add_argument("--g", type=int, help="fine grid size")
    parser.add_argument("--snapshots", help="comma-separated snapshot times")
    parser.add_argument("--seed", type=int,
                        help="reserved; the pipeline is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesochain",
        description="Microscale chain runs, mesoscale averaging, and "
                    "deconvolution-closure experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in [
        ("run-micro", "integrate the chain and write checkpoints"),
        ("compare-closure", "exact vs closed-form comparison report"),
        ("sweep-n", "scale-separation sweep over particle counts"),
        ("oscillatory", "high-fluctuation failure-mode experiment"),
        ("run-meso", "run the closed continuum model"),
        ("reconstruct", "fine-grid reconstructions J_n, v_n"),
    ]:
        p = sub.add_parser(name, help=descr)
        _add_common(p)
        if name == "sweep-n":
            p.add_argument("--sweep-time", type=float, default=None,
                           help="common comparison time (default: last snapshot)")
        if name == "run-meso":
            p.add_argument("--closure", choices=["nonlocal", "local"],
                           default="nonlocal", help="stress closure")
    return parser


def config_from_args(args) -> harness.ExperimentConfig:
    if args.config:
        config = harness.load_config(args.config)
    else:
        config = harness.ExperimentConfig()
    overrides = {}
    if args.n is not None and args.command != "sweep-n":
        try:
            overrides["n"] = int(args.n)
        except ValueError as exc:
            raise ConfigError(f"--n must be a single integer here: {args.n!r}") from exc
    if args.b is not None:
        overrides["b"] = args.b
    if args.eta is not None:
        b = overrides.get("b", config.b)
        if abs(b * args.eta - 1.0) > 1e-9:
            raise ConfigError(f"--eta {args.eta} inconsistent with b = {b}")
    if args.order is not None:
        overrides["order"] = args.order
    if args.window is not None:
        overrides["window_kind"] = args.window
    if args.ic is not None:
        overrides["ic"] = args.ic
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.amp is not None:
        overrides["amp"] = args.amp
    if args.freq is not None:
        overrides["freq"] = args.freq
    if args.g is not None:
        overrides["g"] = args.g
    if args.snapshots is not None:
        overrides["snapshots"] = tuple(
            float(tok) for tok in args.snapshots.split(",") if tok
        )
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        if args.command == "run-micro":
            states = harness.cmd_run_micro(config)
            print(f"wrote {len(states)} checkpoints to {config.out_dir}")
        elif args.command == "compare-closure":
            report = harness.cmd_compare_closure(config)
            print(f"max |T_conv_exact| = {report['conv_stress_max_abs']:.3e}; "
                  f"report in {config.out_dir}")
        elif args.command == "sweep-n":
            if args.n is None:
                raise ConfigError("sweep-n needs --n n1,n2,...")
            n_list = [int(tok) for tok in str(args.n).split(",") if tok]
            report = harness.cmd_sweep_n(config, n_list,
                                         sweep_time=args.sweep_time)
            for row in report["points"]:
                print(f"n={row['n']}: "
                      f"err_J={row['err_jacobian_linf_interior']:.3e} "
                      f"err_Tint={row['err_stress_int_linf_interior']:.3e}")
        elif args.command == "oscillatory":
            report = harness.cmd_oscillatory(config)
            print(f"conv stress ratio oscillatory/ramp = "
                  f"{report['conv_stress_ratio']:.3e}")
        elif args.command == "run-meso":
            snaps = harness.cmd_run_meso(config, closure_kind=args.closure)
            print(f"wrote {len(snaps)} meso snapshots to {config.out_dir}")
        elif args.command == "reconstruct":
            harness.cmd_reconstruct(config)
            print(f"wrote reconstructions to {config.out_dir}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
