"""Command-line entry point.

Subcommands: train, compare, probe-bias, oracle, plot. Exit codes:
0 success, 2 configuration/usage error, 3 numerical abort during training.
"""

from __future__ import annotations

import argparse
import sys

from . import envs, harness
from .agents import NumericalAbort
from .config import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parse_ref(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("reference point must look like X,Y")
    return float(parts[0]), float(parts[1])


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momarl",
        description="Multi-objective multi-agent actor-critic laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run training per the config file")
    p_train.add_argument("--config", required=True, help="path to a run config file")
    p_train.add_argument("--seeds", type=_parse_seeds, default=None,
                         help="comma-separated seed override")
    p_train.add_argument("--out", default=None, help="output directory override")
    p_train.add_argument("--ref", type=_parse_ref, default=None,
                         help="hypervolume reference override, default -1000,-1000")

    p_cmp = sub.add_parser("compare", help="Welch-test final metrics of two runs")
    p_cmp.add_argument("run_a")
    p_cmp.add_argument("run_b")
    p_cmp.add_argument("--metric", default=None,
                       help="single metric name (default: all evaluation metrics)")

    p_probe = sub.add_parser("probe-bias", help="utility-bias probe on a trained run")
    p_probe.add_argument("run_dir")
    p_probe.add_argument("--samples", type=int, required=True)
    p_probe.add_argument("--seed", type=int, default=0)

    p_oracle = sub.add_parser("oracle", help="brute-force front over open-loop plans")
    p_oracle.add_argument("--env", required=True, choices=envs.ENV_NAMES)
    p_oracle.add_argument("--agents", type=int, required=True)
    p_oracle.add_argument("--horizon-small", type=int, required=True)
    p_oracle.add_argument("--grid", type=int, required=True,
                          help="actions per axis")
    p_oracle.add_argument("--dt", type=float, default=0.1)
    p_oracle.add_argument("--out", required=True, help="front file to write")

    p_plot = sub.add_parser("plot", help="CSV + SVG learning curves")
    p_plot.add_argument("run_dirs", nargs="+")
    p_plot.add_argument("--metric", required=True)
    p_plot.add_argument("--smooth", type=int, default=None,
                        help="centered rolling-mean window (plotted series only)")
    p_plot.add_argument("--out", default="plots")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            run_dir = harness.cmd_train(args.config, args.seeds, args.out, args.ref)
            print(run_dir)
        elif args.command == "compare":
            print(harness.cmd_compare(args.run_a, args.run_b, args.metric))
        elif args.command == "probe-bias":
            print(harness.cmd_probe_bias(args.run_dir, args.samples, args.seed))
        elif args.command == "oracle":
            spec = envs.EnvSpec(
                name=args.env, n_agents=args.agents,
                horizon=args.horizon_small, dt=args.dt,
            )
            path = harness.cmd_oracle(spec, args.horizon_small, args.grid, args.out)
            print(path)
        elif args.command == "plot":
            for path in harness.cmd_plot(args.run_dirs, args.metric, args.out, args.smooth):
                print(path)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
