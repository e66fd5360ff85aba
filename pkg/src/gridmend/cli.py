"""Command-line batch driver: `plan --config <path> [overrides] --out DIR`."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigurationError, NetworkError
from .runner import ExperimentConfig, run_experiment

_MODE_ALIASES = {"case1": "households", "case2": "households_and_retailers"}
_POOLING_ALIASES = {
    "full": "full",
    "one-step": "one_step",
    "n-step": "n_step",
    "random-cap": "random_cap",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plan",
        description="Simulate earthquake damage scenarios and compute base-heuristic "
        "and rollout repair schedules for a power network.",
    )
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--objective", choices=["f1", "f2"])
    parser.add_argument("--gamma", type=float, help="service threshold for objective f1")
    parser.add_argument("--resources", type=int, help="repair resource units N")
    parser.add_argument("--base", choices=["random", "smart"])
    parser.add_argument("--pooling", choices=sorted(_POOLING_ALIASES))
    parser.add_argument("--cap", type=int, help="max enumerated actions per epoch")
    parser.add_argument("--lookahead", help="1, 2 or 'full'")
    parser.add_argument("--scenarios", type=int, help="number of damage scenarios")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--mode", choices=sorted(_MODE_ALIASES))
    parser.add_argument("--out", default="out", help="output directory")
    return parser


def _parse_lookahead(raw):
    if raw is None or raw == "full":
        return raw
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"invalid lookahead {raw!r}") from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {
            "objective": args.objective,
            "gamma": args.gamma,
            "n_resources": args.resources,
            "base": args.base,
            "pooling": _POOLING_ALIASES.get(args.pooling) if args.pooling else None,
            "cap": args.cap,
            "lookahead": _parse_lookahead(args.lookahead),
            "scenarios": args.scenarios,
            "master_seed": args.seed,
            "mode": _MODE_ALIASES.get(args.mode) if args.mode else None,
        }
        config = ExperimentConfig.from_file(args.config, overrides)
        summary = run_experiment(config, args.out)
    except (ConfigurationError, NetworkError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    agg = summary.aggregates()
    print(
        f"{config.scenarios} scenarios | objective {config.objective} | "
        f"base mean {agg['base_mean']:.4g} | rollout mean {agg['rollout_mean']:.4g} | "
        f"mean improvement {agg['mean_improvement']:.4g}"
    )
    print(f"outputs written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
