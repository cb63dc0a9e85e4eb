"""Command-line entry point: ``arena-surrogate <command> [--config FILE] [--seed N] [--out DIR]``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from ..arena import DisconnectedGraph, NonConvergenceWarning
from . import stages
from .config import load_config
from .io import InputError


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration JSON")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="arena-surrogate", parents=[common],
                                     description="Arena-style BT leaderboards and a surrogate judge for RAG systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("features", parents=[common], help="compute and aggregate heuristic features")
    sub.add_parser("judge", parents=[common], help="pairwise judging against a chat endpoint")
    sub.add_parser("fit-bt", parents=[common], help="bootstrap Bradley-Terry leaderboard")
    sub.add_parser("surrogate", parents=[common], help="train the surrogate and rank all models")
    p = sub.add_parser("ablate-sampling", parents=[common], help="tau versus queries and judgment fraction")
    p.add_argument("--queries", type=_ints, help="comma-separated query counts")
    p.add_argument("--fractions", type=_floats, help="comma-separated match fractions")
    p.add_argument("--reps", type=int)
    p = sub.add_parser("ablate-features", parents=[common], help="surrogate quality per feature subset")
    p.add_argument("--presets", type=lambda s: [x for x in s.split(",") if x])
    sub.add_parser("report", parents=[common], help="markdown and JSON report")
    p = sub.add_parser("simulate", parents=[common], help="write a synthetic dataset with known strengths")
    p.add_argument("--models", type=int)
    p.add_argument("--queries", type=int)
    p.add_argument("--text", action="store_true", help="emit a text corpus instead of feature vectors")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    warnings.simplefilter("always", NonConvergenceWarning)
    try:
        cfg = load_config(args.config).with_overrides(args.seed, args.out)
        cmd = args.command
        if cmd == "features":
            return stages.cmd_features(cfg)
        if cmd == "judge":
            return stages.cmd_judge(cfg)
        if cmd == "fit-bt":
            return stages.cmd_fit_bt(cfg)
        if cmd == "surrogate":
            return stages.cmd_surrogate(cfg)
        if cmd == "ablate-sampling":
            return stages.cmd_ablate_sampling(cfg, args.queries, args.fractions, args.reps)
        if cmd == "ablate-features":
            return stages.cmd_ablate_features(cfg, args.presets)
        if cmd == "report":
            return stages.cmd_report(cfg)
        return stages.cmd_simulate(cfg, args.models, args.queries, args.text)
    except (InputError, DisconnectedGraph, FileNotFoundError, ValueError) as e:
        print(f"arena-surrogate {args.command}: error: {e}", file=sys.stderr)
        return stages.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
