"""Command-line entry point: ``frppo run | verify | compare``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..envs import InvalidSpec
from .config import SUITES, ConfigError, RunConfig, apply_overrides, load_config
from .runner import cmd_compare, cmd_run
from .verify import SUITE_FUNCS, run_suite


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--env", choices=("random", "chain", "grid"))
    p.add_argument("--states", type=int)
    p.add_argument("--actions", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", help='step parameter: a number or "auto"')
    p.add_argument("--iters", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--algs", help="comma-separated algorithms")
    p.add_argument("--eps-clip", dest="eps_clip", type=float)
    p.add_argument("--jobs", type=int, help="worker processes across trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frppo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one algorithm and write a per-iteration CSV")
    _common(run)

    cmp_ = sub.add_parser("compare", help="run several algorithms on identical envs; JSON summary")
    _common(cmp_)

    ver = sub.add_parser("verify", help="run a seeded property suite")
    ver.add_argument("suite_pos", nargs="?", metavar="SUITE", choices=list(SUITE_FUNCS))
    ver.add_argument("trials_pos", nargs="?", type=int, metavar="TRIALS")
    ver.add_argument("--suite", choices=list(SUITE_FUNCS))
    ver.add_argument("--trials", type=int)
    ver.add_argument("--seed", type=int, default=0)
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(cfg, args)


def _verify(args) -> int:
    suite = args.suite or args.suite_pos
    if suite is None:
        print(f"error: a suite is required ({', '.join(SUITES)})", file=sys.stderr)
        return 2
    trials = args.trials if args.trials is not None else args.trials_pos
    if trials is None:
        trials = 100
    if trials < 0:
        print("error: trials must be >= 0", file=sys.stderr)
        return 2
    res = run_suite(suite, trials, args.seed)
    print(f"{'suite':<16} {'checks':<15} {'max violation':<18} result")
    print(res.line())
    for k, v in res.notes.items():
        print(f"  {k}: {v}")
    if not res.passed:
        print(f"replay with: frppo verify {suite} --trials {trials} --seed {args.seed}; "
              f"failing instance seeds: {res.failing_seeds[:10]}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return _verify(args)
        cfg = _config(args)
        if args.command == "run":
            return cmd_run(cfg)
        return cmd_compare(cfg)
    except (ConfigError, InvalidSpec, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
