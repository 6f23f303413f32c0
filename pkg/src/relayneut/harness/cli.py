"""``relayneut`` command line: sweeps, golden replay and self-checks.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

import argparse
import sys

from ..channel import FixtureError
from .config import ALGORITHMS, ConfigError, ExperimentConfig, parse_db_range
from .emit import emit
from .replay import replay_table1
from .selfcheck import run_checks
from .sweep import run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="relayneut", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="Monte Carlo power sweep")
    s.add_argument("--config", help="JSON experiment config (inline flags override it)")
    s.add_argument("--k", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--sweep", choices=("relay", "tx"))
    s.add_argument("--db-range", help="a:b:step, inclusive")
    s.add_argument("--tx-db", type=float)
    s.add_argument("--relay-db", type=float)
    s.add_argument("--algos", help=f"comma separated subset of {','.join(ALGORITHMS)}")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--dist", choices=("uniform01", "cgauss"))
    s.add_argument("--out", help="output file (stdout when omitted)")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--workers", type=int, default=1, help="parallel trial processes")

    r = sub.add_parser("replay-table1", help="recompute the two-user example instance")
    r.add_argument("--fixture", help="fixture JSON (defaults to the packaged one)")

    c = sub.add_parser("check", help="invariant and gradient self-tests")
    c.add_argument("--seed", type=int, default=0)
    return p


def config_from_args(args):
    base = ExperimentConfig.from_json(args.config).to_dict() if args.config else {}
    overrides = {
        "K": args.k, "M": args.m, "N": args.n, "sweep": args.sweep,
        "tx_db": args.tx_db, "relay_db": args.relay_db, "trials": args.trials,
        "seed": args.seed, "distribution": args.dist, "output": args.out,
        "format": args.format,
    }
    if args.db_range is not None:
        overrides["values"] = parse_db_range(args.db_range)
    if args.algos is not None:
        overrides["algorithms"] = tuple(a.strip() for a in args.algos.split(",") if a.strip())
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(base)


def _sweep(args):
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_sweep(cfg, workers=max(1, args.workers))
        emit(result, cfg.format, cfg.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for name, db, seed, msg in result.failures:
        print(f"warning: {name} failed at {db} dB, seed {seed}: {msg}", file=sys.stderr)
    return EXIT_OK


def _replay(args):
    try:
        rep = replay_table1(args.fixture)
    except (OSError, FixtureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(rep.format())
    return EXIT_OK if rep.passed else EXIT_RUNTIME


def _check(args):
    results = run_checks(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_RUNTIME


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"sweep": _sweep, "replay-table1": _replay, "check": _check}[args.command]
    try:
        return handler(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
