"""Command line: ``python -m cat1prox {run,check,sweep}``.

Exit codes: 0 ok, 1 invariant or convergence failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import invariants
from .experiment import run_config_file

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _cmd_run(args) -> int:
    if not Path(args.config).is_file():
        print(f"error: no such config file: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    return run_config_file(args.config, args.out_dir)


def _cmd_check(args) -> int:
    names = invariants.SUITES if args.suite == "all" else (args.suite,)
    results = invariants.run_suites(names, seed=args.seed, samples=args.samples, tol=args.tol)
    for r in results:
        print(r.line())
        if not r.passed:
            print("  witness: " + json.dumps(r.witness, sort_keys=True))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_sweep(args) -> int:
    d = Path(args.directory)
    if not d.is_dir():
        print(f"error: not a directory: {d}", file=sys.stderr)
        return EXIT_USAGE
    configs = sorted(d.glob("*.json"))
    if not configs:
        print(f"error: no *.json configs in {d}", file=sys.stderr)
        return EXIT_USAGE
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(run_config_file, configs, [args.out_dir] * len(configs)))
    else:
        codes = [run_config_file(c, args.out_dir) for c in configs]
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cat1prox", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config")
    run.add_argument("--out-dir", default=None, help="output directory (default $CAT1PROX_OUTPUT_DIR or .)")
    run.set_defaults(func=_cmd_run)

    chk = sub.add_parser("check", help="run seeded invariant sweeps")
    chk.add_argument("suite", choices=invariants.SUITES + ("all",))
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--samples", type=int, default=200)
    chk.add_argument("--tol", type=float, default=None, help="override every check tolerance")
    chk.set_defaults(func=_cmd_check)

    sw = sub.add_parser("sweep", help="run every *.json config in a directory")
    sw.add_argument("directory")
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out-dir", default=None)
    sw.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "samples", 2) < 2:
        print("error: --samples must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
