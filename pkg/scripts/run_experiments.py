#!/usr/bin/env python3
"""Run the bundled configs and print convergence tables.

Usage:
    python scripts/run_experiments.py                 # all configs in scripts/configs
    python scripts/run_experiments.py mann_negcos.json --out results/
"""
import argparse
import csv
import sys
from pathlib import Path

from cat1prox.experiment import ExperimentConfig, run_experiment

HERE = Path(__file__).resolve().parent
CHECKPOINTS = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


def table(csv_path: Path) -> str:
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    col = "dist_to_Pv" if rows and rows[0]["dist_to_Pv"] != "nan" else "dist_to_min"
    lines = [f"  {'n':>6}  {'lambda_n':>10}  {'alpha_n':>8}  {'step_dist':>10}  {col:>12}"]
    wanted = set(CHECKPOINTS) | {len(rows)}
    for r in rows:
        if int(r["n"]) in wanted:
            lines.append(f"  {int(r['n']):>6}  {float(r['lambda_n']):>10.4g}  {float(r['alpha_n']):>8.4f}"
                         f"  {float(r['step_dist']):>10.3e}  {float(r[col]):>12.4e}")
    return "\n".join(lines)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("configs", nargs="*", help="config files (default: every file in scripts/configs)")
    ap.add_argument("--out", default="results", help="output directory for CSV/JSON")
    args = ap.parse_args(argv)

    paths = [Path(p) if Path(p).exists() else HERE / "configs" / p for p in args.configs]
    paths = paths or sorted((HERE / "configs").glob("*.json"))
    worst = 0
    for p in paths:
        cfg = ExperimentConfig.load(p)
        res = run_experiment(cfg, args.out)
        rep = res.report
        cert = rep.get("certificate") or {}
        ineq = rep.get("inequalities") or {}
        print(f"\n== {cfg.name}  ({cfg.algorithm}, kappa={cfg.space.kappa:g}, "
              f"{rep.get('n_steps')} steps, {rep.get('terminated_reason')})")
        for h in rep.get("hypotheses", []):
            print(f"   hypothesis {h['condition']:<36} {h['satisfied']!s:<6} [{h['method']}]")
        if res.trace is not None:
            print(table(res.csv_path))
        if cert:
            print(f"   bounded estimate {cert['spherically_bounded_estimate']}, "
                  f"tail inf-sup {cert['tail_inf_sup']:.3e}, sup step {cert['sup_step_distance']:.3e}")
        if ineq:
            print(f"   min inequality residual {ineq['min_residual']:.3e} -> {'ok' if ineq['passed'] else 'VIOLATED'}")
        if rep.get("error"):
            print(f"   solver error: {rep['error']}")
        worst = max(worst, res.status)
    return worst


if __name__ == "__main__":
    sys.exit(main())
