"""Reproduce the simulation tables at desk scale.

    python3 scripts/run_tables.py --reps 50 --out results/tables.csv
    python3 scripts/run_tables.py --scenarios ex1-case1,ex4-gamma --reps 10

Set HDGAM_THREADS to run replications in several processes.
"""

import argparse
import time

from hdgam.cli_io import SIM_COLUMNS, write_csv
from hdgam.sim_bench import SCENARIOS, run_table
from hdgam.two_step import PathConfig

TABLES = {
    "1": ["ex1-case1", "ex1-case2", "ex1-case3"],
    "2": ["ex2-cor03", "ex2-cor07"],
    "3": ["ex3-lowsignal"],
    "4": ["ex4-poisson", "ex4-gamma"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", default=None, help="comma-separated scenario names")
    ap.add_argument("--tables", default="1,2,3,4", help="table numbers, used when --scenarios is absent")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--a-n", type=float, default=None, help="override the GIC model-size penalty")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    if args.scenarios:
        names = args.scenarios.split(",")
    else:
        names = [s for t in args.tables.split(",") for s in TABLES[t.strip()]]
    cfg = PathConfig(gic_a_n=args.a_n)
    rows = []
    for name in names:
        t0 = time.time()
        t, det = run_table(SCENARIOS[name], args.reps, cfg, details=True)
        d = t.as_dict()
        rows.append([name, args.reps] + [d[c] for c in SIM_COLUMNS[2:]])
        kkt = max(x["max_kkt"] for x in det)
        print(
            f"{name:14s} NV {t.nv:5.2f} ({t.nv_se:.2f})  TPR {t.tpr:.3f} ({t.tpr_se:.3f})  "
            f"FPR {t.fpr:.4f} ({t.fpr_se:.4f})  PE {t.pe:.3f} ({t.pe_se:.3f})  "
            f"max KKT {kkt:.1e}  {time.time() - t0:.0f}s",
            flush=True,
        )
    if args.out:
        write_csv(args.out, SIM_COLUMNS, rows)


if __name__ == "__main__":
    main()
