"""Print the adaptive path with its GIC values for one simulated data set.

    python3 scripts/gic_path.py --n 400 --p 20 --seed 3
"""

import argparse

from hdgam.sim_bench import SimScenario, generate
from hdgam.two_step import PathConfig, fit_two_step


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--p", type=int, default=200)
    ap.add_argument("--s", type=int, default=3)
    ap.add_argument("--family", default="bernoulli")
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--a-n", type=float, default=None)
    args = ap.parse_args()

    X, y, *_ = generate(SimScenario(args.n, args.p, args.s, args.family, signal_scale=args.scale, seed=args.seed))
    res = fit_two_step(X, y, args.family, path_cfg=PathConfig(gic_a_n=args.a_n))
    path = res.adaptive_path
    print(f"screening lambda {res.screening_lambda:.4g}, support {sorted(res.screening.support)}")
    print(f"a_n = {path.a_n:.3f}")
    print(f"{'lambda':>10} {'deviance':>10} {'k':>3} {'gic':>8}  support")
    for i, e in enumerate(path.entries):
        mark = " <" if i == res.selected_index else ""
        print(f"{e.lam:10.4g} {e.deviance:10.3f} {e.support_size:3d} {e.gic:8.4f}  {sorted(e.coef.support)}{mark}")


if __name__ == "__main__":
    main()
