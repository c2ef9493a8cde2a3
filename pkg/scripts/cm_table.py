"""Compressed-modes table: deterministic methods against the subgradient baseline.

    python3 scripts/cm_table.py --out results/cm
"""
import argparse

from rsmooth.bench import ExperimentConfig, run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/cm")
    p.add_argument("--n", type=int, nargs="+", default=[64, 128])
    p.add_argument("--r", type=int, nargs="+", default=[2, 4])
    p.add_argument("--lam", type=float, nargs="+", default=[0.1, 0.2])
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    cfg = ExperimentConfig.from_dict(dict(
        problem="cm", n=args.n, r=args.r, lam=args.lam, algorithms=["rsg", "rsg-epochs", "rsub"],
        max_iters=args.max_iters, rsub_max_iters=args.max_iters, jobs=args.jobs, out=args.out))
    res = run_experiment(cfg)
    print((res.out / "table.md").read_text())


if __name__ == "__main__":
    main()
