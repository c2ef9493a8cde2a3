"""SPCA comparison table over the n x r x lambda grid.

    python3 scripts/spca_table.py --out results/spca --jobs 4
"""
import argparse

from rsmooth.bench import ExperimentConfig, run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/spca")
    p.add_argument("--m", type=int, default=5000)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--jobs", type=int, default=1)
    args = p.parse_args()
    cfg = ExperimentConfig.from_dict(dict(
        problem="spca", m=args.m, n=[100, 200], r=[5, 10], lam=[0.4, 0.6], seeds=args.seeds,
        algorithms=["rsg", "rsg-epochs", "rssg", "rssg-epochs", "rsub"],
        max_iters=args.max_iters, rsub_max_iters=10 * args.max_iters, jobs=args.jobs, out=args.out))
    res = run_experiment(cfg)
    print((res.out / "table.md").read_text())


if __name__ == "__main__":
    main()
