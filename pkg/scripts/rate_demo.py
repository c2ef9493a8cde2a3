"""Running-min gradient norm of rsg on the SPCA toy against the K^(-1/3) bound.

Prints the fitted log-log slope of the practical run, then the worst ratio
of running minimum to ``rate_bound(k)`` for a theory-mode run where the
l1 term carries an added -rho/2 ||.||^2 (rho = 0.5).

    python3 scripts/rate_demo.py --iters 10000
"""
import argparse
import math

import numpy as np

from rsmooth.bench import fit_rate
from rsmooth.manifold import Stiefel
from rsmooth.problem import spca_generate, spca_problem
from rsmooth.prox import ShiftedL1
from rsmooth.solver import ScheduleConfig, StopRule, solve_rsg, theory_constants


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    inst = spca_generate(500, 50, 5, 0.4, args.seed)
    x1 = Stiefel(50, 5).random_point(np.random.default_rng(1))
    stop = StopRule(max_iters=args.iters)

    rec = solve_rsg(spca_problem(inst), x1, stop=stop)
    fit = fit_rate({"k": rec.column("k"), "grad_norm": rec.column("grad_norm")})
    print(f"practical: slope {fit.slope:.3f}  intercept {fit.intercept:.3f}  r2 {fit.r2:.3f}")

    prob = spca_problem(inst, h=ShiftedL1(inst.lam, 250, rho=0.5, radius=math.sqrt(5)))
    cfg = ScheduleConfig(step_mode="theory")
    th = solve_rsg(prob, x1, cfg, stop)
    c = theory_constants(prob, cfg, x1, G=th.info["schedule"]["G"])
    k = th.column("k")
    running = np.minimum.accumulate(th.column("grad_norm"))
    ratio = running / c.rate_bound(k)
    for K in (10, 100, 1000, args.iters):
        if K <= len(k):
            print(f"theory K={K:>6}: running min {running[K - 1]:.3e}  bound {c.rate_bound(K):.3e}")
    print(f"theory: max running-min / bound = {ratio.max():.3f}")


if __name__ == "__main__":
    main()
