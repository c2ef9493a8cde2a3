"""``rsmooth`` command line: ``run``, ``fit-rate`` and ``replay``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .bench import ConfigError, ExperimentConfig, TraceTooShort, fit_rate, replay, run_experiment
from .problem import IntegrityError


def _add_run_flags(p):
    p.add_argument("--config", help="JSON experiment config; flags below override it")
    p.add_argument("--problem", choices=("spca", "cm"))
    p.add_argument("--m", type=int, help="SPCA sample count")
    p.add_argument("--n", type=int, nargs="+", action="extend")
    p.add_argument("--r", type=int, nargs="+", action="extend")
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", action="extend")
    p.add_argument("--algo", dest="algorithms", nargs="+", action="extend",
                   help="rsg, rsg-epochs, rssg, rssg-epochs, rsub")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--rsub-max-iters", type=int)
    p.add_argument("--seed", dest="seeds", type=int, nargs="+", action="extend")
    p.add_argument("--batches", type=int)
    p.add_argument("--step-mode", choices=("practical", "theory"))
    p.add_argument("--step-scale", type=float)
    p.add_argument("--mu0", type=float)
    p.add_argument("--rho", type=float, help="declared weak-convexity modulus of the l1 term")
    p.add_argument("--reference-objective", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--timing", action=argparse.BooleanOptionalAction, default=None,
                   help="record wall-clock seconds in traces (--no-timing gives reproducible bytes)")
    p.add_argument("--out")


RUN_FIELDS = ("problem", "m", "n", "r", "lam", "algorithms", "tol", "max_iters", "rsub_max_iters", "seeds",
              "batches", "step_mode", "step_scale", "mu0", "rho", "reference_objective", "jobs", "timing", "out")


def build_parser():
    parser = argparse.ArgumentParser(prog="rsmooth", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment sweep")
    _add_run_flags(p_run)

    p_fit = sub.add_parser("fit-rate", help="log-log slope of the running-min gradient norm of a trace")
    p_fit.add_argument("trace", help="per-run CSV")
    p_fit.add_argument("--burn-in", type=float, default=0.1)

    p_rep = sub.add_parser("replay", help="rerun a saved experiment and compare traces")
    p_rep.add_argument("src", help="directory written by `run`")
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--seed", type=int, help="replay only this seed")
    p_rep.add_argument("--jobs", type=int)
    p_rep.add_argument("--no-check", action="store_true", help="skip the byte comparison")
    return parser


def config_from_args(args):
    overrides = {name: getattr(args, name) for name in RUN_FIELDS}
    if args.config:
        return ExperimentConfig.from_json(args.config, **overrides)
    return ExperimentConfig.from_dict({}, **overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            res = run_experiment(config_from_args(args))
            print((res.out / "table.md").read_text(), end="")
            print(f"wrote {len(res.manifest['runs'])} traces, table.md, table.csv and manifest.json to {res.out}")
            return 0
        if args.command == "fit-rate":
            fit = fit_rate(args.trace, burn_in=args.burn_in)
            print(json.dumps(fit._asdict()))
            return 0
        if args.command == "replay":
            res = replay(args.src, args.out, seed=args.seed, jobs=args.jobs, check=not args.no_check)
            if res.mismatches:
                print(f"{len(res.mismatches)} of {res.compared} traces differ:", *res.mismatches, sep="\n  ")
                return 1
            print(f"replayed into {res.out}; {res.compared} traces identical")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrityError, TraceTooShort, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
