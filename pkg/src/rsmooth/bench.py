"""Experiment harness: instance sweeps, comparison tables, rate fits and replay.

An experiment directory looks like::

    out/
      instances/<stem>.bin, <stem>.json   matrix dump + sidecar per instance
      runs/<stem>__<algo>.csv             one trace per (cell, algorithm, seed)
      table.md, table.csv                 aggregated comparison
      manifest.json                       config echo, seeds, hashes, run summaries
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import __version__
from .manifold import Stiefel
from .problem import (
    IntegrityError,
    cm_generate,
    cm_problem,
    default_h,
    instance_hash,
    load_instance,
    save_instance,
    spca_generate,
    spca_problem,
)
from .solver import ALGORITHMS, ScheduleConfig, StopRule, solve
from .trace import COLUMNS, _json_default, read_csv

log = logging.getLogger(__name__)

PROBLEMS = ("spca", "cm")
STEP_MODES = ("practical", "theory")
RSUB_DEFAULT_ITERS = 10_000
TIME_NOTE = "CPU seconds count solver time only; instance generation and file I/O are excluded."
BEST_NOTE = "best = smallest CPU time in the row; ties go to the algorithm listed first in the config."


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class TraceTooShort(ValueError):
    pass


# -- configuration ------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One sweep over ``n x r x lam x seeds`` for a list of algorithms.

    ``max_iters`` caps the smoothing methods (and sets ``K`` for the
    stochastic ones); ``rsub_max_iters`` caps the subgradient baseline
    (default 10000). ``rho`` declares a weak-convexity modulus for the l1
    term, which fixes ``mu0 = 1/(2 rho)`` and enables theory step sizes.
    """

    problem: str = "spca"
    m: int = 5000
    n: list = field(default_factory=lambda: [50])
    r: list = field(default_factory=lambda: [5])
    lam: list = field(default_factory=lambda: [0.4])
    algorithms: list = field(default_factory=lambda: ["rsg"])
    tol: float | None = None
    max_iters: int = 1000
    rsub_max_iters: int | None = None
    seeds: list = field(default_factory=lambda: [0])
    batches: int = 100
    step_mode: str = "practical"
    step_scale: float | None = None
    mu0: float | None = None
    rho: float = 0.0
    reference_objective: float | None = None
    L: float = 50.0
    jobs: int = 1
    timing: bool = True
    out: str = "results"

    _LISTS = ("n", "r", "lam", "algorithms", "seeds")

    def __post_init__(self):
        for name in self._LISTS:
            v = getattr(self, name)
            setattr(self, name, list(v) if isinstance(v, (list, tuple)) else [v])
        self.validate()

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError("problem", f"expected one of {PROBLEMS}, got {self.problem!r}")
        for name in ("m", "max_iters", "batches", "jobs"):
            _positive_int(name, getattr(self, name))
        if self.rsub_max_iters is not None:
            _positive_int("rsub_max_iters", self.rsub_max_iters)
        for name in ("n", "r"):
            if not getattr(self, name):
                raise ConfigError(name, "must not be empty")
            for v in getattr(self, name):
                _positive_int(name, v)
        if self.problem == "cm" and min(self.n) < 3:
            raise ConfigError("n", "compressed modes need n >= 3")
        if max(self.r) > min(self.n):
            raise ConfigError("r", f"every r must be <= every n (got r={self.r}, n={self.n})")
        if not self.lam:
            raise ConfigError("lam", "must not be empty")
        for v in self.lam:
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v >= 0:
                raise ConfigError("lam", f"entries must be nonnegative numbers, got {v!r}")
        if not self.algorithms:
            raise ConfigError("algorithms", "must name at least one algorithm")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError("algorithms", f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms", "duplicate entries")
        if not self.seeds:
            raise ConfigError("seeds", "must not be empty")
        for s in self.seeds:
            if not isinstance(s, int) or isinstance(s, bool) or s < 0:
                raise ConfigError("seeds", f"entries must be nonnegative integers, got {s!r}")
        if self.problem == "spca" and self.batches > self.m:
            raise ConfigError("batches", f"cannot exceed m={self.m}")
        for name in ("tol", "step_scale", "mu0"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(name, f"must be positive, got {v!r}")
        if self.step_mode not in STEP_MODES:
            raise ConfigError("step_mode", f"expected one of {STEP_MODES}, got {self.step_mode!r}")
        if not (isinstance(self.rho, (int, float)) and self.rho >= 0):
            raise ConfigError("rho", f"must be nonnegative, got {self.rho!r}")
        if self.step_mode == "theory" and self.rho == 0:
            raise ConfigError("step_mode", "theory step sizes need rho > 0; use practical mode for plain l1")
        if not self.L > 0:
            raise ConfigError("L", f"must be positive, got {self.L!r}")

    @classmethod
    def from_dict(cls, data, **overrides):
        """Build from a JSON-style dict; non-``None`` ``overrides`` win."""
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        data.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in names:
                raise ConfigError(key, "unknown config field")
        try:
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("config", str(exc)) from exc

    @classmethod
    def from_json(cls, path, **overrides):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        return cls.from_dict(data, **overrides)

    def to_dict(self):
        return asdict(self)


def _positive_int(name, v):
    if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
        raise ConfigError(name, f"must be a positive integer, got {v!r}")


# -- instances and tasks ------------------------------------------------------


def instance_stem(problem, n, r, lam, seed):
    return f"{problem}_n{n}_r{r}_lam{lam:g}_s{seed}"


def start_point(n, r, seed):
    """Initial iterate for a cell; drawn from a stream separate from the data."""
    return Stiefel(n, r).random_point(np.random.default_rng([1, seed]))


def cells(cfg):
    for n in cfg.n:
        for r in cfg.r:
            for lam in cfg.lam:
                for seed in cfg.seeds:
                    yield n, r, float(lam), seed


def generate_instance(cfg, n, r, lam, seed):
    if cfg.problem == "spca":
        return spca_generate(cfg.m, n, r, lam, seed)
    return cm_generate(n, r, lam, cfg.L)


def build_problem(cfg, inst):
    h = default_h(inst.lam, inst.n * inst.r, rho=cfg.rho)
    if cfg.problem == "spca":
        return spca_problem(inst, batches=cfg.batches, h=h)
    return cm_problem(inst, h=h)


def _run_task(task):
    """Worker: one (instance, algorithm, seed) run. Returns ``(csv_text, summary)``."""
    cfg = ExperimentConfig.from_dict(task["config"])
    inst = load_instance(task["sidecar"])
    prob = build_problem(cfg, inst)
    x1 = start_point(inst.n, inst.r, task["seed"])
    algo = task["algorithm"]
    if algo == "rsub":
        stop = StopRule(cfg.tol, cfg.rsub_max_iters or RSUB_DEFAULT_ITERS, cfg.reference_objective)
    else:
        stop = StopRule(cfg.tol, cfg.max_iters, cfg.reference_objective)
    sched = ScheduleConfig(mu0=cfg.mu0, step_mode=cfg.step_mode, step_scale=cfg.step_scale)
    rec = solve(algo, prob, x1, sched, stop, seed=task["seed"])
    summary = rec.summary(timing=cfg.timing)
    summary["objective"] = prob.objective(rec.x)
    summary["seed"] = task["seed"]
    summary["cpu_seconds"] = rec.total_time if cfg.timing else 0.0
    return rec.csv_text(timing=cfg.timing), summary


class ExperimentResult(NamedTuple):
    out: Path
    rows: list
    manifest: dict


def _prepare_out(out):
    out = Path(out)
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    return out


def run_experiment(cfg):
    """Generate instances, run every algorithm on every cell, write traces, table and manifest."""
    out = _prepare_out(cfg.out)
    sidecars = {}
    for n, r, lam, seed in cells(cfg):
        stem = instance_stem(cfg.problem, n, r, lam, seed)
        sidecars[stem] = save_instance(generate_instance(cfg, n, r, lam, seed), out / "instances", stem)
    return _execute(cfg, sidecars, out)


def _execute(cfg, sidecars, out):
    cfg_dict = cfg.to_dict()
    tasks, keys = [], []
    for n, r, lam, seed in cells(cfg):
        stem = instance_stem(cfg.problem, n, r, lam, seed)
        for algo in cfg.algorithms:
            keys.append((stem, algo, n, r, lam, seed))
            tasks.append({"config": cfg_dict, "sidecar": str(sidecars[stem]), "algorithm": algo, "seed": seed})
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    runs, rows = [], []
    instances = {}
    for (stem, algo, n, r, lam, seed), (text, summary) in zip(keys, results):
        name = f"{stem}__{algo}.csv"
        (out / "runs" / name).write_text(text)
        meta = json.loads(Path(sidecars[stem]).read_text())
        instances[stem] = {"sidecar": Path(sidecars[stem]).relative_to(out).as_posix(),
                           "sha256": meta["sha256"], "seed": seed}
        runs.append({"file": f"runs/{name}", "instance": stem, "algorithm": algo, "seed": seed,
                     "instance_sha256": meta["sha256"], "summary": summary})
        rows.append({"problem": cfg.problem, "n": n, "r": r, "lam": lam, "seed": seed, "algorithm": algo,
                     "objective": summary["objective"], "cpu_seconds": summary["cpu_seconds"],
                     "iterations": summary["iterations"], "stop_reason": summary["stop_reason"]})
    mark_best(rows, cfg.algorithms)
    write_tables(rows, cfg.algorithms, out)
    manifest = {
        "version": __version__,
        "config": cfg_dict,
        "seeds": list(cfg.seeds),
        "instances": instances,
        "runs": runs,
        "timing": cfg.timing,
        "notes": [TIME_NOTE, BEST_NOTE],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default))
    log.info("wrote %d runs to %s", len(runs), out)
    return ExperimentResult(out, rows, manifest)


# -- comparison table ---------------------------------------------------------


def _cell_key(row):
    return row["n"], row["r"], row["lam"], row["seed"]


def mark_best(rows, algorithms):
    """Flag the fastest algorithm per cell; earlier algorithms win ties."""
    order = {a: i for i, a in enumerate(algorithms)}
    by_cell = {}
    for row in rows:
        by_cell.setdefault(_cell_key(row), []).append(row)
    for group in by_cell.values():
        winner = min(group, key=lambda row: (row["cpu_seconds"], order[row["algorithm"]]))
        for row in group:
            row["best"] = row is winner
    return rows


def win_percentages(rows, algorithms):
    cells_ = {_cell_key(row) for row in rows}
    wins = {a: 0 for a in algorithms}
    for row in rows:
        if row.get("best"):
            wins[row["algorithm"]] += 1
    return {a: 100.0 * wins[a] / len(cells_) for a in algorithms}


def write_tables(rows, algorithms, out):
    out = Path(out)
    cols = ("problem", "n", "r", "lam", "seed", "algorithm", "objective", "cpu_seconds", "iterations",
            "stop_reason", "best")
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(_cell(row[c]) for c in cols))
    (out / "table.csv").write_text("\n".join(lines) + "\n")

    head = ["n", "r", "lam", "seed"]
    for a in algorithms:
        head += [f"{a} obj", f"{a} cpu(s)", f"{a} iters"]
    md = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    by_cell = {}
    for row in rows:
        by_cell.setdefault(_cell_key(row), {})[row["algorithm"]] = row
    for key, group in by_cell.items():
        cells_ = [str(key[0]), str(key[1]), f"{key[2]:g}", str(key[3])]
        for a in algorithms:
            row = group[a]
            t = f"{row['cpu_seconds']:.3f}"
            if row["best"]:
                t = f"**{t}**"
            cells_ += [f"{row['objective']:.6f}", t, str(row["iterations"])]
        md.append("| " + " | ".join(cells_) + " |")
    pct = win_percentages(rows, algorithms)
    foot = ["wins", "", "", ""]
    for a in algorithms:
        foot += ["", f"{pct[a]:.1f}%", ""]
    md.append("| " + " | ".join(foot) + " |")
    md += ["", TIME_NOTE, BEST_NOTE]
    (out / "table.md").write_text("\n".join(md) + "\n")


def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# -- rate fit -----------------------------------------------------------------


class RateFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def fit_rate(trace, burn_in=0.1, min_rows=100):
    """Least-squares fit of ``log(running-min grad_norm)`` against ``log k``.

    ``trace`` is a CSV path or a dict of columns. The first ``burn_in``
    fraction of rows is discarded.
    """
    data = read_csv(trace) if isinstance(trace, (str, Path)) else trace
    k = np.asarray(data["k"], dtype=float)
    g = np.asarray(data["grad_norm"], dtype=float)
    if len(k) < min_rows:
        raise TraceTooShort(f"need at least {min_rows} rows to fit a rate, got {len(k)}")
    if np.any(g <= 0):
        raise ValueError("grad_norm must be positive to fit on a log scale")
    best = np.minimum.accumulate(g)
    start = int(math.ceil(burn_in * len(k)))
    x, y = np.log(k[start:]), np.log(best[start:])
    Amat = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(Amat, y, rcond=None)
    resid = y - Amat @ np.array([slope, intercept])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), r2)


# -- replay -------------------------------------------------------------------


class ReplayResult(NamedTuple):
    out: Path
    compared: int
    mismatches: list


def _strip_seconds(text):
    i = COLUMNS.index("seconds")
    return "\n".join(",".join(v for j, v in enumerate(line.split(",")) if j != i)
                     for line in text.splitlines())


def replay(src, out, seed=None, jobs=None, check=True):
    """Rerun a saved experiment from its instance dumps and compare traces.

    Every sidecar is hash-checked against its dump. For generated data the
    instance is also regenerated from the recorded (or requested) seed and
    must hash identically, so replaying under a different seed is refused.
    Traces are compared byte for byte; when the original recorded timings
    the ``seconds`` column is left out of the comparison.
    """
    src = Path(src)
    manifest = json.loads((src / "manifest.json").read_text())
    cfg = ExperimentConfig.from_dict(manifest["config"], out=str(out), jobs=jobs)
    if seed is not None:
        if seed not in cfg.seeds:
            raise IntegrityError(f"seed {seed} was not part of the saved run (seeds {cfg.seeds})")
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "seeds": [seed]})
    sidecars = {}
    for n, r, lam, s in cells(cfg):
        stem = instance_stem(cfg.problem, n, r, lam, s)
        entry = manifest["instances"].get(stem)
        if entry is None:
            raise IntegrityError(f"no saved instance for {stem}")
        sidecar = src / entry["sidecar"]
        inst = load_instance(sidecar)
        h = instance_hash(inst)
        if h != entry["sha256"]:
            raise IntegrityError(f"{stem}: dump hash differs from the manifest")
        if instance_hash(generate_instance(cfg, n, r, lam, s)) != h:
            raise IntegrityError(f"{stem}: regenerating with seed {s} does not reproduce the saved data")
        sidecars[stem] = save_instance(inst, Path(out) / "instances", stem)
    _execute(cfg, sidecars, _prepare_out(out))

    mismatches, compared = [], 0
    if check:
        for run in manifest["runs"]:
            if run["seed"] not in cfg.seeds:
                continue
            a = (src / run["file"]).read_bytes()
            b = (Path(out) / run["file"]).read_bytes()
            if manifest["timing"]:
                a, b = _strip_seconds(a.decode()), _strip_seconds(b.decode())
            compared += 1
            if a != b:
                mismatches.append(run["file"])
    return ReplayResult(Path(out), compared, mismatches)
