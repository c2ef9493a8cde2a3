"""Per-iteration run traces and their CSV / JSON serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COLUMNS = ("k", "mu", "gamma", "ell", "grad_norm", "prox_residual", "F_k", "phi", "seconds")

TOLERANCE = "Tolerance"
MAX_ITERS = "MaxIters"
BEAT_REFERENCE = "BeatReference"
STOP_REASONS = (TOLERANCE, MAX_ITERS, BEAT_REFERENCE)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


@dataclass
class RunRecord:
    algorithm: str
    rows: list = field(default_factory=list)
    x: np.ndarray | None = None
    stop_reason: str | None = None
    total_time: float = 0.0
    sampled_index: int | None = None
    weights: np.ndarray | None = None
    epochs: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, k, mu, gamma, ell, grad_norm, prox_residual, F_k, phi, seconds):
        if self.rows and k <= self.rows[-1][0]:
            raise ValueError(f"trace rows must increase in k ({k} after {self.rows[-1][0]})")
        self.rows.append((int(k), mu, gamma, ell, grad_norm, prox_residual, F_k, phi, seconds))

    def column(self, name):
        i = COLUMNS.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    @property
    def iterations(self):
        return self.rows[-1][0] if self.rows else 0

    @property
    def final(self):
        return dict(zip(COLUMNS, self.rows[-1])) if self.rows else {}

    def csv_text(self, timing=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            vals = list(row)
            # seconds: milliseconds precision, or blanked for timing-free reproducible output
            vals[-1] = f"{row[-1]:.3f}" if timing else "0"
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in vals])
        return buf.getvalue()

    def to_csv(self, path, timing=True):
        Path(path).write_text(self.csv_text(timing))

    def summary(self, timing=True):
        out = {
            "algorithm": self.algorithm,
            "stop_reason": self.stop_reason,
            "iterations": self.iterations,
            "total_seconds": round(self.total_time, 3) if timing else 0.0,
            "final": {k: (None if isinstance(v, float) and math.isnan(v) else v)
                      for k, v in self.final.items() if k != "seconds"},
            "sampled_index": self.sampled_index,
            "epochs": self.epochs,
            "info": self.info,
        }
        if self.x is not None:
            out["x_fro"] = float(np.linalg.norm(self.x))
        return out

    def to_json(self, path, timing=True, extra=None):
        data = self.summary(timing)
        if extra:
            data.update(extra)
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


def read_csv(path):
    """Load a trace CSV into a dict of float arrays keyed by column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: arr[:, i] for i, name in enumerate(header)}
