"""Seeded Monte-Carlo sweeps for detection accuracy and test rejection rates.

An experiment is a grid of model specs, each replicated ``reps`` times.
Trial (g, r) is driven entirely by the integer seed derived from
``SeedSequence([seed, g, r])``, so grids can be run in any order or in
parallel and still give the same per-trial log.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

import numpy as np

from .detect import DetectConfig, bayes_sbm, detect
from .graph import misclassification, write_atomic
from .hyptest import NOT_APPLICABLE, test_labels
from .models import ModelError, ModelSpec, max_pop_rho, sample

logger = logging.getLogger(__name__)

TRIAL_COLUMNS = [
    "grid_index", "rep", "seed", "rho_tilde", "accuracy", "k_hat",
    "reject_er", "reject_cl", "applicable", "t1", "t2", "c1_er", "c2_er", "c1_cl",
    "wall_ms", "status",
]
AGGREGATE_COLUMNS = [
    "grid_index", "param_value", "metric", "rho_tilde", "mean", "se",
    "n_trials", "n_failed", "n_not_applicable", "mean_wall_ms",
]


@dataclass
class Experiment:
    kind: str
    grid: list[dict[str, Any]]
    reps: int = 20
    seed: int = 0
    nulls: str = "both"
    param: str | None = None
    detector: str = "greedy"
    detect_cfg: DetectConfig = field(default_factory=DetectConfig)
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.kind not in ("detection", "testing"):
            raise ValueError(f"kind must be 'detection' or 'testing', got {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.grid:
            raise ValueError("experiment grid is empty")
        if self.detector not in ("greedy", "bayes_sbm"):
            raise ValueError(f"unknown detector {self.detector!r}")

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Experiment":
        """Parse a config; ``grid`` may be explicit or ``base`` + ``sweep``.

        A sweep is ``{"param": name, "values": [...], "scale": {other: factor}}``;
        ``scale`` ties other parameters to the swept one (e.g. p11 = 2 p12).
        """
        obj = dict(obj)
        kind = obj.pop("kind")
        if "grid" in obj:
            grid = list(obj.pop("grid"))
            param = obj.pop("param", None)
        else:
            base, sweep = obj.pop("base"), obj.pop("sweep")
            param = sweep["param"]
            grid = [_apply_sweep(base, param, v, sweep.get("scale", {})) for v in sweep["values"]]
        det = obj.pop("detect", {})
        reps_default = 100 if kind == "testing" else 20
        return cls(
            kind=kind, grid=grid, param=param,
            reps=int(obj.pop("reps", reps_default)),
            seed=int(obj.pop("seed", 0)),
            nulls=obj.pop("nulls", "both"),
            detector=obj.pop("detector", "greedy"),
            detect_cfg=DetectConfig(**det),
            workers=int(obj.pop("workers", 1)),
            timing=bool(obj.pop("timing", True)),
        )


def _apply_sweep(base: dict, param: str, value, scale: dict[str, float]) -> dict:
    spec = json.loads(json.dumps(base))
    params = spec.setdefault("params", {})

    def put(name, v):
        if name in ("n", "sparsity"):
            spec[name] = v
        else:
            params[name] = v

    put(param, value)
    for other, factor in scale.items():
        put(other, factor * value)
    # n-sweeps keep the core fraction of the base spec
    if param == "n" and "k" in params and "k_fraction" in spec:
        params["k"] = max(1, int(round(spec["k_fraction"] * value)))
    spec.pop("k_fraction", None)
    return spec


def param_value(spec_obj: dict, param: str | None):
    if param is None:
        return ""
    if param in ("n", "sparsity"):
        return spec_obj.get(param, "")
    return spec_obj.get("params", {}).get(param, "")


def trial_seed(master: int, grid_index: int, rep: int) -> int:
    seq = np.random.SeedSequence([master, grid_index, rep])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def grid_rho_tilde(spec_obj: dict, master: int, grid_index: int) -> float:
    """rho~ for a grid point; random theta is drawn once from a grid-level seed."""
    try:
        spec = ModelSpec.from_json(spec_obj, np.random.SeedSequence([master, grid_index, 2**31]))
        return float(max_pop_rho(spec).value)
    except ModelError as exc:
        logger.info("grid point %d: rho~ unavailable (%s)", grid_index, exc)
        return math.nan


def run_trial(exp: Experiment, grid_index: int, rep: int) -> dict[str, Any]:
    seed = trial_seed(exp.seed, grid_index, rep)
    model_seq, sample_seq, detect_seq = np.random.SeedSequence(seed).spawn(3)
    row: dict[str, Any] = {"grid_index": grid_index, "rep": rep, "seed": seed, "status": "ok"}
    start = time.monotonic()
    try:
        spec = ModelSpec.from_json(exp.grid[grid_index], model_seq)
        g, truth = sample(spec, sample_seq)
        detect_seed = int(detect_seq.generate_state(1, dtype=np.uint32)[0])
        if exp.detector == "bayes_sbm":
            labels = bayes_sbm(g, seed=detect_seed).labels
        else:
            labels = detect(g, replace(exp.detect_cfg, seed=detect_seed)).labels
        row["k_hat"] = labels.k
        if exp.kind == "detection":
            if not truth.has_cp:
                raise ModelError("detection trials need a model with planted labels")
            row["accuracy"] = 1.0 - misclassification(labels, truth.labels)
        else:
            rep_ = test_labels(g, labels, exp.nulls)
            row.update(
                t1=rep_.t1, t2=rep_.t2, c1_er=rep_.er.c1, c2_er=rep_.er.c2,
                applicable=rep_.interpretation != NOT_APPLICABLE,
                reject_er=rep_.er.reject,
            )
            if rep_.cl is not None:
                row.update(reject_cl=rep_.cl.reject, c1_cl=rep_.cl.c1)
    except (ValueError, RuntimeError) as exc:
        row["status"] = f"failed: {exc}".replace("\n", " ")
    if exp.timing:
        row["wall_ms"] = (time.monotonic() - start) * 1000.0
    return row


def _run_trial_args(args):
    return run_trial(*args)


def run_trials(exp: Experiment) -> list[dict[str, Any]]:
    tasks = [(exp, g, r) for g in range(len(exp.grid)) for r in range(exp.reps)]
    if exp.workers > 1:
        with ProcessPoolExecutor(exp.workers) as pool:
            rows = list(pool.map(_run_trial_args, tasks, chunksize=max(1, len(tasks) // (4 * exp.workers))))
    else:
        rows = [run_trial(*t) for t in tasks]
    rho = [grid_rho_tilde(spec, exp.seed, g) for g, spec in enumerate(exp.grid)]
    for row in rows:
        row["rho_tilde"] = rho[row["grid_index"]]
    return rows


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class GridPointResult:
    grid_index: int
    param_value: Any
    metric: str
    rho_tilde: float
    mean: float
    se: float
    n_trials: int
    n_failed: int
    n_not_applicable: int
    mean_wall_ms: float | None

    def as_row(self) -> dict[str, Any]:
        return {c: getattr(self, c) for c in AGGREGATE_COLUMNS}


def _metrics(kind: str, nulls: str) -> list[str]:
    if kind == "detection":
        return ["accuracy"]
    return {"er": ["reject_er"], "cl": ["reject_er", "reject_cl"], "both": ["reject_er", "reject_cl"]}[nulls]


def aggregate(rows: Iterable[dict[str, Any]], exp: Experiment) -> list[GridPointResult]:
    """Per grid point and metric: mean, standard error and failure counts.

    Not-applicable test trials count as non-rejections. Rates use the
    binomial standard error sqrt(rate (1 - rate) / trials); accuracies use
    the sample standard deviation over sqrt(trials), 0 for a single trial.
    """
    rows = list(rows)
    out = []
    for g, spec in enumerate(exp.grid):
        mine = [r for r in rows if int(r["grid_index"]) == g]
        ok = [r for r in mine if r["status"] == "ok"]
        failed = len(mine) - len(ok)
        na = sum(1 for r in ok if exp.kind == "testing" and not _truthy(r.get("applicable")))
        walls = [float(r["wall_ms"]) for r in mine if r.get("wall_ms") not in (None, "")]
        wall = sum(walls) / len(walls) if walls else None
        rho = float(mine[0]["rho_tilde"]) if mine and mine[0].get("rho_tilde") not in (None, "") else math.nan
        for metric in _metrics(exp.kind, exp.nulls):
            if exp.kind == "detection":
                vals = [float(r[metric]) for r in ok]
            else:
                vals = [1.0 if _truthy(r.get(metric)) else 0.0 for r in ok]
            t = len(vals)
            mean = sum(vals) / t if t else math.nan
            if t == 0:
                se = math.nan
            elif exp.kind == "testing":
                se = math.sqrt(mean * (1.0 - mean) / t)
            elif t == 1:
                se = 0.0
            else:
                se = math.sqrt(sum((v - mean) ** 2 for v in vals) / (t - 1) / t)
            out.append(GridPointResult(g, param_value(spec, exp.param), metric, rho, mean, se, t, failed, na, wall))
    return out


def _truthy(v) -> bool:
    return v is True or v == "True" or v == "1" or v == 1


# ---------------------------------------------------------------------------
# CSV output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _csv(rows: Iterable[dict[str, Any]], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def read_trials(path: str | os.PathLike) -> list[dict[str, Any]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_experiment(exp: Experiment, out_dir: str | os.PathLike | None = None) -> list[GridPointResult]:
    rows = run_trials(exp)
    results = aggregate(rows, exp)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_atomic(os.path.join(out_dir, "trials.csv"), _csv(rows, TRIAL_COLUMNS))
        write_atomic(os.path.join(out_dir, "aggregate.csv"), _csv((r.as_row() for r in results), AGGREGATE_COLUMNS))
    n_failed = sum(1 for r in rows if r["status"] != "ok")
    if n_failed:
        logger.warning("%d of %d trials failed", n_failed, len(rows))
    return results


def run_detection_experiment(exp: Experiment, out_dir=None) -> list[GridPointResult]:
    if exp.kind != "detection":
        raise ValueError("not a detection experiment")
    return run_experiment(exp, out_dir)


def run_test_experiment(exp: Experiment, out_dir=None) -> list[GridPointResult]:
    if exp.kind != "testing":
        raise ValueError("not a testing experiment")
    return run_experiment(exp, out_dir)


def check_aggregates(out_dir: str | os.PathLike, exp: Experiment) -> bool:
    """Recompute aggregate.csv from trials.csv and compare byte for byte."""
    rows = read_trials(os.path.join(out_dir, "trials.csv"))
    expected = _csv((r.as_row() for r in aggregate(rows, exp)), AGGREGATE_COLUMNS)
    with open(os.path.join(out_dir, "aggregate.csv"), encoding="utf-8", newline="") as fh:
        return fh.read() == expected
