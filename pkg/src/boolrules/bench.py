"""Experiment harness: cross-validated sparsity/clause-count sweeps,
minimal-error tables, and accuracy-vs-sparsity Pareto fronts.

A sweep runs every (algorithm, theta, R) cell over stratified folds.
Binarization thresholds are computed from each training fold and
applied to its test fold, so no test statistics leak into training
(a global-binarization mode reproduces the laxer protocol). Results
are written as versioned JSON lines plus CSV for plotting; files are
byte-identical for a fixed seed.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import (BinaryDataset, RawDataset, append_disable_column,
                   apply_binarization, binarize, load_csv, stratified_folds)
from .learners import ALGORITHMS, LearnConfig, learn
from .rules import (DNF, TwoLevelRule, error_rate, predict_all,
                    rule_conditions_from_json, rule_to_json)

RESULT_SCHEMA_VERSION = "boolrules.sweep/1"

#: A x 10^B for A in {1, 2, 5}, B in {-4, ..., 1}: 18 values.
DEFAULT_THETA_GRID = tuple(
    float(a * 10.0 ** b) for b in range(-4, 2) for a in (1, 2, 5)
)

WORKER_ENV_VAR = "BOOLRULES_WORKERS"


@dataclass(frozen=True)
class SweepGrid:
    """The sweep's hyperparameter lattice and protocol settings."""

    thetas: tuple = DEFAULT_THETA_GRID
    num_clauses: tuple = (1, 2, 3, 4, 5)
    algorithms: tuple = ALGORITHMS
    folds: int = 10
    seed: int = 0
    form: str = DNF
    quantiles: int = 9
    allow_disable: bool = False
    global_binarize: bool = False
    max_iters: int = 100
    lp_backend: str = "builtin"
    workers: int = 1

    def __post_init__(self):
        if len(self.thetas) == 0 or any(t <= 0 for t in self.thetas):
            raise ValueError("theta grid must be nonempty and strictly positive")
        unknown = set(a.lower() for a in self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        object.__setattr__(self, "algorithms", tuple(a.lower() for a in self.algorithms))


@dataclass(frozen=True)
class SweepRecord:
    algorithm: str
    theta: float
    num_clauses: int
    fold: int
    train_error: float | None
    test_error: float | None
    feature_count: float | None
    iterations: int | None
    wall_time: float | None
    error: str | None = None

    def key(self):
        return (self.algorithm, self.theta, self.num_clauses, self.fold)

    def to_json_dict(self, with_timing: bool = False) -> dict:
        doc = {
            "algorithm": self.algorithm,
            "theta": self.theta,
            "R": self.num_clauses,
            "fold": self.fold,
            "train_error": self.train_error,
            "test_error": self.test_error,
            "feature_count": self.feature_count,
            "iterations": self.iterations,
            "error": self.error,
        }
        if with_timing:
            doc["wall_time"] = self.wall_time
        return doc


@dataclass
class SweepResult:
    records: list = field(default_factory=list)
    grid: SweepGrid | None = None

    def ok_records(self):
        return [r for r in self.records if r.error is None]

    def to_jsonl(self, with_timing: bool = False) -> str:
        lines = [json.dumps({"schema": RESULT_SCHEMA_VERSION,
                             "seed": self.grid.seed if self.grid else None,
                             "folds": self.grid.folds if self.grid else None},
                            sort_keys=True)]
        for rec in sorted(self.records, key=SweepRecord.key):
            lines.append(json.dumps(rec.to_json_dict(with_timing), sort_keys=True))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["algorithm", "theta", "R", "fold", "train_error",
                         "test_error", "feature_count", "iterations", "error"])
        for rec in sorted(self.records, key=SweepRecord.key):
            writer.writerow([rec.algorithm, rec.theta, rec.num_clauses, rec.fold,
                             rec.train_error, rec.test_error, rec.feature_count,
                             rec.iterations, rec.error or ""])
        return buf.getvalue()

    @staticmethod
    def from_jsonl(text: str) -> "SweepResult":
        records = []
        for line in text.splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            if "schema" in doc:
                if doc["schema"] != RESULT_SCHEMA_VERSION:
                    raise ValueError(f"unsupported result schema {doc['schema']!r}")
                continue
            records.append(SweepRecord(
                algorithm=doc["algorithm"], theta=doc["theta"], num_clauses=doc["R"],
                fold=doc["fold"], train_error=doc["train_error"],
                test_error=doc["test_error"], feature_count=doc["feature_count"],
                iterations=doc["iterations"], wall_time=doc.get("wall_time"),
                error=doc.get("error")))
        return SweepResult(records)


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated (feature budget, error) points, feature count ascending."""

    points: tuple

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def _fold_datasets(raw: RawDataset, grid: SweepGrid, plan):
    """Per-fold (train, test) BinaryDatasets, leakage-free by default."""
    out = []
    global_ds = None
    if grid.global_binarize:
        global_ds = binarize(raw, grid.quantiles)
        if grid.allow_disable:
            global_ds = append_disable_column(global_ds)
    for fold in range(grid.folds):
        train_idx, test_idx = plan.train_test(fold)
        if global_ds is not None:
            out.append((global_ds.subset(train_idx), global_ds.subset(test_idx)))
            continue
        train = binarize(raw.subset(train_idx), grid.quantiles)
        if grid.allow_disable:
            train = append_disable_column(train)
        test = apply_binarization(raw.subset(test_idx), train.columns)
        out.append((train, test))
    return out


def _run_cell(train: BinaryDataset, test: BinaryDataset, algorithm: str,
              theta: float, R: int, fold: int, grid: SweepGrid) -> SweepRecord:
    cfg = LearnConfig(theta=theta, num_clauses=R, form=grid.form,
                      allow_disable=grid.allow_disable, max_iters=grid.max_iters,
                      seed=grid.seed, lp_backend=grid.lp_backend)
    start = time.perf_counter()
    try:
        rule, info = learn(train, algorithm, cfg)
        record = SweepRecord(
            algorithm=algorithm, theta=theta, num_clauses=R, fold=fold,
            train_error=error_rate(train, rule), test_error=error_rate(test, rule),
            feature_count=float(rule.feature_count(train.columns)),
            iterations=int(info.get("iterations", 0)),
            wall_time=time.perf_counter() - start)
    except Exception as exc:  # keep sweeping; the record carries the failure
        record = SweepRecord(algorithm=algorithm, theta=theta, num_clauses=R,
                             fold=fold, train_error=None, test_error=None,
                             feature_count=None, iterations=None,
                             wall_time=time.perf_counter() - start, error=str(exc))
    return record


def _run_fold(args):
    fold, train, test, cells, grid = args
    return [_run_cell(train, test, algo, theta, R, fold, grid)
            for algo, theta, R in cells]


def run_sweep(raw: RawDataset, grid: SweepGrid) -> SweepResult:
    """Train and score every (algorithm, theta, R, fold) cell.

    Deterministic for a fixed seed: folds, learners, and record order
    are all seed-driven; worker scheduling cannot reorder output.
    Learner failures are recorded per-cell and do not stop the sweep.
    """
    plan = stratified_folds(raw.labels, grid.folds, grid.seed)
    folds = _fold_datasets(raw, grid, plan)
    cells = [(algo, theta, R)
             for algo in grid.algorithms
             for theta in grid.thetas
             for R in grid.num_clauses]
    tasks = [(fold, train, test, cells, grid)
             for fold, (train, test) in enumerate(folds)]

    workers = grid.workers or int(os.environ.get(WORKER_ENV_VAR, "1"))
    records: list[SweepRecord] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_run_fold, tasks):
                records.extend(batch)
    else:
        for task in tasks:
            records.extend(_run_fold(task))
    records.sort(key=SweepRecord.key)
    return SweepResult(records, grid)


def _cell_means(result: SweepResult):
    """Fold-averaged (test_error, train_error, feature_count) per cell key."""
    groups: dict = {}
    for rec in result.ok_records():
        groups.setdefault((rec.algorithm, rec.num_clauses, rec.theta), []).append(rec)
    means = {}
    for key, recs in groups.items():
        means[key] = {
            "test_error": float(np.mean([r.test_error for r in recs])),
            "train_error": float(np.mean([r.train_error for r in recs])),
            "feature_count": float(np.mean([r.feature_count for r in recs])),
            "folds": len(recs),
        }
    return means


def min_error_table(result: SweepResult) -> dict:
    """Per (algorithm, R): the theta-minimized mean test error.

    Returns {(algorithm, R): {"test_error", "theta", "feature_count",
    "best_for_algorithm"}}, the last flag marking each algorithm's
    minimum over R.
    """
    means = _cell_means(result)
    table: dict = {}
    for (algo, R, theta), stats in means.items():
        cur = table.get((algo, R))
        if cur is None or stats["test_error"] < cur["test_error"] - 1e-12:
            table[(algo, R)] = {"test_error": stats["test_error"], "theta": theta,
                                "feature_count": stats["feature_count"],
                                "best_for_algorithm": False}
    best: dict = {}
    for (algo, R), entry in table.items():
        if algo not in best or entry["test_error"] < table[(algo, best[algo])]["test_error"]:
            best[algo] = R
    for algo, R in best.items():
        table[(algo, R)]["best_for_algorithm"] = True
    return table


def render_min_error_table(result: SweepResult) -> str:
    table = min_error_table(result)
    algos = sorted({k[0] for k in table})
    Rs = sorted({k[1] for k in table})
    header = "R    " + "".join(f"{a.upper():>10}" for a in algos)
    lines = [header]
    for R in Rs:
        row = [f"{R:<5}"]
        for a in algos:
            entry = table.get((a, R))
            if entry is None:
                row.append(f"{'-':>10}")
            else:
                mark = "*" if entry["best_for_algorithm"] else " "
                row.append(f"{100 * entry['test_error']:>8.1f}%{mark}")
        lines.append("".join(row))
    lines.append("(* = per-algorithm minimum over R; errors are fold-averaged, minimized over theta)")
    return "\n".join(lines)


def pareto_front(result: SweepResult, algorithm: str, num_clauses: int,
                 split: str = "test") -> ParetoFront:
    """Non-dominated (mean feature count, mean error) pairs over theta."""
    if split not in ("test", "train"):
        raise ValueError("split must be 'test' or 'train'")
    means = _cell_means(result)
    pts = [(stats["feature_count"], stats[f"{split}_error"])
           for (algo, R, _), stats in means.items()
           if algo == algorithm.lower() and R == num_clauses]
    pts.sort()
    front = []
    best = np.inf
    for fc, err in pts:
        if err < best - 1e-12:
            front.append((fc, err))
            best = err
    return ParetoFront(tuple(front))


def write_sweep_outputs(result: SweepResult, out_dir, timings: bool = False):
    """results.jsonl + results.csv + min-error table + Pareto point CSV."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.jsonl"), "w") as fh:
        fh.write(result.to_jsonl(with_timing=False))
    with open(os.path.join(out_dir, "results.csv"), "w") as fh:
        fh.write(result.to_csv())
    with open(os.path.join(out_dir, "min_error_table.txt"), "w") as fh:
        fh.write(render_min_error_table(result) + "\n")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["algorithm", "R", "split", "feature_count", "error"])
    keys = sorted({(r.algorithm, r.num_clauses) for r in result.ok_records()})
    for algo, R in keys:
        for split in ("train", "test"):
            for fc, err in pareto_front(result, algo, R, split):
                writer.writerow([algo, R, split, fc, err])
    with open(os.path.join(out_dir, "pareto.csv"), "w") as fh:
        fh.write(buf.getvalue())
    if timings:
        with open(os.path.join(out_dir, "timings.jsonl"), "w") as fh:
            fh.write(result.to_jsonl(with_timing=True))


def train_rule(raw: RawDataset, algorithm: str, cfg: LearnConfig,
               quantiles: int = 9):
    """Binarize the full dataset, learn one configuration, and return
    (rule, dataset, rule_json)."""
    ds = binarize(raw, quantiles)
    if cfg.allow_disable:
        ds = append_disable_column(ds)
    rule, info = learn(ds, algorithm, cfg)
    return rule, ds, rule_to_json(rule, ds.columns)


def _rule_from_conditions(text: str):
    form, clause_metas = rule_conditions_from_json(text)
    unique: list = []
    seen: dict = {}
    for metas in clause_metas:
        for m in metas:
            key = (m.origin_name, m.kind, m.threshold, m.direction, m.category, m.is_disable)
            if key not in seen:
                seen[key] = len(unique)
                unique.append(m)
    if not unique:
        # all clauses empty: the prediction is constant
        return form, [], np.zeros((0, len(clause_metas)), dtype=np.uint8)
    disable = [m for m in unique if m.is_disable]
    ordered = disable + [m for m in unique if not m.is_disable]
    index = {(m.origin_name, m.kind, m.threshold, m.direction, m.category, m.is_disable): j
             for j, m in enumerate(ordered)}
    W = np.zeros((len(ordered), len(clause_metas)), dtype=np.uint8)
    for r, metas in enumerate(clause_metas):
        for m in metas:
            W[index[(m.origin_name, m.kind, m.threshold, m.direction, m.category,
                     m.is_disable)], r] = 1
    return form, ordered, W


def predict_from_json(rule_text: str, raw: RawDataset) -> np.ndarray:
    """Apply a serialized rule to raw rows (binarizing on the fly)."""
    form, metas, W = _rule_from_conditions(rule_text)
    if not metas:  # every clause empty: AND () = 1 per DNF clause, OR () = 0 per CNF
        value = 1 if form == DNF else 0
        return np.full(raw.n, value, dtype=np.uint8)
    ds = apply_binarization(raw, metas)
    rule = TwoLevelRule.from_weights(W, form)
    return predict_all(ds, rule)


def explain_from_json(rule_text: str) -> str:
    """Render a serialized rule as IF/THEN text."""
    from .rules import describe_rule

    form, metas, W = _rule_from_conditions(rule_text)
    if not metas:
        return "IF\n     " + ("(TRUE)" if form == DNF else "(FALSE)") + "\nTHEN label = 1"
    rule = TwoLevelRule.from_weights(W, form)
    return describe_rule(rule, metas)


def load_dataset(data_path, schema_path) -> RawDataset:
    """Convenience loader used by the CLI: CSV plus JSON schema."""
    return load_csv(data_path, schema=schema_path)
