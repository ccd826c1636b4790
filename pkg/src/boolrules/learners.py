"""Rule-learning algorithms.

Five learners share one building block, the one-level LP: a single
OR-clause is fit by relaxing the selection weights to [0, 1], solving
the resulting linear program, and rounding the solution back to binary
with the binarization module.

- learn_one_level: the building block itself.
- learn_set_cover: greeds R clauses by repeatedly fitting a clause and
  retiring samples whose prediction that clause has fixed.
- learn_tlp: one LP relaxation of the full 0-1-error program over all
  clauses at once, built from the tightest convex/concave
  interpolations of AND/OR.
- learn_bcd: block coordinate descent on the minimal-Hamming objective,
  re-fitting one clause at a time on a filtered sample set.
- learn_am: alternating minimization between clause weights and ideal
  clause outputs, with an L1 cluster-center rule breaking assignment
  ties among clauses.

Everything internally learns CNF; DNF is requested through the config
and obtained by learning on negated labels and dualizing the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import binarize as bz
from .data import BinaryDataset
from .lp import EPS_INT, OPTIMAL, LinearProgram, solve
from .rules import (CNF, DC, DNF, Clause, IdealOutputs, TwoLevelRule,
                    clause_outputs, de_morgan, hamming_accuracy, sparsity_cost)

ALGORITHMS = ("scs", "scn", "tlp", "bcd", "am")


@dataclass(frozen=True)
class LearnConfig:
    """Shared learner settings.

    theta          sparsity weight in every objective
    num_clauses    clause count R
    form           CNF or DNF (DNF learns on negated labels, then dualizes)
    allow_disable  expect the always-true column and let clauses select it
    max_iters      iteration cap for the descent learners
    seed           RNG seed (used only by randomized update orders)
    column_costs   per-column sparsity weights; default 1 (0 for disable)
    binarization   "redundancy" or "simple"
    simple_threshold  cut for simple binarization
    update_order   BCD clause choice: "greedy", "cyclic", or "random"
    lp_backend     "builtin" or "scipy"
    placeholder    evaluation point for pending origins while rounding
    """

    theta: float
    num_clauses: int = 1
    form: str = CNF
    allow_disable: bool = False
    max_iters: int = 100
    seed: int = 0
    column_costs: tuple | None = None
    binarization: str = "redundancy"
    simple_threshold: float = 0.2
    update_order: str = "greedy"
    lp_backend: str = "builtin"
    placeholder: str = "fractional"

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        if self.num_clauses < 1:
            raise ValueError("need at least one clause")
        if self.max_iters < 1:
            raise ValueError("need at least one iteration")
        if self.form not in (CNF, DNF):
            raise ValueError("form must be CNF or DNF")
        if self.binarization not in ("redundancy", "simple"):
            raise ValueError("binarization must be 'redundancy' or 'simple'")
        if self.update_order not in ("greedy", "cyclic", "random"):
            raise ValueError("update_order must be greedy, cyclic, or random")


@dataclass(frozen=True)
class FractionalSolution:
    """Relaxed weights straight out of an LP, before binarization."""

    w: np.ndarray  # (d, R) in [0, 1]
    objective_value: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError("fractional weights must be (d, R)")
        if (w < -EPS_INT).any() or (w > 1 + EPS_INT).any():
            raise ValueError("fractional weights escape [0, 1] beyond tolerance")
        w = np.clip(w, 0.0, 1.0)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class TraceStep:
    iteration: int
    objective: float
    update: str


@dataclass
class LearnTrace:
    steps: list = field(default_factory=list)

    def record(self, iteration: int, objective: float, update: str):
        self.steps.append(TraceStep(iteration, float(objective), update))

    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.steps])

    def is_non_increasing(self, tol: float = 1e-9) -> bool:
        obj = self.objectives()
        return bool((np.diff(obj) <= tol).all()) if len(obj) > 1 else True

    def __len__(self) -> int:
        return len(self.steps)


def _resolve_costs(ds: BinaryDataset, cfg: LearnConfig) -> np.ndarray:
    if cfg.column_costs is None:
        return ds.column_costs()
    costs = np.asarray(cfg.column_costs, dtype=np.float64)
    if costs.shape != (ds.d,):
        raise ValueError("column_costs length must equal dataset arity")
    return costs


def _check_disable(ds: BinaryDataset, cfg: LearnConfig):
    if cfg.allow_disable and not ds.has_disable_column:
        raise ValueError("allow_disable requires the dataset's disable column "
                         "(see append_disable_column)")


def _cnf_view(ds: BinaryDataset, cfg: LearnConfig) -> BinaryDataset:
    """Dataset on which the internal CNF rule is learned."""
    if cfg.form == CNF:
        return ds
    return ds.with_labels(1 - ds.y)


def _binarize_clause(w_frac: np.ndarray, sub: BinaryDataset, theta: float,
                     costs: np.ndarray, cfg: LearnConfig, objective: str) -> np.ndarray:
    if cfg.binarization == "simple":
        return bz.simple_binarize(w_frac, cfg.simple_threshold)
    return bz.redundancy_binarize(w_frac, sub, theta, costs, objective=objective,
                                  placeholder=cfg.placeholder)


def _one_level_program(a: np.ndarray, y: np.ndarray, theta: float,
                       costs: np.ndarray) -> LinearProgram:
    """Variables: d clause weights, then one hinge slack per positive
    sample. Negative samples enter the objective directly as
    per-column hit counts."""
    n, d = a.shape
    pos = np.flatnonzero(y == 1)
    neg_hits = a[y == 0].sum(axis=0).astype(np.float64)
    c = np.concatenate([theta * costs + neg_hits, np.ones(len(pos))])
    rows = []
    for k, i in enumerate(pos):
        supp = np.flatnonzero(a[i]).tolist()
        rows.append((supp + [d + k], [1.0] * (len(supp) + 1)))
    nvar = d + len(pos)
    return LinearProgram.from_rows(c, rows, [">="] * len(pos), np.ones(len(pos)),
                                   lo=np.zeros(nvar), hi=np.ones(nvar))


def learn_one_level(ds: BinaryDataset, subset=None, theta: float = 0.0,
                    column_costs=None, cfg: LearnConfig | None = None,
                    ) -> tuple[FractionalSolution, Clause]:
    """Fit a single OR-clause by LP relaxation plus binarization.

    `subset` restricts training to those sample indices; labels travel
    with the dataset view, so callers can relabel via
    ``ds.subset(idx, labels)`` or ``ds.with_labels``.
    """
    if cfg is None:
        cfg = LearnConfig(theta=theta)
    sub = ds if subset is None else ds.subset(subset)
    if sub.n == 0:
        raise ValueError("cannot learn a clause from an empty sample set")
    costs = _resolve_costs(sub, cfg) if column_costs is None else np.asarray(column_costs)
    lp = _one_level_program(sub.a, sub.y, theta, costs)
    start = np.zeros(lp.num_vars, dtype=bool)
    start[sub.d:] = True  # hinge slacks at 1: a feasible do-nothing start
    sol = solve(lp, backend=cfg.lp_backend, start_upper=start)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"one-level LP solve failed with status {sol.status}")
    frac = FractionalSolution(sol.x[: sub.d][:, None], sol.objective_value)
    W_bin = _binarize_clause(frac.w, sub, theta, costs, cfg, objective="hamming")
    return frac, Clause(W_bin[:, 0])


def _fill_clause(ds: BinaryDataset, cfg: LearnConfig) -> Clause:
    w = np.zeros(ds.d, dtype=np.uint8)
    if cfg.allow_disable and ds.has_disable_column:
        w[0] = 1
    return Clause(w)


def _set_cover_cnf(work: BinaryDataset, cfg: LearnConfig, costs: np.ndarray) -> TwoLevelRule:
    """CNF set covering: fit a clause, retire the samples it already
    pins to prediction 0, repeat."""
    remaining = np.arange(work.n)
    clauses = []
    for _ in range(cfg.num_clauses):
        if remaining.size == 0:
            break
        _, clause = learn_one_level(work, remaining, cfg.theta, costs, cfg)
        clauses.append(clause)
        out = (work.a[remaining] @ clause.w.astype(np.int64)) >= 1
        remaining = remaining[out]
    while len(clauses) < cfg.num_clauses:
        clauses.append(_fill_clause(work, cfg))
    return TwoLevelRule(tuple(clauses), CNF)


def learn_set_cover(ds: BinaryDataset, cfg: LearnConfig) -> TwoLevelRule:
    """Greedy set-covering two-level rule (one pass, no refinement)."""
    _check_disable(ds, cfg)
    work = _cnf_view(ds, cfg)
    costs = _resolve_costs(work, cfg)
    rule = _set_cover_cnf(work, cfg, costs)
    return de_morgan(rule, ds) if cfg.form == DNF else rule


def bcd_filter_samples(ds: BinaryDataset, rule: TwoLevelRule, clause_index: int,
                       ) -> np.ndarray:
    """Samples relevant to re-fitting one clause: every positive, plus
    negatives not already predicted 0 by some other clause."""
    if rule.form != CNF:
        raise ValueError("bcd_filter_samples expects the internal CNF rule")
    if not 0 <= clause_index < rule.R:
        raise ValueError(f"clause index {clause_index} out of range")
    outputs = clause_outputs(ds, rule)
    others = np.delete(outputs, clause_index, axis=1)
    keep = (ds.y == 1) | others.all(axis=1)
    return np.flatnonzero(keep)


def _hamming_total(work: BinaryDataset, rule: TwoLevelRule, theta: float,
                   costs: np.ndarray) -> float:
    W = rule.weight_matrix()
    return hamming_accuracy(work.a, work.y, W) + sparsity_cost(W, theta, costs)


def _relearn_clause(work: BinaryDataset, idx: np.ndarray, labels, cfg: LearnConfig,
                    costs: np.ndarray) -> Clause:
    if idx.size == 0:
        return Clause(np.zeros(work.d, dtype=np.uint8))
    sub = work.subset(idx, labels)
    _, clause = learn_one_level(sub, None, cfg.theta, costs, cfg)
    return clause


def learn_bcd(ds: BinaryDataset, cfg: LearnConfig) -> tuple[TwoLevelRule, LearnTrace]:
    """Block coordinate descent on the minimal-Hamming objective.

    Starts from the set-covering rule. Each iteration tentatively
    re-fits candidate clauses on their filtered sample sets and accepts
    the cheapest full-rule candidate only if it strictly improves the
    objective (the clause fit is LP plus rounding, so a tentative
    update can cost more; rejecting those keeps the accepted trace
    non-increasing and guarantees termination). The returned rule
    attains the trace minimum.
    """
    _check_disable(ds, cfg)
    work = _cnf_view(ds, cfg)
    costs = _resolve_costs(work, cfg)
    rule = _set_cover_cnf(work, cfg, costs)
    total = _hamming_total(work, rule, cfg.theta, costs)
    trace = LearnTrace()
    trace.record(0, total, "init")
    rng = np.random.default_rng(cfg.seed)

    for it in range(1, cfg.max_iters + 1):
        if cfg.update_order == "greedy":
            candidates = range(rule.R)
        elif cfg.update_order == "cyclic":
            candidates = [(it - 1) % rule.R]
        else:
            candidates = [int(rng.integers(rule.R))]
        best_cost, best_rule, best_r = None, None, None
        for r0 in candidates:
            idx = bcd_filter_samples(work, rule, r0)
            clause = _relearn_clause(work, idx, None, cfg, costs)
            cand = rule.with_clause(r0, clause)
            cost = _hamming_total(work, cand, cfg.theta, costs)
            if best_cost is None or cost < best_cost:
                best_cost, best_rule, best_r = cost, cand, r0
        if best_cost is not None and best_cost < total - 1e-9:
            rule, total = best_rule, best_cost
            trace.record(it, total, f"clause {best_r}")
        else:
            break

    final = de_morgan(rule, ds) if cfg.form == DNF else rule
    return final, trace


def am_update_v(ds: BinaryDataset, rule: TwoLevelRule):
    """Ideal clause outputs for the current rule.

    Positives demand 1 from every clause. Each negative assigns its 0
    to a clause hit by the fewest of its selected columns; ties go to
    the tied clause whose cluster center (mean feature vector of the
    negatives for which that clause is minimal, ties included) is
    nearest in L1 distance, then to the lowest clause index.
    """
    if rule.form != CNF:
        raise ValueError("am_update_v expects the internal CNF rule")
    W = rule.weight_matrix().astype(np.float64)
    n, R = ds.n, rule.R
    v = np.full((n, R), DC, dtype=np.int8)
    v[ds.y == 1] = 1

    neg_idx = np.flatnonzero(ds.y == 0)
    if neg_idx.size == 0:
        return IdealOutputs(v)
    an = ds.a[neg_idx].astype(np.float64)
    S = an @ W
    mins = S.min(axis=1, keepdims=True)
    minimal = S <= mins + 1e-9  # (nneg, R), True where the clause attains the minimum

    unique = minimal.sum(axis=1) == 1
    for k in np.flatnonzero(unique):
        v[neg_idx[k], int(np.argmax(minimal[k]))] = 0

    tied = np.flatnonzero(~unique)
    if tied.size:
        counts = minimal.sum(axis=0).astype(np.float64)
        centers = np.zeros((R, ds.d))
        nonzero = counts > 0
        centers[nonzero] = (minimal.T.astype(np.float64) @ an)[nonzero] / counts[nonzero, None]
        # L1 distance of 0/1 rows to centers: a(1-c) + (1-a)c summed over columns
        Dist = an @ (1.0 - centers.T) + (1.0 - an) @ centers.T
        for k in tied:
            d_masked = np.where(minimal[k], Dist[k], np.inf)
            v[neg_idx[k], int(np.argmin(d_masked))] = 0
    return IdealOutputs(v)


def learn_am(ds: BinaryDataset, cfg: LearnConfig) -> tuple[TwoLevelRule, LearnTrace]:
    """Alternating minimization between clause weights and ideal outputs.

    Starts from the set-covering rule. Each iteration reassigns ideal
    outputs for the current weights, then re-fits every clause on its
    non-don't-care samples relabeled by those outputs (the clause fits
    are independent). The iteration is accepted only on strict
    improvement of the objective and the run stops at the first
    non-improving iteration, so the trace is non-increasing and the
    returned rule attains its minimum.
    """
    _check_disable(ds, cfg)
    work = _cnf_view(ds, cfg)
    costs = _resolve_costs(work, cfg)
    rule = _set_cover_cnf(work, cfg, costs)
    total = _hamming_total(work, rule, cfg.theta, costs)
    trace = LearnTrace()
    trace.record(0, total, "init")

    for it in range(1, cfg.max_iters + 1):
        ideal = am_update_v(work, rule)
        clauses = []
        for r in range(rule.R):
            idx = np.flatnonzero(ideal.v[:, r] != DC)
            labels = ideal.v[idx, r]
            clauses.append(_relearn_clause(work, idx, labels, cfg, costs))
        cand = TwoLevelRule(tuple(clauses), CNF)
        cost = _hamming_total(work, cand, cfg.theta, costs)
        if cost < total - 1e-9:
            rule, total = cand, cost
            trace.record(it, total, "sweep")
        else:
            break

    final = de_morgan(rule, ds) if cfg.form == DNF else rule
    return final, trace


def _tlp_program(a: np.ndarray, y: np.ndarray, theta: float, costs: np.ndarray,
                 R: int) -> LinearProgram:
    """Relaxation of the 0-1-error program. Variable layout: clause
    weights (d per clause), per-sample error, then per-negative
    per-clause convex-OR bounds."""
    n, d = a.shape
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    n_w = d * R
    n_beta = len(neg) * R

    def w_idx(j, r):
        return r * d + j

    def psi_idx(i):
        return n_w + i

    def beta_idx(k, r):
        return n_w + n + r * len(neg) + k

    c = np.concatenate([np.tile(theta * costs, R), np.ones(n), np.zeros(n_beta)])
    rows, rels, rhs = [], [], []
    for i in pos:
        supp = np.flatnonzero(a[i])
        for r in range(R):
            idx = [w_idx(j, r) for j in supp] + [psi_idx(i)]
            rows.append((idx, [1.0] * len(idx)))
            rels.append(">=")
            rhs.append(1.0)
    for k, i in enumerate(neg):
        supp = np.flatnonzero(a[i])
        for r in range(R):
            for j in supp:
                rows.append((([beta_idx(k, r), w_idx(j, r)]), [1.0, -1.0]))
                rels.append(">=")
                rhs.append(0.0)
        idx = [psi_idx(i)] + [beta_idx(k, r) for r in range(R)]
        rows.append((idx, [1.0] + [-1.0] * R))
        rels.append(">=")
        rhs.append(-(R - 1.0))
    nvar = n_w + n + n_beta
    return LinearProgram.from_rows(c, rows, rels, rhs,
                                   lo=np.zeros(nvar), hi=np.ones(nvar))


def learn_tlp(ds: BinaryDataset, cfg: LearnConfig) -> tuple[FractionalSolution, TwoLevelRule]:
    """Two-level LP relaxation of the 0-1-error objective.

    At R=1 this degenerates to the one-level LP (the convex-OR bounds
    collapse), so the one-level pipeline is used verbatim. The reported
    rule costs should be recomputed from the binarized rule; the LP's
    error terms are not trusted (the interpolation gap can drive them
    toward zero).
    """
    _check_disable(ds, cfg)
    work = _cnf_view(ds, cfg)
    costs = _resolve_costs(work, cfg)
    if cfg.num_clauses == 1:
        frac, clause = learn_one_level(work, None, cfg.theta, costs, cfg)
        rule = TwoLevelRule((clause,), CNF)
        return frac, de_morgan(rule, ds) if cfg.form == DNF else rule

    lp = _tlp_program(work.a, work.y, cfg.theta, costs, cfg.num_clauses)
    start = np.zeros(lp.num_vars, dtype=bool)
    start[work.d * cfg.num_clauses:] = True  # errors and OR bounds at 1
    sol = solve(lp, backend=cfg.lp_backend, start_upper=start)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"two-level LP solve failed with status {sol.status}")
    W_frac = sol.x[: work.d * cfg.num_clauses].reshape(work.d, cfg.num_clauses, order="F")
    frac = FractionalSolution(W_frac, sol.objective_value)
    if cfg.binarization == "simple":
        W_bin = bz.simple_binarize(frac.w, cfg.simple_threshold)
    else:
        W_bin = bz.redundancy_binarize(frac.w, work, cfg.theta, costs,
                                       objective="zero_one", placeholder=cfg.placeholder)
    rule = TwoLevelRule.from_weights(W_bin, CNF)
    return frac, de_morgan(rule, ds) if cfg.form == DNF else rule


def learn(ds: BinaryDataset, algorithm: str, cfg: LearnConfig):
    """Dispatch by algorithm tag; returns (rule, info dict).

    Tags: scs / scn (set covering with simple / redundancy-aware
    binarization), tlp, bcd, am.
    """
    algorithm = algorithm.lower()
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if algorithm == "scs":
        rule = learn_set_cover(ds, replace(cfg, binarization="simple"))
        return rule, {"iterations": rule.R}
    if algorithm == "scn":
        rule = learn_set_cover(ds, replace(cfg, binarization="redundancy"))
        return rule, {"iterations": rule.R}
    if algorithm == "tlp":
        frac, rule = learn_tlp(ds, cfg)
        return rule, {"iterations": 1, "fractional": frac}
    if algorithm == "bcd":
        rule, trace = learn_bcd(ds, cfg)
        return rule, {"iterations": len(trace) - 1, "trace": trace}
    rule, trace = learn_am(ds, cfg)
    return rule, {"iterations": len(trace) - 1, "trace": trace}
