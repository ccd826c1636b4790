"""Two-level Boolean rules: representation, prediction, and cost functions.

A rule is R clauses over d binary columns. In CNF form a clause is the
OR of its selected columns and the prediction is the AND of clause
outputs; in DNF form a clause is the AND of its selected columns and
the prediction is the OR. A clause that selects the always-true
disable column is "disabled": it contributes the identity element of
the outer operator (1 under CNF, 0 under DNF).

Cost functions come in two flavors: a 0-1 misclassification count and
a per-sample minimal-Hamming-distance surrogate (the least number of
weight flips that would classify the sample correctly), both plus a
sparsity term weighting the selected columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import BinaryDataset, FeatureMeta

CNF = "CNF"
DNF = "DNF"

DC = -1  # don't-care code in IdealOutputs

RULE_SCHEMA_VERSION = "boolrules.rule/1"


@dataclass(frozen=True)
class Clause:
    """One clause: a 0/1 selection vector over the d columns."""

    w: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.uint8)
        if w.ndim != 1 or not np.isin(w, (0, 1)).all():
            raise ValueError("clause weights must be a 1-D 0/1 vector")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def feature_count(self) -> int:
        return int(self.w.sum())

    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.w)


@dataclass(frozen=True)
class TwoLevelRule:
    """R clauses plus the form tag (CNF: AND-of-ORs, DNF: OR-of-ANDs)."""

    clauses: tuple
    form: str = CNF

    def __post_init__(self):
        if self.form not in (CNF, DNF):
            raise ValueError(f"form must be {CNF} or {DNF}")
        clauses = tuple(self.clauses)
        if not clauses:
            raise ValueError("rule needs at least one clause")
        d = clauses[0].d
        if any(c.d != d for c in clauses):
            raise ValueError("clauses disagree on arity")
        object.__setattr__(self, "clauses", clauses)

    @property
    def R(self) -> int:
        return len(self.clauses)

    @property
    def d(self) -> int:
        return self.clauses[0].d

    def weight_matrix(self) -> np.ndarray:
        """Selection weights as a (d, R) 0/1 matrix."""
        return np.stack([c.w for c in self.clauses], axis=1)

    def with_clause(self, r: int, clause: Clause) -> "TwoLevelRule":
        if clause.d != self.d:
            raise ValueError("clause arity mismatch")
        new = list(self.clauses)
        new[r] = clause
        return TwoLevelRule(tuple(new), self.form)

    def feature_count(self, columns: list[FeatureMeta] | None = None) -> int:
        """Total selected weights, excluding the disable column when metadata is given."""
        W = self.weight_matrix()
        if columns is not None:
            keep = np.array([not m.is_disable for m in columns])
            W = W[keep]
        return int(W.sum())

    @staticmethod
    def from_weights(W, form: str = CNF) -> "TwoLevelRule":
        W = np.asarray(W)
        if W.ndim != 2:
            raise ValueError("weight matrix must be (d, R)")
        return TwoLevelRule(tuple(Clause(W[:, r]) for r in range(W.shape[1])), form)


@dataclass(frozen=True)
class CostReport:
    """Accuracy term plus weighted sparsity term of an objective."""

    accuracy_cost: float
    sparsity_cost: float

    def __post_init__(self):
        if self.accuracy_cost < 0 or self.sparsity_cost < 0:
            raise ValueError("cost terms must be nonnegative")

    @property
    def total(self) -> float:
        return self.accuracy_cost + self.sparsity_cost


class IdealOutputs:
    """Per-sample, per-clause target clause outputs over {0, 1, DC}.

    Consistency with the labels: a positive sample requires every
    entry 1; a negative sample requires at least one entry 0.
    """

    def __init__(self, v):
        v = np.ascontiguousarray(v, dtype=np.int8)
        if v.ndim != 2 or not np.isin(v, (0, 1, DC)).all():
            raise ValueError("ideal outputs must be an (n, R) matrix over {0, 1, DC}")
        v.setflags(write=False)
        self.v = v

    def validate(self, y) -> None:
        y = np.asarray(y)
        pos_bad = ((self.v[y == 1] != 1).any(axis=1)).any()
        neg_bad = (~(self.v[y == 0] == 0).any(axis=1)).any()
        if pos_bad or neg_bad:
            raise ValueError("ideal outputs inconsistent with labels")


def _check_arity(ds: BinaryDataset, d: int):
    if ds.d != d:
        raise ValueError(f"arity mismatch: dataset has {ds.d} columns, rule has {d}")


def clause_sums(a: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Per-sample selected-column sums, one column per clause: (n, R)."""
    return np.asarray(a, dtype=np.float64) @ np.asarray(W, dtype=np.float64)


def clause_outputs(ds: BinaryDataset, rule: TwoLevelRule) -> np.ndarray:
    """Raw OR-clause outputs (n, R) in {0,1}; form-independent (Eq.-level)."""
    _check_arity(ds, rule.d)
    return (clause_sums(ds.a, rule.weight_matrix()) >= 0.5).astype(np.uint8)


def eval_clause(ds: BinaryDataset, clause: Clause, i: int) -> int:
    """OR of the clause's selected columns on sample i (empty selection -> 0)."""
    _check_arity(ds, clause.d)
    return int((ds.a[i] & clause.w).any())


def _disabled_mask(ds: BinaryDataset, W: np.ndarray) -> np.ndarray:
    if ds.has_disable_column:
        return W[0] >= 0.5
    return np.zeros(W.shape[1], dtype=bool)


def predict_all(ds: BinaryDataset, rule: TwoLevelRule) -> np.ndarray:
    """Rule predictions for every sample, honoring the form and disable semantics."""
    _check_arity(ds, rule.d)
    W = rule.weight_matrix()
    S = clause_sums(ds.a, W)
    if rule.form == CNF:
        out = S >= 0.5  # disable column feeds the OR directly
        return out.all(axis=1).astype(np.uint8)
    counts = W.sum(axis=0)
    conj = S >= counts - 0.5  # all selected columns present (empty AND -> 1)
    conj[:, _disabled_mask(ds, W)] = False
    return conj.any(axis=1).astype(np.uint8)


def predict(ds: BinaryDataset, rule: TwoLevelRule, i: int) -> int:
    return int(predict_all(ds.subset([i]), rule)[0])


def error_rate(ds: BinaryDataset, rule: TwoLevelRule) -> float:
    """Fraction of misclassified samples."""
    if ds.n < 1:
        raise ValueError("empty dataset")
    return float(np.abs(predict_all(ds, rule).astype(int) - ds.y.astype(int)).mean())


def de_morgan(rule: TwoLevelRule, ds: BinaryDataset) -> TwoLevelRule:
    """Dual-form rule: every selected column is replaced by its complement
    column and the form flips, so dual predictions are the pointwise
    negation of the original's. The disable selection maps to itself.
    """
    _check_arity(ds, rule.d)
    neg = ds.negation_index()
    W = rule.weight_matrix()
    Wd = np.zeros_like(W)
    for r in range(rule.R):
        for j in np.flatnonzero(W[:, r]):
            if neg[j] < 0:  # disable column
                Wd[j, r] = 1
            else:
                Wd[neg[j], r] = 1
    return TwoLevelRule.from_weights(Wd, DNF if rule.form == CNF else CNF)


def sparsity_cost(W, theta: float, column_costs) -> float:
    W = np.asarray(W, dtype=np.float64)
    costs = np.asarray(column_costs, dtype=np.float64)
    return float(theta * costs @ W.sum(axis=1))


def _resolve_costs(ds: BinaryDataset, column_costs):
    if column_costs is None:
        return ds.column_costs()
    costs = np.asarray(column_costs, dtype=np.float64)
    if costs.shape != (ds.d,):
        raise ValueError("column_costs length must equal dataset arity")
    return costs


def zero_one_cost(ds: BinaryDataset, rule: TwoLevelRule, theta: float,
                  column_costs=None) -> CostReport:
    """Misclassification count plus theta-weighted selected-column cost."""
    costs = _resolve_costs(ds, column_costs)
    acc = float(np.abs(predict_all(ds, rule).astype(int) - ds.y.astype(int)).sum())
    return CostReport(acc, sparsity_cost(rule.weight_matrix(), theta, costs))


def hamming_accuracy(a, y, W) -> float:
    """Sum of per-sample minimal Hamming distances to a correctly
    classifying CNF rule; accepts fractional weights."""
    S = clause_sums(a, W)
    y = np.asarray(y)
    pos = np.maximum(0.0, 1.0 - S[y == 1]).sum()
    Sn = S[y == 0]
    neg = Sn.min(axis=1).sum() if Sn.size else 0.0
    return float(pos + neg)


def hamming_cost(ds: BinaryDataset, rule, theta: float, column_costs=None) -> CostReport:
    """Minimal-Hamming-distance objective of a CNF rule (or raw weights).

    `rule` may be a TwoLevelRule (must be CNF; dualize DNF rules first)
    or a (d, R) weight matrix, fractional entries allowed.
    """
    if isinstance(rule, TwoLevelRule):
        if rule.form != CNF:
            raise ValueError("hamming_cost is defined for CNF rules; apply de_morgan first")
        W = rule.weight_matrix()
    else:
        W = np.asarray(rule, dtype=np.float64)
        _check_arity(ds, W.shape[0])
    costs = _resolve_costs(ds, column_costs)
    return CostReport(hamming_accuracy(ds.a, ds.y, W), sparsity_cost(W, theta, costs))


def zero_one_relaxed_accuracy(a, y, W) -> float:
    """0-1 error cost extended to fractional weights via the tightest
    convex/concave clause interpolations; equals the misclassification
    count at binary weights."""
    a = np.asarray(a)
    W = np.asarray(W, dtype=np.float64)
    y = np.asarray(y)
    R = W.shape[1]
    S = clause_sums(a, W)
    pos = np.maximum(0.0, 1.0 - S[y == 1].min(axis=1)).sum() if (y == 1).any() else 0.0
    neg = 0.0
    an = a[y == 0]
    if an.shape[0]:
        M = np.empty((an.shape[0], R))
        for r in range(R):
            M[:, r] = (an * W[:, r]).max(axis=1)
        neg = np.maximum(0.0, M.sum(axis=1) - (R - 1)).sum()
    return float(pos + neg)


def joint_accuracy(a, y, W, v) -> float:
    S = clause_sums(a, W)
    hinge = np.maximum(0.0, 1.0 - S)
    return float(hinge[v == 1].sum() + S[v == 0].sum())


def joint_cost(ds: BinaryDataset, rule, v: IdealOutputs, theta: float,
               column_costs=None) -> CostReport:
    """Objective coupling weights with ideal clause outputs: hinge terms
    where v=1, selected-hit sums where v=0, nothing where v=DC."""
    if isinstance(rule, TwoLevelRule):
        if rule.form != CNF:
            raise ValueError("joint_cost is defined for CNF rules")
        W = rule.weight_matrix()
    else:
        W = np.asarray(rule, dtype=np.float64)
    v.validate(ds.y)
    if v.v.shape != (ds.n, W.shape[1]):
        raise ValueError("ideal outputs shape must be (n, R)")
    costs = _resolve_costs(ds, column_costs)
    return CostReport(joint_accuracy(ds.a, ds.y, W, v.v), sparsity_cost(W, theta, costs))


def rule_to_json(rule: TwoLevelRule, columns: list[FeatureMeta]) -> str:
    """Serialize a rule with resolved, self-contained column conditions."""
    if len(columns) != rule.d:
        raise ValueError("column metadata arity mismatch")
    clauses = []
    for clause in rule.clauses:
        conds = [columns[j].to_dict() for j in clause.selected()]
        disabled = any(columns[j].is_disable for j in clause.selected())
        clauses.append({"conditions": conds, "disabled": disabled})
    doc = {
        "schema": RULE_SCHEMA_VERSION,
        "form": rule.form,
        "num_clauses": rule.R,
        "clauses": clauses,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def rule_conditions_from_json(text: str):
    """Parse a serialized rule into (form, clauses-as-FeatureMeta-lists)."""
    doc = json.loads(text)
    if doc.get("schema") != RULE_SCHEMA_VERSION:
        raise ValueError(f"unsupported rule schema {doc.get('schema')!r}")
    clauses = [[FeatureMeta.from_dict(c) for c in cl["conditions"]] for cl in doc["clauses"]]
    return doc["form"], clauses


def describe_rule(rule: TwoLevelRule, columns: list[FeatureMeta],
                  positive: str = "label = 1") -> str:
    """Render a rule as IF/THEN text with resolved feature conditions."""
    inner, outer = (" OR ", "AND") if rule.form == CNF else (" AND ", "OR")
    lines = ["IF"]
    body = []
    for clause in rule.clauses:
        sel = clause.selected()
        if any(columns[j].is_disable for j in sel):
            continue  # disabled clause: no effect on the prediction
        terms = [columns[j].describe() for j in sel]
        if not terms:
            body.append("(FALSE)" if rule.form == CNF else "(TRUE)")
        else:
            body.append("(" + inner.join(terms) + ")")
    if not body:
        body.append("(TRUE)" if rule.form == CNF else "(FALSE)")
    pad = " " * (len(outer) + 1)
    for k, part in enumerate(body):
        lines.append((pad if k == 0 else outer + " ") + part)
    lines.append(f"THEN {positive}")
    return "\n".join(lines)
