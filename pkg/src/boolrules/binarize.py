"""Rounding fractional LP weights into binary clause selections.

Besides plain thresholding, this module implements a redundancy-aware
procedure: columns derived from one origin feature are swept jointly,
considering only combinations that can appear in an optimal clause.
Within one clause, two same-direction thresholds of one origin are
never both useful (the weaker is implied); with the disable option
available, complement pairs and threshold pairs whose union covers
everything are likewise never both useful. Candidates are scored by
the active training objective at the current evaluation point and the
best is committed, origin by origin, in decreasing fractional-mass
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import GT, LEQ, BinaryDataset, FeatureMeta
from .lp import EPS_INT, is_integral
from .rules import clause_sums

NO_DISABLE = "no-disable"
DISABLE = "disable"


@dataclass(frozen=True)
class OriginGroup:
    """All binary columns induced by one origin feature."""

    key: tuple
    leq: tuple  # ((threshold, column), ...) ascending threshold
    gt: tuple
    is_disable: bool = False

    @property
    def columns(self) -> tuple:
        return tuple(c for _, c in self.leq) + tuple(c for _, c in self.gt)


@dataclass(frozen=True)
class RedundancyIndex:
    groups: tuple

    def group(self, key) -> OriginGroup:
        for g in self.groups:
            if g.key == key:
                return g
        raise KeyError(key)


def _sort_key(meta_key):
    return tuple((str(type(part)), str(part)) for part in meta_key)


def build_redundancy_index(columns: list[FeatureMeta], data: np.ndarray | None = None,
                           ) -> RedundancyIndex:
    """Group columns by origin and order their threshold chains.

    When `data` (the binary matrix) is given, the nesting and
    complement relations implied by the metadata are verified against
    the actual columns and inconsistencies raise ValueError; without
    it the metadata is trusted.
    """
    buckets: dict = {}
    for j, meta in enumerate(columns):
        buckets.setdefault(meta.group_key(), []).append((j, meta))

    groups = []
    for key in sorted(buckets, key=_sort_key):
        members = buckets[key]
        if members[0][1].is_disable:
            groups.append(OriginGroup(key, ((None, members[0][0]),), (), is_disable=True))
            continue
        leq = sorted(((m.threshold, j) for j, m in members if m.direction == LEQ),
                     key=lambda t: (t[0] is None, t[0], t[1]))
        gt = sorted(((m.threshold, j) for j, m in members if m.direction == GT),
                    key=lambda t: (t[0] is None, t[0], t[1]))
        groups.append(OriginGroup(key, tuple(leq), tuple(gt)))

    index = RedundancyIndex(tuple(groups))
    if data is not None:
        _verify_index(index, np.asarray(data))
    return index


def _verify_index(index: RedundancyIndex, a: np.ndarray):
    for g in index.groups:
        if g.is_disable:
            if not (a[:, g.leq[0][1]] == 1).all():
                raise ValueError("disable column is not all-ones")
            continue
        for (t1, j1), (t2, j2) in zip(g.leq, g.leq[1:]):
            if (a[:, j1] > a[:, j2]).any():
                raise ValueError(f"LEQ columns {j1}, {j2} of origin {g.key} are not nested")
        for (t1, j1), (t2, j2) in zip(g.gt, g.gt[1:]):
            if (a[:, j1] < a[:, j2]).any():
                raise ValueError(f"GT columns {j1}, {j2} of origin {g.key} are not nested")
        gt_by_tau = {t: j for t, j in g.gt}
        for t, j in g.leq:
            k = gt_by_tau.get(t)
            if k is not None and ((a[:, j] + a[:, k]) != 1).any():
                raise ValueError(f"columns {j}, {k} of origin {g.key} are not complements")


def enumerate_candidates(index: RedundancyIndex, key, regime: str) -> list[tuple]:
    """All column subsets of one origin admissible in a single clause.

    Candidates are ordered sparsest-first, then lexicographically, so a
    stable argmin over this list realizes the tie-breaking rule.
    """
    if regime not in (NO_DISABLE, DISABLE):
        raise ValueError(f"regime must be {NO_DISABLE!r} or {DISABLE!r}")
    g = index.group(key) if not isinstance(key, OriginGroup) else key
    if g.is_disable:
        return [(), (g.leq[0][1],)]
    cands: list[tuple] = [()]
    cands.extend((j,) for _, j in g.leq)
    cands.extend((j,) for _, j in g.gt)
    pairs = []
    for tl, jl in g.leq:
        for tg, jg in g.gt:
            if regime == DISABLE:
                # complement pairs and always-true unions never help a
                # clause that could be disabled instead
                if tl is None or tg is None or not tl < tg:
                    continue
            pairs.append(tuple(sorted((jl, jg))))
    cands.extend(pairs)
    cands.sort(key=lambda t: (len(t), t))
    return cands


def simple_binarize(fractional: np.ndarray, threshold: float = 0.2) -> np.ndarray:
    """Threshold every weight: 1 iff its fractional value >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("binarization threshold must lie strictly inside (0, 1)")
    W = np.asarray(fractional, dtype=np.float64)
    return (W >= threshold).astype(np.uint8)


class _HammingScore:
    """Batch candidate scoring under the minimal-Hamming objective."""

    def __init__(self, a, y, W_eval):
        self.a = np.asarray(a, dtype=np.float64)
        self.pos = np.asarray(y) == 1
        self.neg = ~self.pos
        self.S = clause_sums(self.a, W_eval)

    def score(self, r, group_cols, cand_matrix, W_col):
        Ag = self.a[:, group_cols]
        base = self.S[:, r] - Ag @ W_col[list(group_cols)]
        cand_S = base[:, None] + Ag @ cand_matrix
        cost = np.maximum(0.0, 1.0 - cand_S[self.pos]).sum(axis=0)
        if self.neg.any():
            others = np.delete(self.S[self.neg], r, axis=1)
            floor = others.min(axis=1) if others.shape[1] else np.full(self.neg.sum(), np.inf)
            cost = cost + np.minimum(floor[:, None], cand_S[self.neg]).sum(axis=0)
        return cost, cand_S

    def commit(self, r, cand_S_col, cand_index=None):
        self.S[:, r] = cand_S_col


class _ZeroOneScore:
    """Batch candidate scoring under the relaxed 0-1 error objective."""

    def __init__(self, a, y, W_eval):
        self.a = np.asarray(a, dtype=np.float64)
        self.pos = np.asarray(y) == 1
        self.neg = ~self.pos
        self.S = clause_sums(self.a, W_eval)
        self.an = self.a[self.neg]
        R = W_eval.shape[1]
        self.M = np.empty((self.an.shape[0], R))
        for r in range(R):
            self.M[:, r] = (self.an * W_eval[:, r]).max(axis=1) if self.an.size else 0.0
        self.R = R

    def score(self, r, group_cols, cand_matrix, W_col):
        cols = list(group_cols)
        Ag = self.a[:, cols]
        base = self.S[:, r] - Ag @ W_col[cols]
        cand_S = base[:, None] + Ag @ cand_matrix
        if self.pos.any():
            others = np.delete(self.S[self.pos], r, axis=1)
            floor = others.min(axis=1) if others.shape[1] else np.full(self.pos.sum(), np.inf)
            pos_cost = np.maximum(0.0, 1.0 - np.minimum(floor[:, None], cand_S[self.pos])).sum(axis=0)
        else:
            pos_cost = 0.0
        ncand = cand_matrix.shape[1]
        if self.an.shape[0]:
            w_ex = W_col.copy()
            w_ex[cols] = 0.0
            M_ex = (self.an * w_ex).max(axis=1)
            cand_M = np.empty((self.an.shape[0], ncand))
            Agn = self.an[:, cols] if cols else np.zeros((self.an.shape[0], 0))
            for k in range(ncand):
                sel = cand_matrix[:, k] > 0.5
                hits = Agn[:, sel].max(axis=1) if sel.any() else np.zeros(self.an.shape[0])
                cand_M[:, k] = np.maximum(M_ex, hits)
            sum_other = self.M.sum(axis=1) - self.M[:, r]
            neg_cost = np.maximum(0.0, sum_other[:, None] + cand_M - (self.R - 1)).sum(axis=0)
        else:
            neg_cost = 0.0
            cand_M = np.zeros((0, ncand))
        self._cand_M = cand_M
        return pos_cost + neg_cost, cand_S

    def commit(self, r, cand_S_col, cand_index=None):
        self.S[:, r] = cand_S_col
        if cand_index is not None and self.an.shape[0]:
            self.M[:, r] = self._cand_M[:, cand_index]


_SCORERS = {"hamming": _HammingScore, "zero_one": _ZeroOneScore}


def redundancy_binarize(fractional: np.ndarray, ds: BinaryDataset, theta: float,
                        column_costs=None, objective: str = "hamming",
                        index: RedundancyIndex | None = None,
                        placeholder: str = "fractional",
                        order_by: str = "clause") -> np.ndarray:
    """Binarize fractional weights by per-origin candidate sweeps.

    For each clause independently, origins are processed in decreasing
    order of their fractional mass in that clause; each origin's
    admissible combinations are scored with the selected objective
    (accuracy term plus theta-weighted sparsity) holding committed
    origins at their binary values and pending ones at the
    `placeholder` point ("fractional" keeps LP values, "half" rounds
    them at 0.5). An already-binary input is returned unchanged.
    """
    if objective not in _SCORERS:
        raise ValueError(f"objective must be one of {sorted(_SCORERS)}")
    if placeholder not in ("fractional", "half"):
        raise ValueError("placeholder must be 'fractional' or 'half'")
    if order_by not in ("clause", "total"):
        raise ValueError("order_by must be 'clause' or 'total'")
    W = np.asarray(fractional, dtype=np.float64)
    if W.ndim == 1:
        W = W[:, None]
    if W.shape[0] != ds.d:
        raise ValueError("weight matrix arity does not match dataset")
    if is_integral(W, EPS_INT).all():
        return np.rint(np.clip(W, 0.0, 1.0)).astype(np.uint8)

    if index is None:
        index = build_redundancy_index(ds.columns)
    regime = DISABLE if ds.has_disable_column else NO_DISABLE
    costs = ds.column_costs() if column_costs is None else np.asarray(column_costs, np.float64)
    d, R = W.shape

    base_eval = W if placeholder == "fractional" else (W >= 0.5).astype(np.float64)
    out = np.zeros((d, R), dtype=np.uint8)
    for r in range(R):
        W_work = np.array(base_eval, dtype=np.float64)
        scorer = _SCORERS[objective](ds.a, ds.y, W_work)
        mass_col = W[:, r] if order_by == "clause" else W.sum(axis=1)
        order = sorted(
            index.groups,
            key=lambda g: (-float(mass_col[list(g.columns)].sum()), _sort_key(g.key)),
        )
        for g in order:
            cols = list(g.columns)
            cands = enumerate_candidates(index, g, regime)
            E = np.zeros((len(cols), len(cands)))
            pos_of = {c: i for i, c in enumerate(cols)}
            for k, cand in enumerate(cands):
                for c in cand:
                    E[pos_of[c], k] = 1.0
            cost, cand_S = scorer.score(r, cols, E, W_work[:, r])
            cost = cost + theta * (costs[cols] @ E)
            k = int(np.argmin(cost))
            W_work[cols, r] = E[:, k]
            scorer.commit(r, cand_S[:, k], k)
        out[:, r] = np.rint(W_work[:, r]).astype(np.uint8)
    return out


def redundancy_violations(W, index: RedundancyIndex, regime: str) -> list[str]:
    """Structural redundancy violations of a binary weight matrix, if any."""
    W = np.asarray(W)
    problems = []
    for r in range(W.shape[1]):
        sel = set(np.flatnonzero(W[:, r] >= 0.5))
        for g in index.groups:
            if g.is_disable:
                continue
            leq_hit = [(t, j) for t, j in g.leq if j in sel]
            gt_hit = [(t, j) for t, j in g.gt if j in sel]
            if len(leq_hit) > 1 or len(gt_hit) > 1:
                problems.append(f"clause {r}: two same-direction columns of origin {g.key}")
            if regime == DISABLE:
                for tl, jl in leq_hit:
                    for tg, jg in gt_hit:
                        if tl is None or tg is None or not tl < tg:
                            problems.append(
                                f"clause {r}: columns {jl},{jg} of origin {g.key} "
                                "are complementary or cover all values")
    return problems
