"""Linear programs over box-bounded variables, and a self-contained solver.

The built-in solver is a two-phase revised simplex with explicit
bounded-variable handling (bounds never become rows). It prices with
Dantzig's rule, switching to Bland's rule after a run of degenerate
pivots, keeps an explicit basis inverse updated in product form, and
refactorizes periodically. scipy.optimize.linprog (HiGHS) is available
behind the same contract for large instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

EPS_FEAS = 1e-7
EPS_OBJ = 1e-6
EPS_INT = 1e-6

_PIVOT_TOL = 1e-7
_RATE_TOL = 1e-9
_DEGENERATE_STEP = 1e-10
_BLAND_AFTER = 50
_REFACTOR_EVERY = 40
_SHAKY_PIVOT = 1e-4  # refactorize right after pivots this small

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
ITERATION_LIMIT = "ITERATION_LIMIT"

_REL_CODES = {">=": 1, "<=": -1, "==": 0, "=": 0}


@dataclass(frozen=True)
class LinearProgram:
    """min c @ x  s.t.  A x (>=|<=|==) b,  lo <= x <= hi (finite box)."""

    c: np.ndarray
    A: sparse.csr_matrix
    relations: np.ndarray  # +1: >=, -1: <=, 0: ==
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        A = sparse.csr_matrix(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        rel = np.asarray(self.relations, dtype=np.int8)
        m, n = A.shape
        if c.shape != (n,) or lo.shape != (n,) or hi.shape != (n,):
            raise ValueError("objective/bounds arity mismatch with constraint matrix")
        if b.shape != (m,) or rel.shape != (m,):
            raise ValueError("rhs/relations length mismatch with constraint matrix")
        if not (np.isfinite(c).all() and np.isfinite(b).all()
                and np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("all coefficients and bounds must be finite")
        if (lo > hi + 1e-12).any():
            raise ValueError("lower bound exceeds upper bound")
        for name, val in (("c", c), ("A", A), ("relations", rel),
                          ("b", b), ("lo", lo), ("hi", hi)):
            object.__setattr__(self, name, val)

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @staticmethod
    def from_rows(c, rows, relations, rhs, lo=None, hi=None) -> "LinearProgram":
        """Build from sparse rows given as (indices, values) pairs."""
        c = np.asarray(c, dtype=np.float64)
        n = c.shape[0]
        data, indices, indptr = [], [], [0]
        for idx, vals in rows:
            indices.extend(idx)
            data.extend(vals)
            indptr.append(len(indices))
        A = sparse.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
             np.asarray(indptr, dtype=np.int64)),
            shape=(len(rows), n),
        )
        rel = np.array([_REL_CODES[r] for r in relations], dtype=np.int8)
        lo = np.zeros(n) if lo is None else lo
        hi = np.ones(n) if hi is None else hi
        return LinearProgram(c, A, rel, np.asarray(rhs), lo, hi)


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    objective_value: float
    status: str
    iterations: int = 0


def is_integral(x, eps_int: float = EPS_INT) -> np.ndarray:
    """Per-entry flags: within eps_int of 0 or 1."""
    x = np.asarray(x, dtype=np.float64)
    return np.minimum(np.abs(x), np.abs(x - 1.0)) <= eps_int


def _box_minimum(lp: LinearProgram) -> LpSolution:
    x = np.where(lp.c > 0, lp.lo, np.where(lp.c < 0, lp.hi, lp.lo))
    return LpSolution(x, float(lp.c @ x), OPTIMAL, 0)


class _NumericalTrouble(RuntimeError):
    pass


class _Simplex:
    """One solve of the bounded-variable two-phase revised simplex.

    The working rhs carries a tiny deterministic perturbation to break
    ratio-test ties (binary data makes these LPs massively degenerate);
    the final point is resolved against the true rhs. `start_upper`
    flags variables whose initial nonbasic bound is the upper one,
    which lets callers hand in a feasible start and skip phase 1.
    """

    _BASIC, _AT_LO, _AT_HI = 0, 1, 2

    def __init__(self, lp: LinearProgram, max_iters: int,
                 refactor_every: int = _REFACTOR_EVERY, start_upper=None):
        self.lp = lp
        self.max_iters = max_iters
        self.refactor_every = refactor_every
        m, n = lp.num_rows, lp.num_vars

        slack_rows = np.flatnonzero(lp.relations != 0)
        n_slack = len(slack_rows)
        A = np.zeros((m, n + n_slack + m))
        A[:, :n] = lp.A.toarray()
        for k, i in enumerate(slack_rows):
            # >= rows get a surplus (-1), <= rows a slack (+1)
            A[i, n + k] = -1.0 if lp.relations[i] == 1 else 1.0

        lo = np.concatenate([lp.lo, np.zeros(n_slack), np.zeros(m)])
        hi = np.concatenate([lp.hi, np.full(n_slack, np.inf), np.full(m, np.inf)])

        status = np.full(n + n_slack + m, self._AT_LO, dtype=np.int8)
        if start_upper is not None:
            upper = np.asarray(start_upper, dtype=bool)
            status[:n][upper & np.isfinite(lp.hi)] = self._AT_HI

        # golden-ratio rhs jitter to break ratio-test ties, aimed so each
        # inequality relaxes (its slack can stay nonnegative); resolved
        # against the true rhs at the end
        phi = 0.6180339887498949
        jitter = 2e-9 * (1.0 + (np.arange(m) * phi) % 1.0)
        self.b_work = lp.b + np.where(lp.relations == 1, -jitter, jitter)

        start = np.where(status[:n] == self._AT_HI, lp.hi, lp.lo)
        resid = self.b_work - A[:, :n] @ start

        # crash basis: the row's slack when its value comes out
        # nonnegative, an artificial otherwise
        slack_col = np.full(m, -1, dtype=np.int64)
        for k, i in enumerate(slack_rows):
            slack_col[i] = n + k
        basis = np.empty(m, dtype=np.int64)
        coef = np.empty(m)
        for i in range(m):
            sigma = -1.0 if lp.relations[i] == 1 else 1.0
            if slack_col[i] >= 0 and resid[i] / sigma >= 0.0:
                basis[i] = slack_col[i]
                coef[i] = sigma
            else:
                basis[i] = n + n_slack + i
                coef[i] = 1.0 if resid[i] >= 0 else -1.0
            A[i, n + n_slack + i] = 1.0 if resid[i] >= 0 else -1.0

        self.A = A
        self.lo, self.hi = lo, hi
        self.n_user, self.n_slack, self.m = n, n_slack, m
        self.art_start = n + n_slack
        self.basis = basis
        status[self.basis] = self._BASIC
        self.status = status
        self.Binv = np.diag(coef)  # basis columns are +-unit vectors
        self.xB = resid / coef
        self.iterations = 0
        self.pivots_since_refactor = 0

    def _recompute_xB(self, true_rhs: bool = False):
        vals = np.where(self.status == self._AT_HI, self.hi, self.lo)
        vals[self.status == self._BASIC] = 0.0
        b = self.lp.b if true_rhs else self.b_work
        rhs = b - self.A @ vals
        self.xB = self.Binv @ rhs

    def _refactorize(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise _NumericalTrouble("simplex basis became singular") from exc
        self._recompute_xB()
        self.pivots_since_refactor = 0

    def _run_phase(self, c: np.ndarray, enterable: np.ndarray) -> str:
        bland = False
        degenerate_run = 0
        banned: set = set()
        while True:
            if self.iterations >= self.max_iters:
                return ITERATION_LIMIT
            self.iterations += 1

            y = c[self.basis] @ self.Binv
            d = c - y @ self.A
            at_lo = (self.status == self._AT_LO) & enterable
            at_hi = (self.status == self._AT_HI) & enterable
            rate = np.zeros_like(d)
            rate[at_lo] = -d[at_lo]
            rate[at_hi] = d[at_hi]
            if banned:
                rate[list(banned)] = 0.0
            candidates = np.flatnonzero(rate > _RATE_TOL)
            if candidates.size == 0:
                return OPTIMAL
            if bland:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmax(rate[candidates])])

            delta = 1.0 if self.status[q] == self._AT_LO else -1.0
            u = self.Binv @ self.A[:, q]
            w = delta * u

            limits = np.full(self.m, np.inf)
            dec = w > _PIVOT_TOL
            limits[dec] = (self.xB[dec] - self.lo[self.basis[dec]]) / w[dec]
            inc = w < -_PIVOT_TOL
            hiB = self.hi[self.basis[inc]]
            with np.errstate(invalid="ignore"):
                limits[inc] = np.where(np.isfinite(hiB),
                                       (hiB - self.xB[inc]) / (-w[inc]), np.inf)
            t_enter = self.hi[q] - self.lo[q]
            t_star = min(limits.min(initial=np.inf), t_enter)
            if not np.isfinite(t_star):
                raise RuntimeError("LP appears unbounded; check variable bounds")
            t_star = max(t_star, 0.0)

            if t_star <= _DEGENERATE_STEP:
                degenerate_run += 1
                if degenerate_run >= _BLAND_AFTER:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

            if t_enter <= t_star + 1e-12:
                # bound flip: entering variable crosses to its other bound
                self.xB = self.xB - t_enter * w
                self.status[q] = self._AT_HI if self.status[q] == self._AT_LO else self._AT_LO
                banned.clear()
                continue

            near = np.flatnonzero(limits <= t_star + 1e-9)
            if bland:
                p = int(near[np.argmin(self.basis[near])])
            else:
                p = int(near[np.argmax(np.abs(w[near]))])
            if abs(u[p]) < _PIVOT_TOL:
                # likely stale arithmetic; retry against a fresh inverse,
                # and if the column is truly near-dependent set it aside
                if self.pivots_since_refactor > 0:
                    self._refactorize()
                else:
                    banned.add(q)
                continue

            leaving = self.basis[p]
            self.xB = self.xB - t_star * w
            enter_value = (self.lo[q] if delta > 0 else self.hi[q]) + delta * t_star
            self.status[leaving] = self._AT_LO if w[p] > 0 else self._AT_HI
            self.basis[p] = q
            self.status[q] = self._BASIC
            self.xB[p] = enter_value
            banned.clear()

            pivot_row = self.Binv[p] / u[p]
            self.Binv -= np.outer(u, pivot_row)
            self.Binv[p] = pivot_row
            self.pivots_since_refactor += 1
            if (self.pivots_since_refactor >= self.refactor_every
                    or abs(u[p]) < _SHAKY_PIVOT):
                self._refactorize()

    def solve(self) -> LpSolution:
        total = self.A.shape[1]
        enterable = np.ones(total, dtype=bool)

        phase1_cost = np.zeros(total)
        phase1_cost[self.art_start:] = 1.0
        art_level = phase1_cost[self.basis] @ np.abs(self.xB)
        if art_level > EPS_FEAS:
            status = self._run_phase(phase1_cost, enterable)
            if status == ITERATION_LIMIT:
                return self._finish(ITERATION_LIMIT)
            self._refactorize()
            art_level = phase1_cost[self.basis] @ np.maximum(self.xB, 0.0)
            if art_level > 1e-6:
                return self._finish(INFEASIBLE)

        # lock artificials at zero and price only real columns
        self.hi[self.art_start:] = 0.0
        enterable[self.art_start:] = False
        phase2_cost = np.zeros(total)
        phase2_cost[: self.n_user] = self.lp.c
        status = self._run_phase(phase2_cost, enterable)
        if status == OPTIMAL:
            self._refactorize()
            self._recompute_xB(true_rhs=True)
        return self._finish(status)

    def _finish(self, status: str) -> LpSolution:
        vals = np.where(self.status == self._AT_HI, self.hi, self.lo)
        vals[self.basis] = self.xB
        x = vals[: self.n_user]
        if status == OPTIMAL:
            x = np.clip(x, self.lp.lo, self.lp.hi)
            _check_feasible(self.lp, x)
        objective = float(self.lp.c @ x) if status != INFEASIBLE else float("nan")
        return LpSolution(x, objective, status, self.iterations)


def _check_feasible(lp: LinearProgram, x: np.ndarray, tol: float = 1e-5):
    if lp.num_rows == 0:
        return
    Ax = lp.A @ x
    viol = np.where(lp.relations == 1, lp.b - Ax,
                    np.where(lp.relations == -1, Ax - lp.b, np.abs(Ax - lp.b)))
    worst = viol.max(initial=0.0)
    if worst > tol:
        raise RuntimeError(f"simplex returned an infeasible point (violation {worst:.2e})")


def _solve_scipy(lp: LinearProgram, max_iters: int | None) -> LpSolution:
    from scipy.optimize import linprog

    ge = lp.relations == 1
    le = lp.relations == -1
    eq = lp.relations == 0
    A_ub_parts, b_ub_parts = [], []
    if le.any():
        A_ub_parts.append(lp.A[le])
        b_ub_parts.append(lp.b[le])
    if ge.any():
        A_ub_parts.append(-lp.A[ge])
        b_ub_parts.append(-lp.b[ge])
    A_ub = sparse.vstack(A_ub_parts) if A_ub_parts else None
    b_ub = np.concatenate(b_ub_parts) if b_ub_parts else None
    A_eq = lp.A[eq] if eq.any() else None
    b_eq = lp.b[eq] if eq.any() else None
    options = {}
    if max_iters is not None:
        options["maxiter"] = max_iters
    res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=list(zip(lp.lo, lp.hi)), method="highs", options=options)
    if res.status == 0:
        x = np.clip(res.x, lp.lo, lp.hi)
        return LpSolution(x, float(lp.c @ x), OPTIMAL, int(res.nit))
    if res.status == 2:
        return LpSolution(np.array(lp.lo), float("nan"), INFEASIBLE, int(res.nit))
    if res.status == 1:
        return LpSolution(np.asarray(res.x if res.x is not None else lp.lo),
                          float("nan"), ITERATION_LIMIT, int(res.nit))
    raise RuntimeError(f"linprog failed: {res.message}")


def solve(lp: LinearProgram, max_iters: int | None = None, backend: str = "builtin",
          start_upper=None) -> LpSolution:
    """Solve an LP; deterministic for a fixed input ordering.

    Parameters
    ----------
    lp : the program (finite variable boxes required).
    max_iters : simplex pivot cap; defaults to a generous size-based cap.
    backend : "builtin" (default, self-contained) or "scipy" (HiGHS).
    start_upper : optional per-variable flags; flagged variables start
        at their upper bound, which skips phase 1 entirely when the
        resulting point is feasible.
    """
    if backend == "scipy":
        return _solve_scipy(lp, max_iters)
    if backend != "builtin":
        raise ValueError(f"unknown LP backend {backend!r}")
    if max_iters is None:
        max_iters = 200 * (lp.num_rows + lp.num_vars) + 2000
    if lp.num_rows == 0:
        return _box_minimum(lp)
    try:
        return _Simplex(lp, max_iters, start_upper=start_upper).solve()
    except _NumericalTrouble:
        # drift corrupted the basis; retry with near-constant refactorization
        return _Simplex(lp, max_iters, refactor_every=5, start_upper=start_upper).solve()


def write_lp_text(lp: LinearProgram, name: str = "boolrules") -> str:
    """Render in the fixed CPLEX LP text format, for external debugging."""
    def term(coef, j, lead):
        sign = "-" if coef < 0 else ("+" if not lead else "")
        mag = abs(coef)
        return f"{sign} {mag:g} x{j}" if not lead else f"{sign}{mag:g} x{j}"

    lines = [f"\\ {name}", "Minimize", " obj:"]
    parts = [term(c, j, j == 0) for j, c in enumerate(lp.c) if c != 0]
    lines[-1] += " " + (" ".join(parts) if parts else "0 x0")
    lines.append("Subject To")
    A = lp.A.tocoo()
    rows: list[list[str]] = [[] for _ in range(lp.num_rows)]
    for i, j, v in zip(A.row, A.col, A.data):
        rows[i].append(term(v, j, not rows[i]))
    rel_text = {1: ">=", -1: "<=", 0: "="}
    for i, parts in enumerate(rows):
        body = " ".join(parts) if parts else "0 x0"
        lines.append(f" c{i}: {body} {rel_text[int(lp.relations[i])]} {lp.b[i]:g}")
    lines.append("Bounds")
    for j in range(lp.num_vars):
        lines.append(f" {lp.lo[j]:g} <= x{j} <= {lp.hi[j]:g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
