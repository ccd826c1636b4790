"""Dataset ingestion, quantile binarization, and stratified folds.

The learners operate on :class:`BinaryDataset`: an n-by-d 0/1 feature
matrix whose column set is closed under negation (for every feature
column its complement column is present), optionally padded with a
constant-one "disable" column that lets a clause be switched off.
Continuous raw features become threshold indicator pairs
``(c <= tau, c > tau)`` at empirical quantiles; native binary and
one-hot categorical features become an indicator and its complement.
"""

from __future__ import annotations

import base64
import csv
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

LEQ = "LEQ"
GT = "GT"

KINDS = ("continuous", "categorical", "binary", "label", "ignore")

_MISSING_TOKENS = {"", "na", "n/a", "nan", "?", "null", "none"}

DATASET_SCHEMA_VERSION = "boolrules.dataset/1"


@dataclass(frozen=True)
class FeatureMeta:
    """Provenance of one binary column.

    origin        index of the source raw feature (None for the disable column)
    origin_name   name of the source raw feature
    kind          raw feature kind: continuous | binary | categorical
    threshold     quantile cut for continuous features, 0.5 for native
                  binary, None for categorical/disable
    direction     LEQ (value <= threshold / category mismatch) or
                  GT (value > threshold / category match)
    category      category token for one-hot columns, else None
    is_disable    True only for the constant-one column
    """

    origin: int | None
    origin_name: str
    kind: str
    threshold: float | None
    direction: str
    category: str | None = None
    is_disable: bool = False

    def group_key(self):
        """Key identifying the redundancy group this column belongs to."""
        if self.is_disable:
            return ("__disable__",)
        return (self.origin, self.category)

    def describe(self) -> str:
        if self.is_disable:
            return "TRUE"
        if self.kind == "continuous":
            op = "<=" if self.direction == LEQ else ">"
            return f"{self.origin_name} {op} {self.threshold:g}"
        if self.kind == "categorical":
            op = "!=" if self.direction == LEQ else "=="
            return f"{self.origin_name} {op} {self.category}"
        return f"NOT {self.origin_name}" if self.direction == LEQ else self.origin_name

    def to_dict(self) -> dict:
        return {
            "origin": self.origin,
            "origin_name": self.origin_name,
            "kind": self.kind,
            "threshold": self.threshold,
            "direction": self.direction,
            "category": self.category,
            "is_disable": self.is_disable,
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureMeta":
        return FeatureMeta(**d)


@dataclass
class RawDataset:
    """Tabular data as parsed from CSV, prior to binarization."""

    feature_names: list[str]
    kinds: list[str]
    values: list[np.ndarray]  # one array per feature, length n each
    labels: np.ndarray  # uint8 in {0,1}

    def __post_init__(self):
        n = len(self.labels)
        for name, col in zip(self.feature_names, self.values):
            if len(col) != n:
                raise ValueError(f"feature {name!r} has {len(col)} values, expected {n}")
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise ValueError(f"labels must be 0/1, found {sorted(bad)}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def num_features(self) -> int:
        return len(self.feature_names)

    def subset(self, indices) -> "RawDataset":
        idx = np.asarray(indices)
        return RawDataset(
            feature_names=list(self.feature_names),
            kinds=list(self.kinds),
            values=[col[idx] for col in self.values],
            labels=self.labels[idx],
        )


@dataclass
class BinaryDataset:
    """Binary feature matrix with labels and per-column provenance.

    The matrix is frozen (read-only) after construction and safe to
    share across workers.
    """

    a: np.ndarray  # (n, d) uint8
    y: np.ndarray  # (n,) uint8
    columns: list[FeatureMeta]
    has_disable_column: bool = False
    _negation: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.a = np.ascontiguousarray(self.a, dtype=np.uint8)
        self.y = np.ascontiguousarray(self.y, dtype=np.uint8)
        if self.a.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if self.a.shape[0] != self.y.shape[0]:
            raise ValueError("feature matrix and labels disagree on sample count")
        if self.a.shape[1] != len(self.columns):
            raise ValueError("feature matrix and column metadata disagree on arity")
        if not np.isin(self.a, (0, 1)).all():
            raise ValueError("feature matrix entries must be 0 or 1")
        if not np.isin(self.y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if self.has_disable_column:
            if not self.columns[0].is_disable or not (self.a[:, 0] == 1).all():
                raise ValueError("disable column must be column 0 and all-ones")
        self.a.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def d(self) -> int:
        return self.a.shape[1]

    def column_costs(self) -> np.ndarray:
        """Default per-column sparsity costs: 1, and 0 for the disable column."""
        costs = np.ones(self.d)
        for j, meta in enumerate(self.columns):
            if meta.is_disable:
                costs[j] = 0.0
        return costs

    def negation_index(self) -> np.ndarray:
        """For each column, the index of its complement column (-1 for disable)."""
        if self._negation is None:
            lookup = {}
            for j, m in enumerate(self.columns):
                if not m.is_disable:
                    lookup[(m.group_key(), m.threshold, m.direction)] = j
            neg = np.full(self.d, -1, dtype=np.int64)
            for j, m in enumerate(self.columns):
                if m.is_disable:
                    continue
                other = GT if m.direction == LEQ else LEQ
                k = lookup.get((m.group_key(), m.threshold, other))
                if k is None:
                    raise ValueError(f"column {j} ({m.describe()}) has no negation column")
                neg[j] = k
            self._negation = neg
        return self._negation

    def subset(self, indices, labels=None) -> "BinaryDataset":
        """Row-subset view sharing column metadata; labels may be overridden."""
        idx = np.asarray(indices)
        y = self.y[idx] if labels is None else np.asarray(labels, dtype=np.uint8)
        return BinaryDataset(self.a[idx], y, self.columns, self.has_disable_column)

    def with_labels(self, labels) -> "BinaryDataset":
        return BinaryDataset(self.a, np.asarray(labels, dtype=np.uint8),
                             self.columns, self.has_disable_column)

    def to_json(self) -> str:
        """Serialize to versioned JSON with base64-packed bit rows."""
        rows = [base64.b64encode(np.packbits(r).tobytes()).decode("ascii") for r in self.a]
        doc = {
            "schema": DATASET_SCHEMA_VERSION,
            "n": self.n,
            "d": self.d,
            "rows": rows,
            "labels": base64.b64encode(np.packbits(self.y).tobytes()).decode("ascii"),
            "columns": [m.to_dict() for m in self.columns],
            "has_disable_column": self.has_disable_column,
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BinaryDataset":
        doc = json.loads(text)
        if doc.get("schema") != DATASET_SCHEMA_VERSION:
            raise ValueError(f"unsupported dataset schema {doc.get('schema')!r}")
        n, d = doc["n"], doc["d"]
        a = np.empty((n, d), dtype=np.uint8)
        for i, enc in enumerate(doc["rows"]):
            bits = np.unpackbits(np.frombuffer(base64.b64decode(enc), dtype=np.uint8))
            a[i] = bits[:d]
        ybits = np.unpackbits(np.frombuffer(base64.b64decode(doc["labels"]), dtype=np.uint8))
        y = ybits[:n]
        columns = [FeatureMeta.from_dict(m) for m in doc["columns"]]
        return BinaryDataset(a, y, columns, doc["has_disable_column"])


@dataclass(frozen=True)
class FoldPlan:
    """Cross-validation fold assignment: assignments[i] in [0, k)."""

    k: int
    assignments: np.ndarray

    def train_test(self, fold: int):
        if not 0 <= fold < self.k:
            raise ValueError(f"fold {fold} out of range [0, {self.k})")
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test


def load_schema(path_or_dict) -> dict:
    """Load a schema mapping column names to kinds.

    A schema is ``{"columns": {name: kind, ...}, "label_map": {token: 0|1}}``
    with exactly one column of kind "label"; label_map is optional. A flat
    ``{name: kind}`` mapping is accepted too.
    """
    if isinstance(path_or_dict, dict):
        doc = path_or_dict
    else:
        with open(path_or_dict) as fh:
            doc = json.load(fh)
    if "columns" not in doc:
        doc = {"columns": doc}
    for name, kind in doc["columns"].items():
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r} for column {name!r}; expected one of {KINDS}")
    return doc


def _parse_label(token: str, label_map: dict | None, row: int):
    token = token.strip()
    if label_map is not None:
        if token not in label_map:
            raise ValueError(f"non-binary label {token!r} at row {row}: not in label_map")
        return int(label_map[token])
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"non-binary label {token!r} at row {row}") from None
    if value not in (0.0, 1.0):
        raise ValueError(f"non-binary label {token!r} at row {row}")
    return int(value)


def load_csv(path, label_column: str | None = None, schema=None,
             allow_unlabeled: bool = False) -> RawDataset:
    """Parse a headered CSV into a RawDataset.

    Parameters
    ----------
    path : CSV file with a header row.
    label_column : name of the label column; defaults to the schema's
        "label" column.
    schema : dict or JSON path mapping columns to
        continuous/categorical/binary/label/ignore, optionally with a
        label_map translating tokens to 0/1. Unlisted columns are
        inferred (numeric -> continuous, 0/1-only -> binary,
        otherwise categorical).
    allow_unlabeled : accept files without the label column (labels
        come back all-zero); used when applying a saved rule to new
        data.

    Raises
    ------
    ValueError on missing files/columns, unparseable cells, missing
    values, or labels outside {0, 1}. Rows are reported 1-based,
    header excluded.
    """
    doc = load_schema(schema) if schema is not None else {"columns": {}}
    kinds_map = dict(doc["columns"])
    label_map = doc.get("label_map")
    if label_column is None:
        labelled = [c for c, k in kinds_map.items() if k == "label"]
        if len(labelled) == 1:
            label_column = labelled[0]
        elif not allow_unlabeled:
            raise ValueError("schema must name exactly one label column "
                             "(or pass label_column explicitly)")

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column is not None and label_column not in header:
            if not allow_unlabeled:
                raise ValueError(f"label column {label_column!r} not in header {header}")
            label_column = None
        rows = list(reader)

    if not rows:
        raise ValueError(f"{path}: no data rows")

    label_idx = header.index(label_column) if label_column is not None else None
    feature_cols = [
        (i, name) for i, name in enumerate(header)
        if i != label_idx and kinds_map.get(name, None) not in ("ignore", "label")
    ]

    labels = np.zeros(len(rows), dtype=np.uint8)
    raw_text: list[list[str]] = [[] for _ in feature_cols]
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ValueError(f"row {r} has {len(row)} cells, expected {len(header)}")
        if label_idx is not None:
            labels[r - 1] = _parse_label(row[label_idx], label_map, r)
        for k, (i, _) in enumerate(feature_cols):
            raw_text[k].append(row[i].strip())

    names, kinds, values = [], [], []
    for (col_i, name), tokens in zip(feature_cols, raw_text):
        kind = kinds_map.get(name)
        numeric = None
        if kind in (None, "continuous", "binary"):
            numeric = np.empty(len(tokens))
            for r, tok in enumerate(tokens, start=1):
                if tok.lower() in _MISSING_TOKENS:
                    raise ValueError(f"missing value in column {name!r} at row {r}")
                try:
                    numeric[r - 1] = float(tok)
                except ValueError:
                    if kind is None:
                        numeric = None
                        break
                    raise ValueError(
                        f"parse failure in column {name!r} at row {r}: {tok!r}") from None
        if kind is None:
            if numeric is None:
                kind = "categorical"
            elif np.isin(numeric, (0.0, 1.0)).all():
                kind = "binary"
            else:
                kind = "continuous"
        if kind == "categorical":
            for r, tok in enumerate(tokens, start=1):
                if tok.lower() in _MISSING_TOKENS:
                    raise ValueError(f"missing value in column {name!r} at row {r}")
            col = np.array(tokens, dtype=object)
        else:
            col = numeric
            if kind == "binary" and not np.isin(col, (0.0, 1.0)).all():
                raise ValueError(f"column {name!r} declared binary but has non-0/1 values")
        names.append(name)
        kinds.append(kind)
        values.append(col)

    return RawDataset(names, kinds, values, labels)


def _quantile_thresholds(v: np.ndarray, quantiles: int) -> np.ndarray:
    qs = np.arange(1, quantiles + 1) / (quantiles + 1)
    taus = np.quantile(v, qs, method="linear")
    return np.unique(taus)


def _emit_threshold_pair(cols, metas, indicator, origin, name, kind, tau, category=None):
    indicator = indicator.astype(np.uint8)
    cols.append(indicator)
    metas.append(FeatureMeta(origin, name, kind, tau, LEQ, category))
    cols.append(1 - indicator)
    metas.append(FeatureMeta(origin, name, kind, tau, GT, category))


def binarize(raw: RawDataset, quantiles: int = 9) -> BinaryDataset:
    """Binarize a RawDataset with per-feature quantile thresholds.

    Each continuous feature yields indicator pairs (c <= tau, c > tau) at
    up to `quantiles` empirical quantile cuts (linear interpolation;
    thresholds that duplicate an existing indicator pattern or produce a
    constant column are collapsed). Native binary features yield the
    feature and its complement; categorical features are one-hot
    expanded the same way (a single pair when only two categories).
    Constant features are dropped with a warning. Labels pass through
    unchanged.
    """
    if quantiles < 1:
        raise ValueError("quantile count must be >= 1")
    if raw.n == 0:
        raise ValueError("empty dataset")

    cols: list[np.ndarray] = []
    metas: list[FeatureMeta] = []
    for origin, (name, kind, v) in enumerate(zip(raw.feature_names, raw.kinds, raw.values)):
        if kind == "continuous":
            if len(np.unique(v)) < 2:
                warnings.warn(f"dropping constant feature {name!r}")
                continue
            seen = set()
            for tau in _quantile_thresholds(v, quantiles):
                ind = v <= tau
                key = ind.tobytes()
                if key in seen or ind.all() or not ind.any():
                    continue
                seen.add(key)
                _emit_threshold_pair(cols, metas, ind, origin, name, kind, float(tau))
        elif kind == "binary":
            if len(np.unique(v)) < 2:
                warnings.warn(f"dropping constant feature {name!r}")
                continue
            _emit_threshold_pair(cols, metas, v <= 0.5, origin, name, kind, 0.5)
        elif kind == "categorical":
            cats = sorted(set(v))
            if len(cats) < 2:
                warnings.warn(f"dropping constant feature {name!r}")
                continue
            if len(cats) == 2:
                cats = cats[:1]  # second category is the first's complement
            for cat in cats:
                ind = np.array([x != cat for x in v])
                _emit_threshold_pair(cols, metas, ind, origin, name, kind, None, str(cat))
        else:
            raise ValueError(f"cannot binarize feature of kind {kind!r}")

    if not cols:
        raise ValueError("no usable features after binarization")
    a = np.stack(cols, axis=1)
    return BinaryDataset(a, raw.labels, metas)


def apply_binarization(raw: RawDataset, columns: list[FeatureMeta]) -> BinaryDataset:
    """Binarize new rows with thresholds learned elsewhere (e.g. a training fold)."""
    name_to_idx = {n: i for i, n in enumerate(raw.feature_names)}
    cols = []
    for meta in columns:
        if meta.is_disable:
            cols.append(np.ones(raw.n, dtype=np.uint8))
            continue
        if meta.origin_name not in name_to_idx:
            raise ValueError(f"feature {meta.origin_name!r} missing from dataset")
        v = raw.values[name_to_idx[meta.origin_name]]
        if meta.category is not None:
            ind = np.array([x != meta.category for x in v])
        else:
            ind = v <= meta.threshold
        if meta.direction == GT:
            ind = ~ind
        cols.append(ind.astype(np.uint8))
    a = np.stack(cols, axis=1)
    has_disable = bool(columns) and columns[0].is_disable
    return BinaryDataset(a, raw.labels, list(columns), has_disable)


def append_disable_column(ds: BinaryDataset) -> BinaryDataset:
    """Prepend the constant-one feature that lets a clause be disabled."""
    if ds.has_disable_column:
        raise ValueError("disable column already present")
    ones = np.ones((ds.n, 1), dtype=np.uint8)
    a = np.hstack([ones, ds.a])
    meta = FeatureMeta(None, "__disable__", "disable", None, GT, None, is_disable=True)
    shifted = [meta]
    shifted.extend(ds.columns)
    return BinaryDataset(a, ds.y, shifted, has_disable_column=True)


def stratified_folds(ds, k: int, seed: int) -> FoldPlan:
    """Assign samples to k folds, stratified by label, deterministic per seed.

    Accepts a BinaryDataset/RawDataset (through .y/.labels) or a plain
    label vector. Each class is shuffled and dealt round-robin, so
    per-fold class counts differ by at most one.
    """
    if hasattr(ds, "y"):
        y = np.asarray(ds.y)
    elif hasattr(ds, "labels"):
        y = np.asarray(ds.labels)
    else:
        y = np.asarray(ds)
    if k < 2:
        raise ValueError("fold count must be >= 2")
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(y), dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise ValueError(f"class {cls} has {len(idx)} samples, fewer than k={k}")
        rng.shuffle(idx)
        assignments[idx] = np.arange(len(idx)) % k
    return FoldPlan(k, assignments)
