import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolrules.data import (GT, LEQ, BinaryDataset, FeatureMeta, RawDataset,
                            append_disable_column, apply_binarization, binarize,
                            load_csv, stratified_folds)

from conftest import closed_dataset


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = write_csv(tmp_path, "c1,label\n1.5,1\n2.5,0\n3.0,1\n")
        raw = load_csv(path, label_column="label")
        assert raw.n == 3
        assert raw.feature_names == ["c1"]
        assert raw.kinds == ["continuous"]
        assert list(raw.labels) == [1, 0, 1]

    def test_non_binary_label_rejected(self, tmp_path):
        path = write_csv(tmp_path, "c1,label\n1.0,1\n2.0,2\n3.0,0\n")
        with pytest.raises(ValueError, match="non-binary label '2' at row 2"):
            load_csv(path, label_column="label")

    def test_label_map(self, tmp_path):
        path = write_csv(tmp_path, "c1,label\n1.0,M\n2.0,R\n")
        schema = {"columns": {"c1": "continuous", "label": "label"},
                  "label_map": {"M": 1, "R": 0}}
        raw = load_csv(path, schema=schema)
        assert list(raw.labels) == [1, 0]

    def test_missing_value_rejected(self, tmp_path):
        path = write_csv(tmp_path, "c1,label\n1.0,1\n,0\n")
        with pytest.raises(ValueError, match="missing value"):
            load_csv(path, label_column="label")

    def test_kind_inference(self, tmp_path):
        path = write_csv(tmp_path, "a,b,c,label\n1.5,0,x,1\n2.5,1,y,0\n")
        raw = load_csv(path, label_column="label")
        assert raw.kinds == ["continuous", "binary", "categorical"]

    def test_ignore_kind(self, tmp_path):
        path = write_csv(tmp_path, "id,c1,label\nr1,1.0,1\nr2,2.0,0\n")
        schema = {"columns": {"id": "ignore", "c1": "continuous", "label": "label"}}
        raw = load_csv(path, schema=schema)
        assert raw.feature_names == ["c1"]

    def test_unlabeled(self, tmp_path):
        path = write_csv(tmp_path, "c1,c2\n1.0,2.0\n3.0,4.0\n")
        raw = load_csv(path, allow_unlabeled=True)
        assert raw.n == 2 and raw.num_features == 2

    def test_pima_shape_if_available(self):
        from conftest import uci_dataset_or_skip
        raw = uci_dataset_or_skip("pima")
        assert raw.n == 768
        assert raw.num_features == 8


class TestBinarize:
    def test_median_threshold_pair(self):
        raw = RawDataset(["c"], ["continuous"], [np.array([1.0, 2.0, 3.0, 4.0])],
                         np.array([0, 1, 0, 1], dtype=np.uint8))
        ds = binarize(raw, quantiles=1)
        assert ds.d == 2
        leq = [j for j, m in enumerate(ds.columns) if m.direction == LEQ][0]
        gt = [j for j, m in enumerate(ds.columns) if m.direction == GT][0]
        assert ds.columns[leq].threshold == pytest.approx(2.5)
        assert list(ds.a[:, leq]) == [1, 1, 0, 0]
        assert list(ds.a[:, gt]) == [0, 0, 1, 1]

    def test_native_binary_complement(self):
        raw = RawDataset(["b"], ["binary"], [np.array([0.0, 1.0, 0.0])],
                         np.array([0, 1, 1], dtype=np.uint8))
        ds = binarize(raw, quantiles=3)
        assert ds.d == 2
        ident = [j for j, m in enumerate(ds.columns) if m.direction == GT][0]
        assert list(ds.a[:, ident]) == [0, 1, 0]
        assert list(ds.a[:, 1 - ident]) == [1, 0, 1]

    def test_constant_feature_dropped_with_warning(self):
        raw = RawDataset(["c", "k"], ["continuous", "continuous"],
                         [np.array([1.0, 2.0, 3.0]), np.array([5.0, 5.0, 5.0])],
                         np.array([0, 1, 0], dtype=np.uint8))
        with pytest.warns(UserWarning, match="constant feature 'k'"):
            ds = binarize(raw, quantiles=2)
        assert all(m.origin == 0 for m in ds.columns)

    def test_labels_pass_through(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 2, 20).astype(np.uint8)
        raw = RawDataset(["c"], ["continuous"], [rng.normal(size=20)], y)
        ds = binarize(raw, quantiles=3)
        assert (ds.y == y).all()

    def test_quantile_count_zero_rejected(self):
        raw = RawDataset(["c"], ["continuous"], [np.array([1.0, 2.0])],
                         np.array([0, 1], dtype=np.uint8))
        with pytest.raises(ValueError):
            binarize(raw, quantiles=0)

    def test_duplicate_threshold_columns_collapsed(self):
        raw = RawDataset(["c"], ["continuous"], [np.array([1.0, 1.0, 1.0, 10.0])],
                         np.array([0, 1, 0, 1], dtype=np.uint8))
        ds = binarize(raw, quantiles=9)
        patterns = {ds.a[:, j].tobytes() for j, m in enumerate(ds.columns)
                    if m.direction == LEQ}
        assert len(patterns) == sum(m.direction == LEQ for m in ds.columns)

    def test_every_column_has_complement(self):
        rng = np.random.default_rng(1)
        raw = RawDataset(["c", "b"], ["continuous", "binary"],
                         [rng.normal(size=30), rng.integers(0, 2, 30).astype(float)],
                         rng.integers(0, 2, 30).astype(np.uint8))
        ds = binarize(raw, quantiles=4)
        neg = ds.negation_index()
        for j in range(ds.d):
            assert ((ds.a[:, j] + ds.a[:, neg[j]]) == 1).all()

    def test_categorical_one_hot(self):
        raw = RawDataset(["cat"], ["categorical"],
                         [np.array(["a", "b", "c", "a"], dtype=object)],
                         np.array([0, 1, 0, 1], dtype=np.uint8))
        ds = binarize(raw, quantiles=1)
        assert ds.d == 6  # three categories, each with a complement
        match_cols = [j for j, m in enumerate(ds.columns) if m.direction == GT]
        assert sorted(m.category for m in (ds.columns[j] for j in match_cols)) == ["a", "b", "c"]

    def test_two_category_single_pair(self):
        raw = RawDataset(["cat"], ["categorical"],
                         [np.array(["x", "y", "x"], dtype=object)],
                         np.array([0, 1, 0], dtype=np.uint8))
        ds = binarize(raw, quantiles=1)
        assert ds.d == 2

    def test_apply_binarization_round_trip(self):
        rng = np.random.default_rng(2)
        raw = RawDataset(["c"], ["continuous"], [rng.normal(size=40)],
                         rng.integers(0, 2, 40).astype(np.uint8))
        ds = binarize(raw, quantiles=5)
        again = apply_binarization(raw, ds.columns)
        assert (again.a == ds.a).all()


class TestDisableColumn:
    def test_append(self):
        ds = closed_dataset(np.random.default_rng(0), 2, 5)
        padded = append_disable_column(ds)
        assert padded.d == ds.d + 1
        assert (padded.a[:, 0] == 1).all()
        assert padded.columns[0].is_disable
        assert padded.columns[0].threshold is None

    def test_double_append_rejected(self):
        ds = closed_dataset(np.random.default_rng(0), 2, 5)
        padded = append_disable_column(ds)
        with pytest.raises(ValueError, match="already present"):
            append_disable_column(padded)

    def test_costs_zero_for_disable(self):
        ds = append_disable_column(closed_dataset(np.random.default_rng(0), 2, 5))
        costs = ds.column_costs()
        assert costs[0] == 0.0
        assert (costs[1:] == 1.0).all()


class TestStratifiedFolds:
    def test_exact_divisibility(self):
        y = np.array([1] * 5 + [0] * 5, dtype=np.uint8)
        plan = stratified_folds(y, 5, seed=3)
        for f in range(5):
            members = np.flatnonzero(plan.assignments == f)
            assert len(members) == 2
            assert y[members].sum() == 1

    def test_deterministic(self):
        y = np.random.default_rng(5).integers(0, 2, 40).astype(np.uint8)
        a = stratified_folds(y, 4, seed=9).assignments
        b = stratified_folds(y, 4, seed=9).assignments
        assert (a == b).all()

    def test_pima_sized_counts(self):
        # same class totals as the 768-sample diabetes set: 500 / 268
        y = np.array([0] * 500 + [1] * 268, dtype=np.uint8)
        plan = stratified_folds(y, 10, seed=0)
        sizes = np.bincount(plan.assignments, minlength=10)
        assert set(sizes) <= {76, 77}
        overall = y.mean()
        for f in range(10):
            members = plan.assignments == f
            frac = y[members].mean()
            assert abs(frac - overall) <= 1.0 / members.sum()

    def test_small_class_rejected(self):
        y = np.array([1, 0, 0, 0, 0], dtype=np.uint8)
        with pytest.raises(ValueError, match="fewer than k"):
            stratified_folds(y, 2, seed=0)

    @given(st.integers(0, 2**31 - 1), st.integers(2, 5))
    @settings(max_examples=25, deadline=None)
    def test_partitions_exactly(self, seed, k):
        rng = np.random.default_rng(seed)
        y = np.concatenate([np.ones(k + rng.integers(0, 20), dtype=np.uint8),
                            np.zeros(k + rng.integers(0, 20), dtype=np.uint8)])
        plan = stratified_folds(y, k, seed=seed)
        assert plan.assignments.min() >= 0 and plan.assignments.max() < k
        assert len(plan.assignments) == len(y)
        train, test = plan.train_test(0)
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(len(y)))


class TestSerialization:
    def test_dataset_json_round_trip(self):
        ds = closed_dataset(np.random.default_rng(7), 3, 11, disable=True)
        clone = BinaryDataset.from_json(ds.to_json())
        assert (clone.a == ds.a).all()
        assert (clone.y == ds.y).all()
        assert clone.has_disable_column
        assert [m.describe() for m in clone.columns] == [m.describe() for m in ds.columns]

    def test_versioned(self):
        ds = closed_dataset(np.random.default_rng(7), 2, 4)
        doc = json.loads(ds.to_json())
        assert doc["schema"] == "boolrules.dataset/1"


class TestInvariants:
    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_double_negation_round_trip(self, seed):
        ds = closed_dataset(np.random.default_rng(seed), 3, 8)
        neg = ds.negation_index()
        twice = neg[neg]
        assert (twice == np.arange(ds.d)).all()

    def test_meta_invariant_thresholds_increasing(self):
        rng = np.random.default_rng(11)
        raw = RawDataset(["c"], ["continuous"], [rng.normal(size=50)],
                         rng.integers(0, 2, 50).astype(np.uint8))
        ds = binarize(raw, quantiles=7)
        taus = [m.threshold for m in ds.columns if m.direction == LEQ]
        assert taus == sorted(taus)
        assert len(set(taus)) == len(taus)
