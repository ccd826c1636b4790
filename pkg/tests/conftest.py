import os
from pathlib import Path

import numpy as np
import pytest

from boolrules.data import GT, LEQ, BinaryDataset, FeatureMeta, append_disable_column

DATA_DIR = Path(os.environ.get("BOOLRULES_DATA", Path(__file__).resolve().parent.parent / "data"))


def closed_dataset(rng, base_features: int, n: int, labels=None,
                   disable: bool = False) -> BinaryDataset:
    """Random dataset whose column set is closed under negation:
    `base_features` random 0/1 columns plus their complements."""
    base = rng.integers(0, 2, size=(n, base_features)).astype(np.uint8)
    cols, metas = [], []
    for i in range(base_features):
        cols.append(base[:, i])
        metas.append(FeatureMeta(i, f"f{i}", "binary", 0.5, GT))
        cols.append(1 - base[:, i])
        metas.append(FeatureMeta(i, f"f{i}", "binary", 0.5, LEQ))
    if labels is None:
        labels = rng.integers(0, 2, size=n).astype(np.uint8)
    ds = BinaryDataset(np.stack(cols, axis=1), labels, metas)
    return append_disable_column(ds) if disable else ds


def exhaustive_closed_dataset(base_features: int, labels, disable: bool = False):
    """All 2**base_features rows, with complements appended."""
    n = 2 ** base_features
    base = np.array([[(i >> b) & 1 for b in range(base_features)] for i in range(n)],
                    dtype=np.uint8)
    cols, metas = [], []
    for i in range(base_features):
        cols.append(base[:, i])
        metas.append(FeatureMeta(i, f"f{i}", "binary", 0.5, GT))
        cols.append(1 - base[:, i])
        metas.append(FeatureMeta(i, f"f{i}", "binary", 0.5, LEQ))
    ds = BinaryDataset(np.stack(cols, axis=1), np.asarray(labels, dtype=np.uint8), metas)
    return append_disable_column(ds) if disable else ds


def uci_dataset_or_skip(name: str):
    """RawDataset for one of the UCI benchmarks, or skip with instructions."""
    from boolrules import datasets as uci
    from boolrules.data import load_csv

    found = uci.locate(name, DATA_DIR, try_fetch=os.environ.get("BOOLRULES_FETCH") == "1")
    if found is None:
        pytest.skip(
            f"UCI dataset {name!r} not available under {DATA_DIR} and this "
            f"environment cannot fetch it; run `boolrules fetch --name {name}` "
            f"(or scripts/fetch_uci.py) on a networked machine and copy "
            f"{name}.csv + {name}.schema.json into {DATA_DIR}")
    csv_path, schema_path = found
    return load_csv(csv_path, schema=schema_path)
