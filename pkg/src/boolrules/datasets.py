"""Fetching and normalizing the four UCI benchmark datasets.

Each dataset is normalized into a headered CSV with 0/1 labels plus a
schema JSON, so the CLI and tests can load them uniformly. Liver
follows the historical convention of using the selector field as the
class label (kept for comparability with the published error rates).
Fetching needs general network access; in restricted environments,
download the files elsewhere and drop the normalized CSVs into the
data directory (see data/README.md).
"""

from __future__ import annotations

import csv
import json
import os
import urllib.request

DATASET_NAMES = ("pima", "sonar", "liver", "parkinsons")

_SPECS = {
    "pima": {
        "urls": [
            "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.csv",
            "https://archive.ics.uci.edu/ml/machine-learning-databases/pima-indians-diabetes/pima-indians-diabetes.data",
        ],
        "has_header": False,
        "columns": ["pregnancies", "glucose", "blood_pressure", "skin_thickness",
                    "insulin", "bmi", "pedigree", "age", "outcome"],
        "label": "outcome",
        "label_map": None,
        "ignore": [],
        "expected_rows": 768,
    },
    "sonar": {
        "urls": [
            "https://archive.ics.uci.edu/ml/machine-learning-databases/undocumented/connectionist-bench/sonar/sonar.all-data",
            "https://raw.githubusercontent.com/jbrownlee/Datasets/master/sonar.csv",
        ],
        "has_header": False,
        "columns": [f"band_{i + 1}" for i in range(60)] + ["material"],
        "label": "material",
        "label_map": {"R": 0, "M": 1},
        "ignore": [],
        "expected_rows": 208,
    },
    "liver": {
        "urls": [
            "https://archive.ics.uci.edu/ml/machine-learning-databases/liver-disorders/bupa.data",
        ],
        "has_header": False,
        "columns": ["mcv", "alkphos", "sgpt", "sgot", "gammagt", "drinks", "selector"],
        "label": "selector",
        "label_map": {"1": 0, "2": 1},
        "ignore": [],
        "expected_rows": 345,
    },
    "parkinsons": {
        "urls": [
            "https://archive.ics.uci.edu/ml/machine-learning-databases/parkinsons/parkinsons.data",
        ],
        "has_header": True,
        "columns": None,  # taken from the header
        "label": "status",
        "label_map": None,
        "ignore": ["name"],
        "expected_rows": 195,
    },
}


def data_dir(override=None) -> str:
    if override:
        return str(override)
    return os.environ.get("BOOLRULES_DATA", os.path.join(os.getcwd(), "data"))


def dataset_paths(name: str, directory=None):
    base = data_dir(directory)
    return (os.path.join(base, f"{name}.csv"), os.path.join(base, f"{name}.schema.json"))


def _download(urls, timeout: float = 30.0) -> str:
    errors = []
    for url in urls:
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                return resp.read().decode("utf-8")
        except Exception as exc:
            errors.append(f"  {url}: {exc}")
    raise OSError("could not download the dataset from any mirror:\n" + "\n".join(errors))


def _normalize(name: str, text: str):
    spec = _SPECS[name]
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if spec["has_header"]:
        header, rows = rows[0], rows[1:]
    else:
        header = list(spec["columns"])
    if spec["columns"] is not None and len(header) != len(spec["columns"]):
        raise ValueError(f"{name}: expected {len(spec['columns'])} columns, got {len(header)}")
    if len(rows) != spec["expected_rows"]:
        raise ValueError(f"{name}: expected {spec['expected_rows']} rows, got {len(rows)}")

    label_i = header.index(spec["label"])
    keep = [i for i, h in enumerate(header) if h not in spec["ignore"]]
    out_header = [header[i] for i in keep]
    out_rows = []
    for row in rows:
        row = [c.strip() for c in row]
        if spec["label_map"] is not None:
            row[label_i] = str(spec["label_map"][row[label_i]])
        else:
            row[label_i] = str(int(float(row[label_i])))
        out_rows.append([row[i] for i in keep])

    schema = {
        "columns": {h: ("label" if h == spec["label"] else "continuous") for h in out_header},
    }
    return out_header, out_rows, schema


def fetch(name: str, directory=None, timeout: float = 30.0):
    """Download, normalize, and store one dataset; returns (csv, schema) paths."""
    name = name.lower()
    if name not in _SPECS:
        raise ValueError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    csv_path, schema_path = dataset_paths(name, directory)
    os.makedirs(os.path.dirname(csv_path), exist_ok=True)
    text = _download(_SPECS[name]["urls"], timeout)
    header, rows, schema = _normalize(name, text)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    with open(schema_path, "w") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
    return csv_path, schema_path


def locate(name: str, directory=None, try_fetch: bool = False):
    """Paths of a normalized dataset if present (optionally fetching)."""
    csv_path, schema_path = dataset_paths(name, directory)
    if os.path.exists(csv_path) and os.path.exists(schema_path):
        return csv_path, schema_path
    if try_fetch:
        try:
            return fetch(name, directory)
        except OSError:
            return None
    return None
