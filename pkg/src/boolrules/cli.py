"""Command-line interface: sweep / train / predict / explain / fetch.

Sweep flags can also come from a JSON config file (--config) whose keys
mirror the flag names; flags given on the command line win. The worker
count falls back to the BOOLRULES_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import csv as _csv
import json
import os
import sys

import numpy as np

from . import bench, datasets
from .bench import DEFAULT_THETA_GRID, SweepGrid
from .data import load_csv
from .learners import ALGORITHMS, LearnConfig
from .rules import CNF, DNF, error_rate


def _parse_r_range(text: str):
    if ".." in text:
        lo, hi = text.split("..")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(t) for t in str(text).split(","))


def _parse_thetas(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(t) for t in text)
    if text == "default":
        return DEFAULT_THETA_GRID
    return tuple(float(t) for t in str(text).split(","))


def _form(text: str) -> str:
    return DNF if str(text).lower() == "dnf" else CNF


def _on_off(text) -> bool:
    if isinstance(text, bool):
        return text
    if str(text).lower() not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on|off")
    return str(text).lower() == "on"


def _sweep_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boolrules sweep", add_help=True)
    p.add_argument("--data", help="CSV file")
    p.add_argument("--schema", help="schema JSON")
    p.add_argument("--algos", default=",".join(ALGORITHMS),
                   help="comma list from scs,scn,tlp,bcd,am")
    p.add_argument("--R", default="1..5", help="clause counts, e.g. 1..5 or 2,4")
    p.add_argument("--theta-grid", default="default",
                   help="'default' (18 values) or a comma list")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--form", default="dnf", choices=["dnf", "cnf"])
    p.add_argument("--quantiles", type=int, default=9)
    p.add_argument("--disable-clause", type=_on_off, default=False,
                   metavar="on|off", help="append the always-true feature")
    p.add_argument("--global-binarize", action="store_true",
                   help="binarize once on the full dataset (leaky protocol)")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--lp-backend", default="builtin", choices=["builtin", "scipy"])
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--timings", action="store_true", help="also write timings.jsonl")
    p.add_argument("--config", help="JSON file mirroring these flags")
    p.add_argument("--out", help="output directory")
    return p


def _cmd_sweep(argv) -> int:
    parser = _sweep_parser()
    # first pass only to find --config; its values become new defaults
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        with open(pre.config) as fh:
            doc = json.load(fh)
        valid = {a.dest for a in parser._actions}
        defaults = {}
        for key, value in doc.items():
            dest = key.replace("-", "_")
            if dest not in valid:
                raise SystemExit(f"unknown config key {key!r}")
            defaults[dest] = value
        parser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if not args.data or not args.schema or not args.out:
        parser.error("sweep requires --data, --schema, and --out")
    raw = load_csv(args.data, schema=args.schema)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get(bench.WORKER_ENV_VAR, "1"))
    grid = SweepGrid(
        thetas=_parse_thetas(args.theta_grid),
        num_clauses=_parse_r_range(str(args.R)),
        algorithms=tuple(str(args.algos).split(",")),
        folds=int(args.folds),
        seed=int(args.seed),
        form=_form(args.form),
        quantiles=int(args.quantiles),
        allow_disable=_on_off(args.disable_clause),
        global_binarize=bool(args.global_binarize),
        max_iters=int(args.max_iters),
        lp_backend=args.lp_backend,
        workers=int(workers),
    )
    result = bench.run_sweep(raw, grid)
    bench.write_sweep_outputs(result, args.out, timings=args.timings)
    print(bench.render_min_error_table(result))
    failed = [r for r in result.records if r.error is not None]
    if failed:
        print(f"{len(failed)} cells failed; see results.jsonl", file=sys.stderr)
    print(f"wrote {args.out}/results.jsonl")
    return 0


def _cmd_train(args) -> int:
    raw = load_csv(args.data, schema=args.schema)
    cfg = LearnConfig(theta=args.theta, num_clauses=args.R, form=_form(args.form),
                      allow_disable=_on_off(args.disable_clause),
                      max_iters=args.max_iters, seed=args.seed,
                      lp_backend=args.lp_backend)
    rule, ds, rule_json = bench.train_rule(raw, args.algo, cfg, quantiles=args.quantiles)
    with open(args.out, "w") as fh:
        fh.write(rule_json + "\n")
    print(f"training error: {error_rate(ds, rule):.4f}")
    print(f"features used: {rule.feature_count(ds.columns)}")
    print(f"wrote {args.out}")
    return 0


def _has_label_column(path, label_column: str) -> bool:
    with open(path, newline="") as fh:
        header = next(_csv.reader(fh), [])
    return label_column in [h.strip() for h in header]


def _cmd_predict(args) -> int:
    with open(args.rule) as fh:
        rule_text = fh.read()
    labelled = False
    if args.schema:
        from .data import load_schema
        doc = load_schema(args.schema)
        label_cols = [c for c, k in doc["columns"].items() if k == "label"]
        labelled = bool(label_cols) and _has_label_column(args.data, label_cols[0])
        raw = load_csv(args.data, schema=args.schema, allow_unlabeled=not labelled)
    else:
        raw = load_csv(args.data, allow_unlabeled=True)
    preds = bench.predict_from_json(rule_text, raw)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("prediction\n")
            fh.writelines(f"{int(p)}\n" for p in preds)
        print(f"wrote {args.out}")
    else:
        for p in preds:
            print(int(p))
    if labelled:
        err = float(np.abs(preds.astype(int) - raw.labels.astype(int)).mean())
        print(f"error rate vs labels: {err:.4f}", file=sys.stderr)
    return 0


def _cmd_explain(args) -> int:
    with open(args.rule) as fh:
        print(bench.explain_from_json(fh.read()))
    return 0


def _cmd_fetch(args) -> int:
    names = datasets.DATASET_NAMES if args.name == "all" else [args.name]
    status = 0
    for name in names:
        try:
            csv_path, _ = datasets.fetch(name, args.out)
            print(f"fetched {name} -> {csv_path}")
        except Exception as exc:
            print(f"could not fetch {name}: {exc}", file=sys.stderr)
            status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boolrules",
        description="Sparse two-level Boolean rule learning (CNF/DNF)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("sweep", help="cross-validated theta/R sweep",
                   add_help=False)

    p = sub.add_parser("train", help="fit one configuration and save the rule")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--algo", required=True, choices=list(ALGORITHMS))
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--R", type=int, default=2)
    p.add_argument("--form", default="dnf", choices=["dnf", "cnf"])
    p.add_argument("--quantiles", type=int, default=9)
    p.add_argument("--disable-clause", type=_on_off, default=False, metavar="on|off")
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lp-backend", default="builtin", choices=["builtin", "scipy"])
    p.add_argument("--out", required=True, help="rule JSON path")

    p = sub.add_parser("predict", help="apply a saved rule to a CSV")
    p.add_argument("--rule", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema")
    p.add_argument("--out")

    p = sub.add_parser("explain", help="print a saved rule as IF/THEN text")
    p.add_argument("--rule", required=True)

    p = sub.add_parser("fetch", help="download and normalize a UCI dataset")
    p.add_argument("--name", required=True,
                   choices=list(datasets.DATASET_NAMES) + ["all"])
    p.add_argument("--out", default=None, help="data directory (default ./data)")

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "sweep":
        return _cmd_sweep(argv[1:])
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "predict": _cmd_predict,
        "explain": _cmd_explain,
        "fetch": _cmd_fetch,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
