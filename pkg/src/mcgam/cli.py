"""Command-line interface: ``mcgam {train,predict,postprocess,eval,export-shapes,info}``.

Exit codes: 0 success, 1 data/model error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import api
from .boosting import TrainConfig, train
from .data import DEFAULT_MAX_BINS, DataError, FeatureSchema, build_bins, holdout, infer_schema, load_csv, summarize
from .evaluation import evaluate
from .export import export_shapes
from .gam import AdditiveModel, ModelError, predict_proba, rebase_to_class

log = logging.getLogger("mcgam")

# flag name -> TrainConfig field
_TRAIN_FLAGS = {
    "learning_rate": "learning_rate",
    "leaves": "leaves",
    "bags": "bags",
    "iters": "max_iters",
    "patience": "patience",
    "seed": "seed",
    "threads": "n_threads",
}


def _schema(path, label, schema_path):
    if schema_path:
        return FeatureSchema.from_dict(json.loads(Path(schema_path).read_text(encoding="utf-8")))
    return infer_schema(path, label)


def _load_for_model(model: AdditiveModel, path, label=None):
    ds = load_csv(path, model.schema(), label, label_names=model.labels if label else None)
    return ds.with_bins(model.bins)


def cmd_train(args) -> int:
    cfg = {}
    if args.config:
        cfg.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    for flag, name in _TRAIN_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            cfg[name] = v
    config = TrainConfig.from_dict(cfg)

    schema = _schema(args.data, args.label, args.schema)
    data = load_csv(args.data, schema, args.label)
    if args.valid:
        tr = data
        va = load_csv(args.valid, schema, args.label, label_names=data.label_names)
    else:
        tr, va = holdout(data, args.valid_fraction, seed=config.seed)
    bins = build_bins(tr, args.max_bins)
    tr, va = tr.with_bins(bins), va.with_bins(bins)

    model, trace = train(tr, va, config)
    for line in trace.header_lines():
        print(line, file=sys.stderr)
    model.save(args.out)
    log_path = args.log or str(Path(args.out).with_suffix("")) + ".log.csv"
    trace.write_csv(log_path)
    last = trace.rows[-1]
    print(f"trained {len(trace.rows) - 1} cycles (best {trace.best_cycle}); "
          f"train_loss={last['train_loss']:.6f} valid_loss={last['valid_loss']:.6f}; "
          f"model -> {args.out}, log -> {log_path}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    model = AdditiveModel.load(args.model)
    ds = _load_for_model(model, args.data)
    proba = predict_proba(model, ds.binned)
    pred = np.argmax(proba, axis=1)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["row", "label", *model.labels])
        for n, (p, k) in enumerate(zip(proba, pred)):
            w.writerow([n, model.labels[k], *(repr(float(v)) for v in p)])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_postprocess(args) -> int:
    model = AdditiveModel.load(args.model)
    ds = _load_for_model(model, args.data)
    canon, report = api.apply(model, ds)
    canon.save(args.out)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    if args.table:
        Path(args.table).write_text(report.to_table() + "\n", encoding="utf-8")
    print(report.to_table(only_violations=True).splitlines()[-1], file=sys.stderr)
    if report.fallback_edges:
        print(f"{len(report.fallback_edges)} edge(s) had no rows in their left bin; "
              "used the interventional estimate", file=sys.stderr)
    return 0 if report.violations == 0 else 1


def cmd_eval(args) -> int:
    model = AdditiveModel.load(args.model)
    ds = _load_for_model(model, args.data, args.label)
    rep = evaluate(model, ds)
    print(rep.to_table())
    if args.out:
        Path(args.out).write_text(json.dumps(rep.to_dict(), indent=1) + "\n", encoding="utf-8")
    return 0


def _resolve_class(model: AdditiveModel, name: str) -> int | None:
    if name in model.labels:
        return model.labels.index(name)
    try:
        k = int(name)
    except ValueError:
        return None
    return k if 0 <= k < model.n_classes else None


def cmd_export_shapes(args, parser) -> int:
    model = AdditiveModel.load(args.model)
    if args.rebase != "none":
        k = _resolve_class(model, args.rebase)
        if k is None:
            parser.error(f"--rebase: unknown class {args.rebase!r} (labels: {', '.join(model.labels)})")
        model = rebase_to_class(model, k)
    for p in export_shapes(model, args.out_dir, args.format):
        print(p)
    return 0


def cmd_info(args) -> int:
    schema = _schema(args.data, args.label, args.schema)
    ds = load_csv(args.data, schema, args.label)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s = summarize(ds)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"classes   {s['classes']}")
    print(f"features  {s['features']}")
    print(f"rows      {s['rows']}")
    print(f"entropy   {s['entropy']:.3f}")
    for lab, p in zip(s["labels"], s["proportions"]):
        print(f"  {lab:<16} {p:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcgam", description="Multiclass GAMs: training and canonical post-processing.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a model by cyclic boosting")
    t.add_argument("--data", required=True)
    t.add_argument("--label", required=True)
    t.add_argument("--valid", help="validation CSV (default: hold out --valid-fraction of --data)")
    t.add_argument("--valid-fraction", type=float, default=0.1)
    t.add_argument("--schema", help="JSON feature schema (default: inferred)")
    t.add_argument("--config", help="JSON file with training config fields")
    t.add_argument("--learning-rate", type=float)
    t.add_argument("--leaves", type=int)
    t.add_argument("--bags", type=int)
    t.add_argument("--iters", type=int)
    t.add_argument("--patience", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--threads", type=int)
    t.add_argument("--max-bins", type=int, default=DEFAULT_MAX_BINS)
    t.add_argument("--out", default="model.json")
    t.add_argument("--log")

    pr = sub.add_parser("predict", help="per-row class probabilities")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--out")

    pp = sub.add_parser("postprocess", help="canonicalize a model so its shapes follow class probability trends")
    pp.add_argument("--model", required=True)
    pp.add_argument("--data", required=True)
    pp.add_argument("--out", required=True)
    pp.add_argument("--report", help="axiom report JSON")
    pp.add_argument("--table", help="axiom report as a text table")

    ev = sub.add_parser("eval", help="balanced accuracy, cross entropy and confusion matrix")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--label", required=True)
    ev.add_argument("--out", help="report JSON")

    ex = sub.add_parser("export-shapes", help="write one shape file per feature")
    ex.add_argument("--model", required=True)
    ex.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    ex.add_argument("--rebase", default="none", help="class label (or index) to plot other classes against")
    ex.add_argument("--out-dir", required=True)

    inf = sub.add_parser("info", help="dataset summary")
    inf.add_argument("--data", required=True)
    inf.add_argument("--label", required=True)
    inf.add_argument("--schema")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "predict":
            return cmd_predict(args)
        if args.command == "postprocess":
            return cmd_postprocess(args)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "export-shapes":
            return cmd_export_shapes(args, parser)
        return cmd_info(args)
    except (DataError, ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
