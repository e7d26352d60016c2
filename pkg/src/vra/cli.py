"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Diagnostics go to stderr; results are written to files only.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import DataError, DegenerateInput, ManifestError, NumericError
from .featurestore import (
    MANIFEST_NAME,
    FeatureStore,
    SplitAssignment,
    ingest_features,
    read_manifest,
    split_dataset,
)
from .geometry import DEFAULT_SCALE, scale_box_file
from .inference import (
    DEFAULT_REPEATS,
    EnsembleConfig,
    average_predictions,
    ensemble_weighted,
    pairwise_consistency_rmse,
    predict_repeated,
    read_predictions,
    write_predictions,
)
from .metrics import MetricsReport, SetMetrics
from .trainer import TrainConfig, finetune_on_all, train

log = logging.getLogger("vra")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_train_overrides(p):
    g = p.add_argument_group("training overrides")
    for f in fields(TrainConfig):
        if f.name == "seed":
            continue
        if f.name == "hidden_dims":
            g.add_argument("--hidden-dims", type=lambda s: tuple(int(x) for x in s.split(",") if x),
                           default=None, help="comma-separated hidden layer widths, e.g. 512,128")
        elif f.name == "learning_rate":
            g.add_argument("--learning-rate", "--lr", dest="learning_rate", type=float, default=None)
        else:
            g.add_argument(_flag(f.name), type=type(f.default), default=None)


def _load_config_file(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc


def _effective_train_config(args) -> TrainConfig:
    settings = TrainConfig().to_dict()
    settings.update(_load_config_file(args.config).get("train", {}))
    for f in fields(TrainConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    try:
        return TrainConfig.from_dict(settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid training configuration: {exc}") from exc


def _effective_ensemble_config(args) -> EnsembleConfig:
    settings = {"weight_a": 0.75, "weight_b": 0.25}
    settings.update(_load_config_file(args.config).get("ensemble", {}))
    if args.wa is not None:
        settings["weight_a"] = args.wa
    if args.wb is not None:
        settings["weight_b"] = args.wb
    try:
        return EnsembleConfig(**settings)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid ensemble configuration: {exc}") from exc


def _record_config(output, command, settings):
    path = Path(str(output) + ".config.json")
    record = {"command": command, "version": __version__, **settings}
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(args):
    store = ingest_features(args.manifest, args.raw_dir, args.store)
    _record_config(Path(args.store) / MANIFEST_NAME, "ingest",
                   {"manifest": str(args.manifest), "raw_dir": str(args.raw_dir)})
    log.info("ingested %d videos into %s (dim %d)", len(store), args.store, store.dim)


def cmd_split(args):
    store = FeatureStore.open(args.store)
    assignment = split_dataset(store, args.seed)
    out = Path(args.output) if args.output else Path(args.store) / "splits.json"
    assignment.save(out)
    store.with_splits(assignment)
    _record_config(out, "split", {"store": str(args.store), "seed": args.seed})
    log.info("split %d videos: %d train / %d test / %d val", len(store),
             len(assignment.train_ids), len(assignment.test_ids), len(assignment.val_ids))


def _splits_for(args, store) -> SplitAssignment:
    if args.splits:
        return SplitAssignment.load(args.splits)
    by = {"train": [], "test": [], "val": []}
    for e in store.entries:
        if e.split in by:
            by[e.split].append(e.video_id)
    return SplitAssignment(by["train"], by["test"], by["val"], seed=-1)


def cmd_train(args):
    config = _effective_train_config(args)
    store = FeatureStore.open(args.store)
    splits = _splits_for(args, store)
    if not splits.train_ids or not splits.val_ids:
        raise ManifestError("train and val splits must be non-empty (run `split` first)")
    model, history = train(config, store, splits)
    if args.finetune_on_all:
        log.info("second phase on train+val from epoch-%d checkpoint", model.best_epoch)
        model, history2 = finetune_on_all(model, store, splits, config)
        history = {"phase1": history.to_dict(), "phase2": history2.to_dict()}
    else:
        history = history.to_dict()
    save_checkpoint(model, args.checkpoint)
    hist_path = Path(args.history) if args.history else Path(str(args.checkpoint) + ".history.json")
    hist_path.write_text(json.dumps(history, indent=2) + "\n")
    _record_config(args.checkpoint, "train",
                   {"train": config.to_dict(), "store": str(args.store),
                    "splits": str(args.splits), "finetune_on_all": args.finetune_on_all})
    log.info("saved checkpoint %s (best epoch %d, val rmse %.4f)", args.checkpoint,
             model.best_epoch, model.best_val_rmse)


def _ids_for(args, store):
    if args.ids_file:
        return [ln.strip() for ln in Path(args.ids_file).read_text().splitlines() if ln.strip()]
    if args.split == "all":
        return store.video_ids
    return [e.video_id for e in store.entries if e.split == args.split]


def cmd_predict(args):
    model = load_checkpoint(args.checkpoint)
    store = FeatureStore.open(args.store)
    ids = _ids_for(args, store)
    if not ids:
        raise ManifestError(f"no videos selected for prediction (split {args.split!r})")
    preds = predict_repeated(model, store, ids, args.repeats, args.seed,
                             length=args.sequence_length, workers=args.workers)
    write_predictions(args.output, ids, average_predictions(preds))
    if args.matrix:
        preds.save_matrix(args.matrix)
    _record_config(args.output, "predict",
                   {"checkpoint": str(args.checkpoint), "store": str(args.store), "seed": args.seed,
                    "repeats": args.repeats, "split": args.split,
                    "sequence_length": args.sequence_length or model.config.sequence_length})
    if args.repeats >= 2:
        log.info("pairwise consistency RMSE over %d repeats: %.4f", args.repeats,
                 pairwise_consistency_rmse(preds))


def cmd_ensemble(args):
    cfg = _effective_ensemble_config(args)
    ids_a, a = read_predictions(args.pred_a)
    ids_b, b = read_predictions(args.pred_b)
    out = ensemble_weighted(a, b, cfg, ids_a, ids_b)
    write_predictions(args.output, ids_a, out)
    _record_config(args.output, "ensemble", {"weight_a": cfg.weight_a, "weight_b": cfg.weight_b,
                                             "inputs": [str(args.pred_a), str(args.pred_b)]})


def _labels(path):
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    return {e.video_id: e.mos_label for e in read_manifest(path)}


def evaluate_command(pred_files, label_manifest) -> MetricsReport:
    """Score each prediction file against the labels, joined by video_id."""
    labels = _labels(label_manifest)
    report = MetricsReport()
    for i, pf in enumerate(pred_files, 1):
        ids, preds = read_predictions(pf)
        missing = [v for v in ids if v not in labels]
        if missing:
            raise ManifestError(f"set {i} ({pf}): no label for {missing[:5]}")
        order = np.argsort(np.array(ids, dtype=object), kind="stable")
        ids = [ids[j] for j in order]
        y = np.array([labels[v] for v in ids])
        try:
            report.sets.append(SetMetrics.compute(preds[order], y, name=Path(pf).stem))
        except DegenerateInput as exc:
            raise DegenerateInput(f"set {i} ({pf}): {exc}") from exc
    return report


def cmd_evaluate(args):
    report = evaluate_command(args.pred_files, args.labels)
    out = Path(args.output)
    Path(str(out) + ".txt").write_text(report.to_text())
    Path(str(out) + ".json").write_text(report.to_json())
    _record_config(out, "evaluate", {"labels": str(args.labels),
                                     "pred_files": [str(p) for p in args.pred_files]})
    log.info("final_score %.4f over %d sets", report.final_score, len(report.sets))


def cmd_scale_boxes(args):
    n = scale_box_file(args.input, args.output, args.factor, args.width, args.height)
    _record_config(args.output, "scale-boxes", {"factor": args.factor, "width": args.width,
                                                "height": args.height})
    log.info("scaled %d boxes", n)


# -- parser ------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="vra", description="Visual realism assessment pipeline over precomputed features.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("ingest", help="validate raw features and build a store")
    s.add_argument("--manifest", required=True)
    s.add_argument("--raw-dir", required=True)
    s.add_argument("--store", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("split", help="seeded 70/20/10 train/test/val split")
    s.add_argument("--store", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", help="train the regression head")
    s.add_argument("--store", required=True)
    s.add_argument("--splits")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--history")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--finetune-on-all", action="store_true")
    _add_train_overrides(s)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="repeated stochastic prediction, averaged")
    s.add_argument("--store", required=True)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--split", default="test", choices=["train", "test", "val", "unassigned", "all"])
    s.add_argument("--ids-file")
    s.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sequence-length", type=int, default=None)
    s.add_argument("--matrix", help="also dump the repeats x videos matrix here")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("ensemble", help="weighted blend of two prediction files")
    s.add_argument("pred_a")
    s.add_argument("pred_b")
    s.add_argument("--wa", type=float, default=None)
    s.add_argument("--wb", type=float, default=None)
    s.add_argument("--config")
    s.add_argument("--output", "-o", required=True)
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("evaluate", help="PLCC/SRCC/RMSE per set and final score")
    s.add_argument("pred_files", nargs="+")
    s.add_argument("--labels", required=True, help="store directory or manifest file")
    s.add_argument("--output", "-o", required=True, help="report path prefix (.txt and .json)")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("scale-boxes", help="expand face boxes about their centre")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--factor", type=float, default=DEFAULT_SCALE)
    s.add_argument("--width", type=float, required=True)
    s.add_argument("--height", type=float, required=True)
    s.set_defaults(func=cmd_scale_boxes)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"vra {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"vra {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
