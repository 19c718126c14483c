"""Command-line driver: generate -> label -> split -> train -> evaluate -> predict.

Exit status is 0 on success, 1 on a runtime failure (missing file, bad data,
training failure) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, PipelineConfig, load_config
from .dataio import atomic_write, load_model, read_csv, save_model, split_stratified, write_csv
from .features import NUM_FEATURES
from .labeler import BalanceError
from .ml import MODEL_KINDS
from .numerology import LABELS
from .pipeline import build_dataset, evaluate_bundle, run_pipeline, summary_text, train_model, write_evaluation
from .scenario import generate_scenarios, read_raw_csv, write_raw_csv

log = logging.getLogger("waveselect")


class UsageError(Exception):
    pass


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    workers = getattr(args, "workers", None)
    if workers is not None:
        if workers < 1:
            raise UsageError("--workers must be >= 1")
        cfg = dataclasses.replace(cfg, workers=workers)
    return cfg


def cmd_generate(args) -> None:
    cfg = _config(args)
    scenarios = generate_scenarios(cfg.scenario_config(), cfg.workers)
    buf = io.StringIO()
    write_raw_csv(scenarios, buf)
    atomic_write(args.out, buf.getvalue())
    log.info("wrote %d scenarios to %s", len(scenarios), args.out)


def cmd_label(args) -> None:
    cfg = _config(args)
    with open(args.inp, encoding="utf-8", newline="") as fh:
        scenarios = list(read_raw_csv(fh))
    if not scenarios:
        raise ValueError(f"{args.inp}: no scenarios")
    dataset, counts = build_dataset(cfg, scenarios)
    log.info("class counts before balancing: %s", " ".join(map(str, counts)))
    write_csv(dataset, args.out)
    log.info("wrote %d balanced rows to %s", len(dataset), args.out)


def cmd_split(args) -> None:
    cfg = _config(args)
    dataset = read_csv(args.inp)
    for name, part in zip(("train", "val", "test"), split_stratified(dataset, cfg.split_spec())):
        write_csv(part, f"{args.out_prefix}_{name}.csv")
        log.info("%s: %d rows", name, len(part))


def cmd_train(args) -> None:
    cfg = _config(args)
    bundle, report = train_model(args.model, read_csv(args.train), read_csv(args.val), cfg)
    save_model(bundle, args.out)
    print(report.describe())


def cmd_evaluate(args) -> None:
    bundle = load_model(args.model)
    cm, roc, summary = evaluate_bundle(bundle.kind, bundle, read_csv(args.test))
    write_evaluation(args.out_prefix, cm, roc, summary)
    print("\n".join(summary.lines()))


def cmd_predict(args) -> None:
    try:
        x = np.array([float(v) for v in args.features.split(",")])
    except ValueError:
        raise UsageError(f"--features must be {NUM_FEATURES} comma-separated numbers") from None
    if x.shape != (NUM_FEATURES,):
        raise UsageError(f"--features needs {NUM_FEATURES} values, got {len(x)}")
    proba = load_model(args.model).predict_proba(x)[0]
    print(f"label = {int(np.argmax(proba)) + 1}")
    for c, p in zip(LABELS, proba):
        print(f"p[{c}] = {p:.6f}")


def cmd_pipeline(args) -> None:
    cfg = _config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_pipeline(cfg, out)
    print(summary_text(result), end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waveselect", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def with_config(p, workers=False):
        p.add_argument("--config", help="key = value configuration file (defaults if omitted)")
        if workers:
            p.add_argument("--workers", type=int, help="process count; never changes the output")

    p = sub.add_parser("generate", help="draw random cell scenarios")
    with_config(p, workers=True)
    p.add_argument("--out", required=True, help="raw scenario CSV to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="extract features, label and balance scenarios")
    with_config(p, workers=True)
    p.add_argument("--in", dest="inp", required=True, help="raw scenario CSV")
    p.add_argument("--out", required=True, help="labeled dataset CSV to write")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("split", help="stratified train/validation/test split")
    with_config(p)
    p.add_argument("--in", dest="inp", required=True, help="labeled dataset CSV")
    p.add_argument("--out-prefix", required=True, help="writes PREFIX_{train,val,test}.csv")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit a classifier with validation-set model selection")
    with_config(p)
    p.add_argument("--model", required=True, choices=MODEL_KINDS)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="confusion matrix, ROC curves and summary on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out-prefix", required=True,
                   help="writes PREFIX_confusion.csv, PREFIX_roc.csv, PREFIX_summary.txt")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify one feature vector")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True, help=f"{NUM_FEATURES} comma-separated raw feature values")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("pipeline", help="run every step and train all models")
    with_config(p, workers=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already printed usage or help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"waveselect: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, ConfigError, BalanceError) as exc:
        print(f"waveselect: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
