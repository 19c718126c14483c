"""Programmatic pipeline steps shared by the command line and the tests.

Each step is a pure function of its inputs and the configuration, so running
the same configuration twice yields identical files.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .dataio import (LabeledDataset, ModelBundle, atomic_write, dataset_to_csv, parse_csv, save_model,
                     split_stratified, write_csv)
from .evaluation import EvalSummary, evaluate, write_confusion_csv, write_roc_csv
from .features import fit_scaler
from .labeler import balance_dataset, class_counts, label_scenarios
from .ml import MODEL_KINDS, DecisionTree, DivergenceError, FitError, GaussianNB, KNNClassifier, MLPClassifier
from .scenario import generate_scenarios, read_raw_csv, write_raw_csv

log = logging.getLogger(__name__)


@dataclass
class TrainReport:
    kind: str
    params: dict
    val_accuracy: float

    def describe(self) -> str:
        hp = ", ".join(f"{k}={v}" for k, v in self.params.items()) or "-"
        return f"{self.kind} [{hp}] validation accuracy {self.val_accuracy:.4f}"


def _candidates(kind: str, cfg: PipelineConfig, n_train: int):
    if kind == "knn":
        for k in cfg.knn_k_grid:
            if k <= n_train:
                yield {"k": k}, KNNClassifier(k)
    elif kind == "nb":
        yield {}, GaussianNB()
    elif kind == "tree":
        for depth in cfg.tree_depth_grid:
            yield {"max_depth": depth, "min_leaf": cfg.tree_min_leaf}, DecisionTree(depth, cfg.tree_min_leaf)
    elif kind == "mlp":
        for lr in cfg.mlp_lr_grid:
            model = MLPClassifier(cfg.mlp_hidden, lr, max_epochs=cfg.mlp_max_epochs,
                                  patience=cfg.mlp_patience, seed=cfg.master_seed)
            yield {"hidden": cfg.mlp_hidden, "lr": lr}, model
    else:
        raise ValueError(f"unknown model kind {kind!r}; choose from {', '.join(MODEL_KINDS)}")


def train_model(kind: str, train: LabeledDataset, val: LabeledDataset,
                cfg: PipelineConfig = PipelineConfig()) -> tuple[ModelBundle, TrainReport]:
    """Fit the scaler on `train`, grid-search on `val` accuracy, keep the first best."""
    if len(train) < 2 or len(val) == 0:
        raise FitError("training needs at least two training rows and one validation row")
    scaler = fit_scaler(train.X)
    Xt, Xv = scaler.transform(train.X), scaler.transform(val.X)
    best = None
    for params, model in _candidates(kind, cfg, len(train)):
        try:
            if kind == "mlp":
                model.fit(Xt, train.y, Xv, val.y)
            else:
                model.fit(Xt, train.y)
        except DivergenceError as exc:
            log.warning("skipping %s %s: %s", kind, params, exc)
            continue
        acc = float(np.mean(model.predict(Xv) == val.y))
        log.info("%s %s: validation accuracy %.4f", kind, params, acc)
        if best is None or acc > best[2]:
            best = (model, params, acc)
    if best is None:
        raise FitError(f"no {kind} candidate could be trained")
    model, params, acc = best
    return ModelBundle(model, scaler), TrainReport(kind, params, acc)


def evaluate_bundle(name: str, bundle: ModelBundle, test: LabeledDataset):
    return evaluate(name, test.y, bundle.predict_proba(test.X))


def write_evaluation(prefix: str | Path, cm, roc, summary: EvalSummary) -> None:
    prefix = str(prefix)
    buf = io.StringIO()
    write_confusion_csv(cm, buf)
    atomic_write(prefix + "_confusion.csv", buf.getvalue())
    buf = io.StringIO()
    write_roc_csv(roc, buf)
    atomic_write(prefix + "_roc.csv", buf.getvalue())
    atomic_write(prefix + "_summary.txt", "\n".join(summary.lines()) + "\n")


def build_dataset(cfg: PipelineConfig, scenarios=None) -> tuple[LabeledDataset, np.ndarray]:
    """Label (and balance) the configured scenarios; returns the dataset and pre-balance counts."""
    if scenarios is None:
        scenarios = generate_scenarios(cfg.scenario_config(), cfg.workers)
    rows = label_scenarios(scenarios, cfg.labeler_config(), cfg.workers)
    counts = class_counts(rows)
    balanced = balance_dataset(rows, cfg.master_seed)
    return LabeledDataset.from_rows(balanced, provenance=f"config {cfg.digest()}"), counts


@dataclass
class PipelineResult:
    counts: np.ndarray
    dataset: LabeledDataset
    splits: tuple[LabeledDataset, LabeledDataset, LabeledDataset]
    bundles: dict[str, ModelBundle]
    reports: dict[str, TrainReport]
    summaries: dict[str, EvalSummary]
    rocs: dict


def summary_text(result: PipelineResult) -> str:
    train, val, test = result.splits
    lines = [
        "pre_balance_counts = " + ",".join(str(int(c)) for c in result.counts),
        f"balanced_rows = {len(result.dataset)}",
        f"split_rows = {len(train)},{len(val)},{len(test)}",
    ]
    for kind, summary in result.summaries.items():
        lines.append("")
        lines.append("[" + kind + "]")
        lines.append("selected = " + result.reports[kind].describe())
        lines.extend(summary.lines())
    best = max(result.summaries.values(), key=lambda s: s.accuracy)
    lines += ["", f"best_model = {best.model}", f"best_accuracy = {best.accuracy:.6f}"]
    return "\n".join(lines) + "\n"


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path | None = None,
                 kinds=MODEL_KINDS) -> PipelineResult:
    """generate -> label/balance -> split -> train every model -> evaluate.

    Scenarios and the labeled dataset pass through their CSV text forms, so
    the results equal those of the step-by-step command-line chain, which
    exchanges data through files.
    """
    buf = io.StringIO()
    write_raw_csv(generate_scenarios(cfg.scenario_config(), cfg.workers), buf)
    raw_text = buf.getvalue()
    dataset, counts = build_dataset(cfg, list(read_raw_csv(io.StringIO(raw_text, newline=""))))
    dataset = parse_csv(dataset_to_csv(dataset))
    splits = split_stratified(dataset, cfg.split_spec())
    train, val, test = splits
    bundles, reports, summaries, rocs = {}, {}, {}, {}
    for kind in kinds:
        bundle, report = train_model(kind, train, val, cfg)
        cm, roc, summary = evaluate_bundle(kind, bundle, test)
        bundles[kind], reports[kind], summaries[kind], rocs[kind] = bundle, report, summary, roc
        if out_dir is not None:
            save_model(bundle, Path(out_dir) / f"{kind}.model")
            write_evaluation(Path(out_dir) / kind, cm, roc, summary)
    result = PipelineResult(counts, dataset, splits, bundles, reports, summaries, rocs)
    if out_dir is not None:
        out = Path(out_dir)
        atomic_write(out / "raw.csv", raw_text)
        write_csv(dataset, out / "labeled.csv")
        for name, part in zip(("train", "val", "test"), splits):
            write_csv(part, out / f"data_{name}.csv")
        atomic_write(out / "summary.txt", summary_text(result))
    return result
