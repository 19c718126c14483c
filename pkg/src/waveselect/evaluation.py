"""Confusion matrices, fine and grouped accuracy, one-vs-rest ROC/AUC."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .numerology import DEFAULT_GROUPING, LABELS, NUM_CLASSES, group_of


def _labels(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.int64).ravel()
    if np.any((arr < 1) | (arr > NUM_CLASSES)):
        raise ValueError(f"labels must lie in 1..{NUM_CLASSES}")
    return arr


def confusion(true, pred) -> np.ndarray:
    """10x10 counts, rows = true label, columns = predicted label."""
    t, p = _labels(true), _labels(pred)
    if len(t) != len(p):
        raise ValueError(f"length mismatch: {len(t)} true vs {len(p)} predicted labels")
    cm = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(cm, (t - 1, p - 1), 1)
    return cm


def accuracy(cm: np.ndarray) -> float:
    total = int(np.sum(cm))
    if total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return float(np.trace(cm)) / total


def grouped_accuracy(true, pred, grouping: Mapping[int, int] = DEFAULT_GROUPING) -> float:
    t, p = _labels(true), _labels(pred)
    if len(t) != len(p):
        raise ValueError("length mismatch")
    if len(t) == 0:
        raise ValueError("grouped accuracy of an empty sample")
    lut = np.array([0] + [group_of(c, grouping) for c in LABELS])
    return float(np.mean(lut[t] == lut[p]))


@dataclass
class ClassRoc:
    label: int
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float | None  # None when the class is absent from the truth


@dataclass
class RocCurve:
    classes: list[ClassRoc]
    macro_auc: float
    excluded: list[int] = field(default_factory=list)  # labels with undefined AUC


def roc_one_class(positive: np.ndarray, scores: np.ndarray, label: int) -> ClassRoc:
    """ROC of one column: a sample is called positive when score >= threshold."""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    thresholds = np.unique(np.concatenate([scores, [0.0, 1.0]]))[::-1]
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    pos_cum = np.concatenate([[0], np.cumsum(positive[order])])
    # number of samples with score >= t
    count = np.searchsorted(-s_sorted, -thresholds, side="right")
    tp = pos_cum[count]
    fp = count - tp
    tpr = tp / n_pos if n_pos else np.zeros(len(thresholds))
    fpr = fp / n_neg if n_neg else np.zeros(len(thresholds))
    if tpr[0] > 0 or fpr[0] > 0:
        # some score equals 1: start the curve from an empty selection
        thresholds = np.concatenate([[np.inf], thresholds])
        tpr = np.concatenate([[0.0], tpr])
        fpr = np.concatenate([[0.0], fpr])
    keep = np.ones(len(thresholds), dtype=bool)
    keep[1:] = (np.diff(tpr) != 0) | (np.diff(fpr) != 0)
    thresholds, tpr, fpr = thresholds[keep], tpr[keep], fpr[keep]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2)) if n_pos and n_neg else None
    return ClassRoc(label, thresholds, fpr, tpr, auc)


def roc_ovr(true, scores) -> RocCurve:
    """Per-class one-vs-rest ROC with trapezoidal AUC; macro AUC over classes in the truth."""
    t = _labels(true)
    s = np.asarray(scores, dtype=float)
    if s.shape != (len(t), NUM_CLASSES):
        raise ValueError(f"score matrix must be ({len(t)}, {NUM_CLASSES})")
    classes = [roc_one_class(t == c, s[:, c - 1], c) for c in LABELS]
    defined = [c.auc for c in classes if c.auc is not None]
    excluded = [c.label for c in classes if c.auc is None]
    macro = float(np.mean(defined)) if defined else float("nan")
    return RocCurve(classes, macro, excluded)


# --- writers -----------------------------------------------------------------

def write_confusion_csv(cm: np.ndarray, stream: io.TextIOBase) -> None:
    stream.write("true\\pred," + ",".join(str(c) for c in LABELS) + "\n")
    for c, row in zip(LABELS, cm):
        stream.write(f"{c}," + ",".join(str(int(v)) for v in row) + "\n")


def write_roc_csv(roc: RocCurve, stream: io.TextIOBase) -> None:
    stream.write("class,threshold,fpr,tpr\n")
    for cr in roc.classes:
        for th, f, t in zip(cr.thresholds, cr.fpr, cr.tpr):
            stream.write(f"{cr.label},{th:.9g},{f:.9g},{t:.9g}\n")


@dataclass
class EvalSummary:
    model: str
    n: int
    accuracy: float
    grouped_accuracy: float
    macro_auc: float
    excluded: Sequence[int] = ()

    def lines(self) -> list[str]:
        out = [
            f"model = {self.model}",
            f"samples = {self.n}",
            f"accuracy = {self.accuracy:.6f}",
            f"grouped_accuracy = {self.grouped_accuracy:.6f}",
            f"macro_auc_ovr = {self.macro_auc:.6f}",
        ]
        if self.excluded:
            out.append("auc_undefined_classes = " + ",".join(map(str, self.excluded)))
        return out


def evaluate(model_name: str, true, proba, grouping: Mapping[int, int] = DEFAULT_GROUPING):
    """Confusion matrix, ROC and summary for one model's test-set probabilities."""
    proba = np.asarray(proba, dtype=float)
    pred = np.argmax(proba, axis=1) + 1
    cm = confusion(true, pred)
    roc = roc_ovr(true, proba)
    summary = EvalSummary(
        model_name, len(pred), accuracy(cm), grouped_accuracy(true, pred, grouping), roc.macro_auc, roc.excluded
    )
    return cm, roc, summary
