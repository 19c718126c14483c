"""Labeled-dataset CSV, stratified splits and text model files."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import NUM_FEATURES, Scaler, read_scaler, write_scaler
from .ml import MODEL_KINDS, Classifier, DecisionTree, GaussianNB, KNNClassifier, MLPClassifier
from .numerology import LABELS, NUM_CLASSES

CSV_HEADER = ["scenario_id"] + [f"f{i}" for i in range(1, NUM_FEATURES + 1)] + ["label"]


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    pass


class SplitError(ValueError):
    pass


class ModelLoadError(ValueError):
    pass


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write UTF-8 text via a temporary sibling file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(eq=False)
class LabeledDataset:
    scenario_ids: np.ndarray
    X: np.ndarray
    y: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        self.scenario_ids = np.asarray(self.scenario_ids, dtype=np.int64)
        self.X = np.asarray(self.X, dtype=float).reshape(-1, NUM_FEATURES)
        self.y = np.asarray(self.y, dtype=np.int64)
        n = len(self.scenario_ids)
        if len(self.X) != n or len(self.y) != n:
            raise SchemaError("ids, features and labels must have equal length")
        if len(np.unique(self.scenario_ids)) != n:
            raise SchemaError("scenario ids must be unique")
        if np.any((self.y < 1) | (self.y > NUM_CLASSES)):
            raise SchemaError(f"labels must lie in 1..{NUM_CLASSES}")

    def __len__(self) -> int:
        return len(self.y)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            np.array_equal(self.scenario_ids, other.scenario_ids)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    def subset(self, index) -> "LabeledDataset":
        return LabeledDataset(self.scenario_ids[index], self.X[index], self.y[index], self.provenance)

    @classmethod
    def from_rows(cls, rows, provenance: str = "") -> "LabeledDataset":
        return cls(
            np.array([r.scenario_id for r in rows], dtype=np.int64),
            np.array([r.features for r in rows], dtype=float).reshape(-1, NUM_FEATURES),
            np.array([r.label for r in rows], dtype=np.int64),
            provenance,
        )


def dataset_to_csv(dataset: LabeledDataset) -> str:
    buf = io.StringIO()
    if dataset.provenance:
        buf.write(f"# {dataset.provenance}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for sid, x, lab in zip(dataset.scenario_ids, dataset.X, dataset.y):
        w.writerow([int(sid), *(f"{v:.9g}" for v in x), int(lab)])
    return buf.getvalue()


def write_csv(dataset: LabeledDataset, path) -> None:
    atomic_write(path, dataset_to_csv(dataset))


def parse_csv(text: str) -> LabeledDataset:
    lines = text.splitlines()
    provenance = ""
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        provenance = lines[start][1:].strip()
        start += 1
    if start >= len(lines) or not lines[start].strip():
        raise SchemaError("missing header row")
    header = next(csv.reader([lines[start]]))
    if [h.strip() for h in header] != CSV_HEADER:
        raise SchemaError(f"line {start + 1}: header must be {','.join(CSV_HEADER)}")
    ids, feats, labels = [], [], []
    for lineno, row in enumerate(csv.reader(lines[start + 1:]), start=start + 2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise SchemaError(f"line {lineno}: expected {len(CSV_HEADER)} columns, got {len(row)}")
        try:
            ids.append(int(row[0]))
            feats.append([float(v) for v in row[1:-1]])
            labels.append(int(row[-1]))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if not 1 <= labels[-1] <= NUM_CLASSES:
            raise ParseError(f"line {lineno}: label {labels[-1]} outside 1..{NUM_CLASSES}")
    return LabeledDataset(
        np.array(ids, dtype=np.int64),
        np.array(feats, dtype=float).reshape(-1, NUM_FEATURES),
        np.array(labels, dtype=np.int64),
        provenance,
    )


def read_csv(path) -> LabeledDataset:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


# --- stratified split ----------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_frac, self.val_frac, self.test_frac)
        if min(fr) <= 0 or abs(sum(fr) - 1.0) > 1e-12:
            raise ValueError(f"split fractions must be positive and sum to 1, got {fr}")


def _cut_sizes(n: int, fracs: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n rows; ties favour the earlier split."""
    exact = [n * f for f in fracs]
    sizes = [int(np.floor(e)) for e in exact]
    rest = n - sum(sizes)
    order = sorted(range(len(fracs)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:rest]:
        sizes[i] += 1
    return sizes


def split_stratified(dataset: LabeledDataset, spec: SplitSpec = SplitSpec()):
    """Per-class seeded shuffle and proportional cut into (train, val, test)."""
    rng = np.random.default_rng(spec.seed)
    parts: list[list[int]] = [[], [], []]
    fracs = (spec.train_frac, spec.val_frac, spec.test_frac)
    for c in LABELS:
        # canonical order first so the split ignores input row order
        members = np.nonzero(dataset.y == c)[0]
        if len(members) == 0:
            continue
        if len(members) < 3:
            raise SplitError(f"class {c} has {len(members)} rows; at least 3 are needed")
        members = members[np.argsort(dataset.scenario_ids[members], kind="stable")]
        members = members[rng.permutation(len(members))]
        a, b, _ = _cut_sizes(len(members), fracs)
        parts[0].extend(members[:a])
        parts[1].extend(members[a:a + b])
        parts[2].extend(members[a + b:])
    out = []
    for p in parts:
        idx = np.array(sorted(p, key=lambda i: (dataset.y[i], dataset.scenario_ids[i])), dtype=np.int64)
        out.append(dataset.subset(idx))
    return tuple(out)


# --- model files -----------------------------------------------------------------

@dataclass
class ModelBundle:
    """A classifier with the scaler fitted on its training split."""

    model: Classifier
    scaler: Scaler | None = None

    @property
    def kind(self) -> str:
        return self.model.kind

    def predict_proba(self, X_raw) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X_raw, dtype=float))
        if self.scaler is not None:
            X = self.scaler.transform(X)
        return self.model.predict_proba(X)

    def predict(self, X_raw) -> np.ndarray:
        return np.argmax(self.predict_proba(X_raw), axis=1) + 1


def _model_state(model: Classifier) -> dict[str, np.ndarray]:
    if isinstance(model, KNNClassifier):
        return {"k": np.array([model.k]), "X": model.X, "y": model.y}
    if isinstance(model, GaussianNB):
        return {"var_floor": np.array([model.var_floor]), "means": model.means,
                "vars": model.vars, "priors": model.priors}
    if isinstance(model, DecisionTree):
        return {
            "max_depth": np.array([-1 if model.max_depth is None else model.max_depth]),
            "min_leaf": np.array([model.min_leaf]),
            "feature": model.feature, "threshold": model.threshold,
            "left": model.left, "right": model.right, "value": model.value,
        }
    if isinstance(model, MLPClassifier):
        hyper = np.array([model.hidden, model.lr, model.momentum, model.max_epochs, model.patience, model.seed])
        return {"hyper": hyper, **model.params}
    raise TypeError(f"cannot serialize {type(model).__name__}")


_INT_SECTIONS = {"k", "y", "max_depth", "min_leaf", "feature", "left", "right"}


def _model_from_state(kind: str, s: dict[str, np.ndarray]) -> Classifier:
    if kind == "knn":
        m = KNNClassifier(int(s["k"].flat[0]))
        m.X, m.y = s["X"], s["y"].ravel()
    elif kind == "nb":
        m = GaussianNB(float(s["var_floor"].flat[0]))
        m.means, m.vars, m.priors = s["means"], s["vars"], s["priors"].ravel()
    elif kind == "tree":
        depth = int(s["max_depth"].flat[0])
        m = DecisionTree(None if depth < 0 else depth, int(s["min_leaf"].flat[0]))
        m.feature, m.left, m.right = s["feature"].ravel(), s["left"].ravel(), s["right"].ravel()
        m.threshold, m.value = s["threshold"].ravel(), s["value"]
    elif kind == "mlp":
        h = s["hyper"].ravel()
        m = MLPClassifier(int(h[0]), float(h[1]), float(h[2]), int(h[3]), int(h[4]), int(h[5]))
        m.params = {k: s[k] if k.startswith("W") else s[k].ravel() for k in ("W1", "b1", "W2", "b2")}
    else:
        raise ModelLoadError(f"unknown model kind {kind!r}")
    return m


def _fmt(v, is_int: bool) -> str:
    return str(int(v)) if is_int else repr(float(v))


def model_to_text(bundle: ModelBundle | Classifier) -> str:
    if isinstance(bundle, Classifier):
        bundle = ModelBundle(bundle)
    out = io.StringIO()
    out.write(f"model {bundle.kind} v1\n")
    if bundle.scaler is not None:
        write_scaler(bundle.scaler, out)
    for name, arr in _model_state(bundle.model).items():
        arr = np.asarray(arr)
        # vectors are stored as a single row
        arr2 = arr.reshape(1, -1) if arr.ndim == 1 else arr.reshape(arr.shape[0], -1)
        is_int = name in _INT_SECTIONS
        out.write(f"section {name} {arr2.shape[0]} {arr2.shape[1]}\n")
        for row in arr2:
            out.write(" ".join(_fmt(v, is_int) for v in row) + "\n")
    out.write("end\n")
    return out.getvalue()


def model_from_text(text: str, expected_kind: str | None = None) -> ModelBundle:
    lines = text.split("\n")
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[0] != "model":
        raise ModelLoadError("missing 'model <kind> v1' header")
    kind, version = head[1], head[2]
    if version != "v1":
        raise ModelLoadError(f"unsupported model format version {version!r}")
    if kind not in MODEL_KINDS:
        raise ModelLoadError(f"unknown model kind {kind!r}")
    if expected_kind is not None and kind != expected_kind:
        raise ModelLoadError(f"expected a {expected_kind} model, file holds {kind}")
    pos = 1
    scaler = None
    if pos < len(lines) and lines[pos].strip() == "scaler v1":
        try:
            scaler = read_scaler(lines[pos:pos + 1 + NUM_FEATURES])
        except ValueError as exc:
            raise ModelLoadError(str(exc)) from None
        pos += 1 + NUM_FEATURES
    state: dict[str, np.ndarray] = {}
    while True:
        if pos >= len(lines):
            raise ModelLoadError("truncated model file: missing 'end'")
        line = lines[pos].split()
        pos += 1
        if line == ["end"]:
            break
        if len(line) != 4 or line[0] != "section":
            raise ModelLoadError(f"line {pos}: expected a section header")
        name, rows, cols = line[1], int(line[2]), int(line[3])
        if pos + rows > len(lines):
            raise ModelLoadError(f"truncated model file in section {name!r}")
        try:
            data = [[float(v) for v in lines[pos + r].split()] for r in range(rows)]
        except ValueError as exc:
            raise ModelLoadError(f"section {name!r}: {exc}") from None
        if any(len(r) != cols for r in data):
            raise ModelLoadError(f"section {name!r}: ragged or truncated rows")
        arr = np.array(data, dtype=float).reshape(rows, cols)
        if name in _INT_SECTIONS:
            arr = arr.astype(np.int64)
        state[name] = arr
        pos += rows
    try:
        model = _model_from_state(kind, state)
    except KeyError as exc:
        raise ModelLoadError(f"model file lacks section {exc}") from None
    return ModelBundle(model, scaler)


def save_model(bundle: ModelBundle | Classifier, path) -> None:
    atomic_write(path, model_to_text(bundle))


def load_model(path, expected_kind: str | None = None) -> ModelBundle:
    return model_from_text(Path(path).read_text(encoding="utf-8"), expected_kind)


def save_scaler(scaler: Scaler, path) -> None:
    buf = io.StringIO()
    write_scaler(scaler, buf)
    atomic_write(path, buf.getvalue())


def load_scaler(path) -> Scaler:
    return read_scaler(Path(path).read_text(encoding="utf-8").splitlines())
