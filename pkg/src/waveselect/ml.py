"""From-scratch classifiers over the 10 class labels.

All models take standardized feature matrices and integer labels 1..10 and
return (n, 10) probability matrices whose column j belongs to label j + 1.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .numerology import NUM_CLASSES

_CHUNK = 256


class FitError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, epoch: int, lr: float):
        super().__init__(f"training diverged at epoch {epoch} with learning rate {lr}")
        self.epoch = epoch
        self.lr = lr


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise FitError("X must be 2-D with one label per row")
    if len(y) == 0:
        raise FitError("empty training set")
    if np.any((y < 1) | (y > NUM_CLASSES)):
        raise FitError(f"labels must lie in 1..{NUM_CLASSES}")
    return X, y


def _one_hot(y: np.ndarray) -> np.ndarray:
    out = np.zeros((len(y), NUM_CLASSES))
    out[np.arange(len(y)), y - 1] = 1.0
    return out


class Classifier:
    kind = ""

    def fit(self, X, y):
        raise NotImplementedError

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest label on ties
        return np.argmax(self.predict_proba(X), axis=1) + 1


# --- k nearest neighbours ------------------------------------------------------

class KNNClassifier(Classifier):
    kind = "knn"

    def __init__(self, k: int = 5):
        if k <= 0:
            raise ValueError("k must be positive")
        self.k = int(k)
        self.X: np.ndarray | None = None
        self.y: np.ndarray | None = None

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        if self.k > len(X):
            raise FitError(f"k={self.k} exceeds {len(X)} training rows")
        self.X, self.y = X.copy(), y.copy()
        return self

    def neighbours(self, X, k: int | None = None) -> np.ndarray:
        """Indices of the k nearest training rows, nearest first.

        Equal distances are resolved in favour of the lower row index.
        """
        k = self.k if k is None else k
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty((len(X), k), dtype=np.int64)
        for start in range(0, len(X), _CHUNK):
            d = np.sum((X[start:start + _CHUNK, None, :] - self.X[None, :, :]) ** 2, axis=2)
            out[start:start + _CHUNK] = _k_smallest_stable(d, k)
        return out

    def predict_proba(self, X, k: int | None = None) -> np.ndarray:
        k = self.k if k is None else k
        idx = self.neighbours(X, k)
        labels = self.y[idx]
        proba = np.zeros((len(idx), NUM_CLASSES))
        for c in range(NUM_CLASSES):
            proba[:, c] = np.count_nonzero(labels == c + 1, axis=1)
        return proba / k


def _k_smallest_stable(d: np.ndarray, k: int) -> np.ndarray:
    """Row-wise k smallest entries ordered by (value, column index)."""
    if k == d.shape[1]:
        return np.argsort(d, axis=1, kind="stable")
    kth = np.partition(d, k - 1, axis=1)[:, k - 1:k]
    below = d < kth
    need = k - below.sum(axis=1, keepdims=True)
    at = d == kth
    keep = below | (at & (np.cumsum(at, axis=1) <= need))
    # nonzero yields columns ascending within each row; a stable sort keeps that order on ties
    cols = np.nonzero(keep)[1].reshape(len(d), k)
    vals = np.take_along_axis(d, cols, axis=1)
    order = np.argsort(vals, axis=1, kind="stable")
    return np.take_along_axis(cols, order, axis=1)


# --- Gaussian naive Bayes ------------------------------------------------------

class GaussianNB(Classifier):
    kind = "nb"

    def __init__(self, var_floor: float = 1e-9):
        self.var_floor = var_floor
        self.means: np.ndarray | None = None
        self.vars: np.ndarray | None = None
        self.priors: np.ndarray | None = None

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        missing = [c for c in range(1, NUM_CLASSES + 1) if not np.any(y == c)]
        if missing:
            raise FitError(f"classes absent from training data: {missing}")
        self.means = np.array([X[y == c].mean(axis=0) for c in range(1, NUM_CLASSES + 1)])
        var = np.array([X[y == c].var(axis=0) for c in range(1, NUM_CLASSES + 1)])
        self.vars = np.maximum(var, self.var_floor)
        self.priors = np.bincount(y, minlength=NUM_CLASSES + 1)[1:] / len(y)
        return self

    def log_joint(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        diff = X[:, None, :] - self.means[None, :, :]
        ll = -0.5 * np.sum(np.log(2 * np.pi * self.vars)[None] + diff**2 / self.vars[None], axis=2)
        return ll + np.log(self.priors)[None, :]

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.log_joint(X))


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# --- CART decision tree ----------------------------------------------------------

def gini(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


class DecisionTree(Classifier):
    kind = "tree"

    def __init__(self, max_depth: int | None = None, min_leaf: int = 1):
        if max_depth is not None and max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        self.max_depth = max_depth
        self.min_leaf = int(min_leaf)
        # node arrays; feature == -1 marks a leaf
        self.feature = np.empty(0, dtype=np.int64)
        self.threshold = np.empty(0)
        self.left = np.empty(0, dtype=np.int64)
        self.right = np.empty(0, dtype=np.int64)
        self.value = np.empty((0, NUM_CLASSES))

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        Y = _one_hot(y)
        feature, threshold, left, right, value = [], [], [], [], []

        def new_node(counts):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(counts / counts.sum())
            return len(feature) - 1

        stack = [(np.arange(len(y)), 0, None)]
        while stack:
            idx, depth, parent = stack.pop()
            counts = Y[idx].sum(axis=0)
            node = new_node(counts)
            if parent is not None:
                pnode, side = parent
                (left if side == 0 else right)[pnode] = node
            if np.count_nonzero(counts) <= 1:
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            split = self._best_split(X[idx], Y[idx])
            if split is None:
                continue
            f, thr = split
            go_left = X[idx, f] <= thr
            feature[node], threshold[node] = f, thr
            # right pushed first so the left subtree is numbered first
            stack.append((idx[~go_left], depth + 1, (node, 1)))
            stack.append((idx[go_left], depth + 1, (node, 0)))

        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value)
        return self

    def _best_split(self, X, Y):
        """Lowest weighted Gini over all valid (feature, midpoint) pairs.

        A split is taken even without immediate gain (as XOR-like data
        needs); growth stops only on purity, depth or min_leaf.
        """
        n = len(X)
        best = None
        best_score = np.inf
        for f in range(X.shape[1]):
            order = np.argsort(X[:, f], kind="stable")
            xs = X[order, f]
            cum = np.cumsum(Y[order], axis=0)[:-1]
            n_left = np.arange(1, n)
            valid = (xs[1:] != xs[:-1]) & (n_left >= self.min_leaf) & (n - n_left >= self.min_leaf)
            if not np.any(valid):
                continue
            total = cum[-1] + Y[order[-1]]
            right = total[None, :] - cum
            nl = n_left[:, None].astype(float)
            nr = n - nl
            g_left = 1.0 - np.sum((cum / nl) ** 2, axis=1)
            g_right = 1.0 - np.sum((right / nr) ** 2, axis=1)
            score = (nl[:, 0] * g_left + nr[:, 0] * g_right) / n
            score = np.where(valid, score, np.inf)
            i = int(np.argmin(score))
            if score[i] < best_score:
                best_score = score[i]
                best = (f, 0.5 * (xs[i] + xs[i + 1]))
        return best

    @property
    def num_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            rows = np.nonzero(active)[0]
            nd = node[rows]
            go_left = X[rows, self.feature[nd]] <= self.threshold[nd]
            node[rows] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]


# --- one-hidden-layer network ------------------------------------------------------

class MLPClassifier(Classifier):
    kind = "mlp"

    def __init__(self, hidden: int = 20, lr: float = 0.05, momentum: float = 0.9,
                 max_epochs: int = 3000, patience: int = 20, seed: int = 0):
        self.hidden = hidden
        self.lr = lr
        self.momentum = momentum
        self.max_epochs = max_epochs
        self.patience = patience
        self.seed = seed
        self.params: dict[str, np.ndarray] = {}
        self.epochs_run = 0

    def init_params(self, n_features: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        shapes = {"W1": (n_features, self.hidden), "b1": (self.hidden,),
                  "W2": (self.hidden, NUM_CLASSES), "b2": (NUM_CLASSES,)}
        return {k: rng.uniform(-0.5, 0.5, size=s) for k, s in shapes.items()}

    @staticmethod
    def forward(params, X):
        h = np.tanh(X @ params["W1"] + params["b1"])
        return h, _softmax(h @ params["W2"] + params["b2"])

    @classmethod
    def loss(cls, params, X, Y) -> float:
        _, p = cls.forward(params, X)
        return float(-np.mean(np.sum(Y * np.log(np.maximum(p, 1e-300)), axis=1)))

    @classmethod
    def loss_and_grad(cls, params, X, Y):
        """Mean cross-entropy and its gradient by backpropagation."""
        n = len(X)
        h, p = cls.forward(params, X)
        loss = float(-np.mean(np.sum(Y * np.log(np.maximum(p, 1e-300)), axis=1)))
        d_out = (p - Y) / n
        d_h = (d_out @ params["W2"].T) * (1.0 - h * h)
        grads = {
            "W2": h.T @ d_out,
            "b2": d_out.sum(axis=0),
            "W1": X.T @ d_h,
            "b1": d_h.sum(axis=0),
        }
        return loss, grads

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = _check_xy(X, y)
        Y = _one_hot(y)
        if X_val is None:
            X_val, Y_val = X, Y
        else:
            X_val, y_val = _check_xy(X_val, y_val)
            Y_val = _one_hot(y_val)
        params = self.init_params(X.shape[1])
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
        best = {k: v.copy() for k, v in params.items()}
        best_val = self.loss(params, X_val, Y_val)
        stale = 0
        epoch = 0
        for epoch in range(1, self.max_epochs + 1):
            loss, grads = self.loss_and_grad(params, X, Y)
            if not np.isfinite(loss):
                raise DivergenceError(epoch, self.lr)
            for k in params:
                velocity[k] = self.momentum * velocity[k] - self.lr * grads[k]
                params[k] = params[k] + velocity[k]
            val = self.loss(params, X_val, Y_val)
            if not np.isfinite(val):
                raise DivergenceError(epoch, self.lr)
            if val < best_val:
                best_val, stale = val, 0
                best = {k: v.copy() for k, v in params.items()}
            else:
                stale += 1
                if stale >= self.patience:
                    break
        self.params = best
        self.epochs_run = epoch
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.forward(self.params, X)[1]


def numeric_gradient(f: Callable[[], float], params: dict[str, np.ndarray], step: float = 1e-5):
    """Central differences of f with respect to every entry of params (perturbed in place)."""
    grads = {}
    for k, arr in params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = arr[i]
            arr[i] = orig + step
            up = f()
            arr[i] = orig - step
            down = f()
            arr[i] = orig
            g[i] = (up - down) / (2 * step)
        grads[k] = g
    return grads


def gradient_check(model: MLPClassifier, X, y, step: float = 1e-5,
                   grad_fn: Callable | None = None, params: dict | None = None) -> float:
    """Max relative error between backpropagated and central-difference gradients.

    `grad_fn(params, X, Y) -> (loss, grads)` defaults to the model's own
    backpropagation; `params` defaults to the model's current (or freshly
    initialised) weights.
    """
    X, y = _check_xy(X, y)
    Y = _one_hot(y)
    if params is None:
        params = model.params or model.init_params(X.shape[1])
    params = {k: np.array(v, dtype=float, copy=True) for k, v in params.items()}
    grad_fn = grad_fn or model.loss_and_grad
    _, analytic = grad_fn(params, X, Y)
    numeric = numeric_gradient(lambda: model.loss(params, X, Y), params, step)
    worst = 0.0
    for k in params:
        a, n = analytic[k], numeric[k]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


MODEL_KINDS = {
    "knn": KNNClassifier,
    "nb": GaussianNB,
    "tree": DecisionTree,
    "mlp": MLPClassifier,
}
