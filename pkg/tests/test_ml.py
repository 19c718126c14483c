import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waveselect.ml import (
    DecisionTree,
    DivergenceError,
    FitError,
    GaussianNB,
    KNNClassifier,
    MLPClassifier,
    gini,
    gradient_check,
)


def ten_class_blobs(n_per=20, seed=0, spread=0.3):
    rng = np.random.default_rng(seed)
    centres = rng.normal(size=(10, 7)) * 3
    y = np.repeat(np.arange(1, 11), n_per)
    X = centres[y - 1] + rng.normal(size=(len(y), 7)) * spread
    return X, y


# --- KNN -------------------------------------------------------------------------

def test_knn_exact_match_k1():
    X, y = ten_class_blobs()
    knn = KNNClassifier(1).fit(X, y)
    p = knn.predict_proba(X[17:18])
    assert p[0, y[17] - 1] == 1.0 and p.sum() == 1.0


def test_knn_vote_fractions():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.2], [5.0, 5.0]])
    knn = KNNClassifier(3).fit(X, [1, 1, 2, 3])
    p = knn.predict_proba([[0.05, 0.05]])[0]
    np.testing.assert_allclose(p[:3], [2 / 3, 1 / 3, 0.0])
    assert knn.predict([[0.05, 0.05]])[0] == 1


def test_knn_all_points_vote_gives_prior():
    X, y = ten_class_blobs(n_per=3)
    y = y.copy()
    y[:5] = 4
    knn = KNNClassifier(len(X)).fit(X, y)
    prior = np.bincount(y, minlength=11)[1:] / len(y)
    for x in np.random.default_rng(1).normal(size=(5, 7)):
        np.testing.assert_allclose(knn.predict_proba(x)[0], prior)


def test_knn_distance_tie_prefers_lower_row():
    X = np.array([[1.0], [-1.0], [1.0]])
    knn = KNNClassifier(1).fit(X, [5, 6, 7])
    assert knn.predict([[0.0]])[0] == 5
    assert list(knn.neighbours([[0.0]], 3)[0]) == [0, 1, 2]


def test_knn_vote_tie_prefers_lower_label():
    knn = KNNClassifier(2).fit([[0.0], [1.0]], [9, 2])
    assert knn.predict([[0.5]])[0] == 2


def test_knn_config_errors():
    with pytest.raises(ValueError):
        KNNClassifier(0)
    with pytest.raises(FitError):
        KNNClassifier(5).fit(np.zeros((3, 2)), [1, 2, 3])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_knn_k1_memorises_deduplicated_set(seed):
    rng = np.random.default_rng(seed)
    X = np.unique(rng.integers(0, 4, size=(40, 3)).astype(float), axis=0)
    y = rng.integers(1, 11, size=len(X))
    assert np.all(KNNClassifier(1).fit(X, y).predict(X) == y)


def test_knn_chunking_matches_bruteforce():
    X, y = ten_class_blobs(n_per=30, seed=3, spread=2.0)
    q = np.random.default_rng(4).normal(size=(600, 7)) * 3
    knn = KNNClassifier(5).fit(X, y)
    d = ((q[:, None, :] - X[None]) ** 2).sum(-1)
    brute = np.argsort(d, axis=1, kind="stable")[:, :5]
    np.testing.assert_array_equal(knn.neighbours(q), brute)


# --- naive Bayes -----------------------------------------------------------------

def test_nb_separated_classes():
    # classes 1 and 2 near the origin (variance 1), the rest far away
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0.0, 1.0, 200), rng.normal(10.0, 1.0, 200),
                        *[rng.normal(100.0 * c, 1.0, 20) for c in range(3, 11)]])[:, None]
    y = np.concatenate([np.full(200, 1), np.full(200, 2), np.repeat(np.arange(3, 11), 20)])
    nb = GaussianNB().fit(X, y)
    p = nb.predict_proba([[nb.means[0, 0]]])[0]
    # closed form with unit variances: the class-2 likelihood ratio is about exp(-50)
    assert p[0] > 0.99
    assert p[1] == pytest.approx(np.exp(-0.5 * (nb.means[1, 0] - nb.means[0, 0]) ** 2
                                        / nb.vars[1, 0]) / np.sqrt(nb.vars[1, 0] / nb.vars[0, 0]), rel=0.5)


def test_nb_symmetric_point_is_even():
    base = np.array([-1.0, 1.0, -1.0, 1.0])
    X = np.concatenate([base - 2, base + 2] + [base + 50 * c for c in range(3, 11)])[:, None]
    y = np.repeat(np.arange(1, 11), 4)
    p = GaussianNB().fit(X, y).predict_proba([[0.0]])[0]
    assert p[0] == pytest.approx(0.5, abs=1e-12) and p[1] == pytest.approx(0.5, abs=1e-12)


def test_nb_zero_variance_is_floored():
    X, y = ten_class_blobs()
    X[:, 2] = 1.0
    nb = GaussianNB().fit(X, y)
    assert np.all(nb.vars[:, 2] == 1e-9)
    p = nb.predict_proba(X)
    assert np.all(np.isfinite(p)) and np.allclose(p.sum(axis=1), 1)


def test_nb_missing_class():
    X, y = ten_class_blobs()
    with pytest.raises(FitError, match="absent"):
        GaussianNB().fit(X[y != 4], y[y != 4])


# --- decision tree ---------------------------------------------------------------

def test_gini():
    assert gini([5, 5]) == 0.5
    assert gini([7]) == 0.0
    assert gini([0, 0]) == 0.0


def test_tree_pure_input_is_single_leaf():
    tree = DecisionTree().fit(np.random.default_rng(0).normal(size=(9, 3)), [4] * 9)
    assert tree.num_nodes == 1
    assert tree.predict_proba([[0, 0, 0]])[0, 3] == 1.0


def test_tree_xor_depth_two():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([1, 2, 2, 1])
    tree = DecisionTree(max_depth=2).fit(X, y)
    assert np.all(tree.predict(X) == y)
    # no feature helps at the root, so the first feature and lowest midpoint win
    assert tree.feature[0] == 0 and tree.threshold[0] == 0.5


def test_tree_respects_depth_and_min_leaf():
    X, y = ten_class_blobs(spread=3.0)
    assert DecisionTree(max_depth=1).fit(X, y).num_nodes == 3
    tree = DecisionTree(min_leaf=15).fit(X, y)
    leaves = tree.apply(X)
    assert np.bincount(leaves)[np.unique(leaves)].min() >= 15
    with pytest.raises(ValueError):
        DecisionTree(max_depth=0)
    with pytest.raises(FitError):
        DecisionTree().fit(np.zeros((0, 2)), [])


def test_tree_threshold_rule_is_less_equal():
    tree = DecisionTree().fit([[0.0], [2.0]], [3, 8])
    assert tree.threshold[0] == 1.0
    assert tree.predict([[1.0], [1.0000001]]).tolist() == [3, 8]


def test_tree_is_deterministic():
    X, y = ten_class_blobs(spread=2.0, seed=7)
    a, b = DecisionTree(6).fit(X, y), DecisionTree(6).fit(X, y)
    for name in ("feature", "threshold", "left", "right", "value"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


# --- MLP ---------------------------------------------------------------------------

def test_softmax_rows_sum_to_one():
    mlp = MLPClassifier(seed=3)
    mlp.params = mlp.init_params(7)
    p = mlp.predict_proba(np.random.default_rng(0).normal(size=(50, 7)) * 10)
    assert np.all(np.abs(p.sum(axis=1) - 1) < 1e-9) and np.all(p >= 0)
    for v in mlp.params.values():
        assert np.all(np.abs(v) <= 0.5)


def test_gradient_check_30_samples():
    X, y = ten_class_blobs(n_per=3, seed=1)
    assert len(X) == 30
    assert gradient_check(MLPClassifier(seed=0), X, y, step=1e-5) < 1e-4


def test_gradient_check_fresh_model_10_samples():
    X, y = ten_class_blobs(n_per=1, seed=2)
    assert gradient_check(MLPClassifier(hidden=5, seed=9), X, y) < 1e-4


def test_gradient_check_zero_weights():
    X = np.vstack([np.ones((5, 7)), -np.ones((5, 7))])
    y = np.arange(1, 11)
    zero = {k: np.zeros_like(v) for k, v in MLPClassifier().init_params(7).items()}
    err = gradient_check(MLPClassifier(), X, y, params=zero)
    assert np.isfinite(err) and err < 1e-4


def test_gradient_check_detects_corruption():
    X, y = ten_class_blobs(n_per=1, seed=2)
    mlp = MLPClassifier(seed=1)

    def broken(params, X, Y):
        loss, grads = MLPClassifier.loss_and_grad(params, X, Y)
        grads["W1"] = grads["W1"] + 1.0
        return loss, grads

    assert gradient_check(mlp, X, y, grad_fn=broken) > 1e-2


def test_mlp_separable_three_class():
    rng = np.random.default_rng(5)
    centres = np.array([[3.0, 0, 0, 0, 0, 0, 0], [0, 3.0, 0, 0, 0, 0, 0], [0, 0, 3.0, 0, 0, 0, 0]])
    y = np.repeat([2, 5, 9], 30)
    X = centres[np.repeat([0, 1, 2], 30)] + rng.normal(scale=0.3, size=(90, 7))
    mlp = MLPClassifier(lr=0.05, max_epochs=500, patience=500, seed=0).fit(X, y)
    assert mlp.epochs_run <= 500
    assert np.all(mlp.predict(X) == y)


def test_mlp_deterministic_and_early_stopping():
    X, y = ten_class_blobs(n_per=10, seed=4, spread=1.5)
    a = MLPClassifier(hidden=6, max_epochs=200, patience=5, seed=2).fit(X[::2], y[::2], X[1::2], y[1::2])
    b = MLPClassifier(hidden=6, max_epochs=200, patience=5, seed=2).fit(X[::2], y[::2], X[1::2], y[1::2])
    for k in a.params:
        assert np.max(np.abs(a.params[k] - b.params[k])) <= 1e-12
    assert a.epochs_run <= 200


def test_mlp_divergence_reports_epoch_and_lr():
    X, y = ten_class_blobs(n_per=5)
    # tanh units and the clipped log keep the loss finite for any finite
    # step, so an infinite learning rate is used to force a non-finite loss
    with pytest.raises(DivergenceError) as info, np.errstate(all="ignore"):
        MLPClassifier(lr=float("inf"), max_epochs=20).fit(X, y)
    assert info.value.lr == float("inf") and info.value.epoch == 1


@pytest.mark.parametrize("model", [KNNClassifier(3), GaussianNB(), DecisionTree(4),
                                   MLPClassifier(hidden=4, max_epochs=20)])
def test_probabilities_valid_and_predict_is_argmax(model):
    X, y = ten_class_blobs(spread=2.0, seed=11)
    model.fit(X, y)
    q = np.random.default_rng(12).normal(size=(200, 7)) * 4
    p = model.predict_proba(q)
    assert p.shape == (200, 10)
    assert np.all(p >= 0) and np.all(np.abs(p.sum(axis=1) - 1) < 1e-9)
    np.testing.assert_array_equal(model.predict(q), np.argmax(p, axis=1) + 1)
