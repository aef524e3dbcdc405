import json
import warnings

import numpy as np
import pytest

from skillcap.forest import (
    CLASSIFICATION, FORMAT_ID, REGRESSION, ForestError, ForestParams, feature_importance, model_from_json,
    model_to_json, predict, predict_many, train,
)
from skillcap.forest.model import _canonical_order, tree_seeds


def blobs(n=200, d=6, seed=0, gap=4.0):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 3, n)
    X = rng.normal(size=(n, d))
    X[:, 0] += gap * y
    return X, np.array(["a", "b", "c"])[y]


def test_default_parameters():
    p = ForestParams().resolve(174, CLASSIFICATION)
    assert p.ntree == 500 and p.mtry == 13 and p.min_leaf == 1
    assert ForestParams().resolve(174, REGRESSION).min_leaf == 5
    for bad in (ForestParams(ntree=0), ForestParams(mtry=200), ForestParams(min_leaf=0)):
        with pytest.raises(ForestError):
            bad.resolve(174, CLASSIFICATION)


def test_deterministic_and_seed_sensitive():
    X, y = blobs()
    p = ForestParams(ntree=30, seed=3)
    a, b = train(X, y, p), train(X, y, p)
    assert model_to_json(a) == model_to_json(b)
    assert model_to_json(train(X, y, ForestParams(ntree=30, seed=4))) != model_to_json(a)


def test_row_permutation_invariance():
    X, y = blobs()
    perm = np.random.default_rng(1).permutation(len(y))
    p = ForestParams(ntree=20, seed=9)
    assert model_to_json(train(X, y, p)) == model_to_json(train(X[perm], y[perm], p))


def test_separable_accuracy():
    X, y = blobs(400, gap=12.0)
    m = train(X[:300], y[:300], ForestParams(ntree=100))
    acc = np.mean(np.array(predict_many(m, X[300:])) == y[300:])
    assert acc >= 0.95


def test_single_tree_recalls_its_bootstrap_sample():
    X, y = blobs(100)
    m = train(X, y, ForestParams(ntree=1, mtry=6, seed=5))
    # replay the tree's bootstrap draw on the canonical row order
    cls = np.searchsorted(m.classes, y)
    order = _canonical_order(X, cls.astype(float))
    rng = np.random.Generator(np.random.PCG64(int(tree_seeds(5, 1)[0])))
    sample = np.unique(order[rng.integers(0, len(y), size=len(y))])
    pred = np.array(predict_many(m, X[sample]))
    assert np.array_equal(pred, y[sample])


def test_full_forest_fits_training_set():
    X, y = blobs(100)
    m = train(X, y, ForestParams(ntree=200))
    assert np.mean(np.array(predict_many(m, X)) == y) == 1.0


def test_identical_trees_for_deterministic_data():
    # only one feature can split, so every tree with both classes is the same stump
    X = np.array([[0.0, 5.0], [1.0, 5.0]] * 5)
    y = np.array(["lo", "hi"] * 5)
    m = train(X, y, ForestParams(ntree=10, mtry=2))
    split = {(int(t.feature[0]), float(t.threshold[0])) for t in m.trees if t.n_nodes > 1}
    assert len(split) == 1
    assert predict(m, [0.0, 0.0]) == "lo" and predict(m, [1.0, 1.0]) == "hi"


def test_single_class_warns_and_is_constant():
    X, _ = blobs(30)
    with pytest.warns(UserWarning):
        m = train(X, ["x"] * 30, ForestParams(ntree=5))
    assert set(predict_many(m, X)) == {"x"}


def test_constant_regression_is_exact():
    X, _ = blobs(50)
    m = train(X, np.full(50, 0.1), ForestParams(ntree=20), REGRESSION)
    assert all(v == 0.1 for v in predict_many(m, X))


def test_regression_tracks_signal():
    rng = np.random.default_rng(2)
    X = rng.uniform(size=(300, 4))
    y = 3 * X[:, 1] + 0.05 * rng.normal(size=300)
    m = train(X[:200], y[:200], ForestParams(ntree=100), REGRESSION)
    pred = np.array(predict_many(m, X[200:]))
    assert np.corrcoef(pred, y[200:])[0, 1] > 0.95
    imp = dict(feature_importance(m))
    assert max(imp, key=imp.get) == "x1"


def test_importances_sum_to_one_and_unused_are_zero():
    X, y = blobs()
    X = np.column_stack([X, np.zeros(len(y))])
    m = train(X, y, ForestParams(ntree=50), feature_names=[f"f{i}" for i in range(X.shape[1])])
    imp = dict(feature_importance(m))
    assert sum(imp.values()) == pytest.approx(1.0)
    assert imp["f6"] == 0.0
    assert max(imp, key=imp.get) == "f0"


def test_vote_ties_go_to_first_class():
    X = np.array([[0.0], [1.0]])
    m = train(X, ["b", "a"], ForestParams(ntree=2, seed=0))
    m.trees[0].value[:] = 0
    m.trees[1].value[:] = 1
    m._packed = None
    assert predict(m, [0.5]) == "a"


def test_json_round_trip():
    X, y = blobs()
    m = train(X, y, ForestParams(ntree=15), feature_names=[f"f{i}" for i in range(6)])
    text = model_to_json(m)
    doc = json.loads(text)
    assert doc["format"] == FORMAT_ID and len(doc["trees"]) == 15
    back = model_from_json(text)
    assert predict_many(back, X) == predict_many(m, X)
    assert model_to_json(back) == text
    assert predict(back, {f"f{i}": X[0, i] for i in range(6)}) == predict(m, X[0])
    with pytest.raises(ForestError):
        model_from_json(json.dumps({**doc, "format": "other/9"}))


def test_regression_json_round_trip():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 3))
    m = train(X, X[:, 0] ** 2, ForestParams(ntree=10), REGRESSION)
    back = model_from_json(model_to_json(m))
    assert predict_many(back, X) == predict_many(m, X)


def test_input_validation():
    X, y = blobs(20)
    with pytest.raises(ForestError):
        train(np.where(np.eye(20, 6) > 0, np.nan, X), y)
    with pytest.raises(ForestError):
        train(X, y[:10])
    with pytest.raises(ForestError):
        train(X, y, task="clustering")
    m = train(X, y, ForestParams(ntree=3))
    with pytest.raises(ForestError):
        predict(m, [1.0, 2.0])
    with pytest.raises(ForestError):
        predict(m, {"x0": 1.0})
