"""Random forests with bootstrap bagging and per-split feature sampling."""

from __future__ import annotations

import json
import math
import warnings
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels

FORMAT_ID = "skillcap.forest/1"
CLASSIFICATION, REGRESSION = "classification", "regression"


class ForestError(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    ntree: int = 500
    mtry: int | None = None  # None: floor(sqrt(D))
    min_leaf: int | None = None  # None: 1 for classification, 5 for regression
    seed: int = 0

    def resolve(self, n_features: int, task: str) -> ForestParams:
        mtry = self.mtry if self.mtry is not None else max(1, math.isqrt(n_features))
        min_leaf = self.min_leaf if self.min_leaf is not None else (1 if task == CLASSIFICATION else 5)
        if self.ntree < 1:
            raise ForestError(f"ntree must be >= 1, got {self.ntree}")
        if not 1 <= mtry <= n_features:
            raise ForestError(f"mtry must be in 1..{n_features}, got {mtry}")
        if min_leaf < 1:
            raise ForestError(f"min_leaf must be >= 1, got {min_leaf}")
        return ForestParams(self.ntree, mtry, min_leaf, self.seed)


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importance: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


@dataclass
class ForestModel:
    task: str
    feature_names: list[str]
    trees: list[Tree]
    params: ForestParams
    classes: list = field(default_factory=list)
    n_train: int = 0

    def __post_init__(self):
        self._packed = None

    def _pack(self):
        if self._packed is None:
            sizes = [t.n_nodes for t in self.trees]
            offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
            cat = lambda name, dt: np.concatenate([getattr(t, name) for t in self.trees]).astype(dt)
            self._packed = (
                offsets,
                cat("feature", np.int64),
                cat("threshold", np.float64),
                cat("left", np.int64),
                cat("right", np.int64),
                cat("value", np.float64),
            )
        return self._packed


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order that depends only on row contents (lexicographic on X, then y)."""
    # lexsort treats the last key as primary
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def _check_matrix(X, n_rows=None) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise ForestError(f"feature matrix must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ForestError("feature matrix contains missing or non-finite values")
    if n_rows is not None and X.shape[0] != n_rows:
        raise ForestError(f"{X.shape[0]} feature rows but {n_rows} targets")
    return X


def tree_seeds(seed: int, ntree: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(ntree, dtype=np.uint64)


def train(
    X, y, p: ForestParams = ForestParams(), task: str = CLASSIFICATION,
    feature_names: Sequence[str] | None = None,
) -> ForestModel:
    """Fit a forest.

    Rows are first put in a canonical content-based order, and tree ``i``
    draws its bootstrap sample and split features from the ``i``-th child
    of ``SeedSequence(seed)``. The fitted model therefore depends only on
    the multiset of rows, the parameters and the seed.
    """
    if task not in (CLASSIFICATION, REGRESSION):
        raise ForestError(f"unknown task {task!r}")
    y = np.asarray(y)
    X = _check_matrix(X, len(y))
    n, d = X.shape
    if n == 0:
        raise ForestError("cannot train on zero rows")
    if d == 0:
        raise ForestError("cannot train without features")
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(d)]
    if len(names) != d:
        raise ForestError(f"{len(names)} feature names for {d} columns")
    p = p.resolve(d, task)

    if task == CLASSIFICATION:
        classes = sorted(set(y.tolist()))
        index = {c: i for i, c in enumerate(classes)}
        y_cls = np.array([index[v] for v in y.tolist()], dtype=np.int64)
        y_reg = np.zeros(n)
        n_classes = len(classes)
        if n_classes == 1:
            warnings.warn(f"only one class ({classes[0]!r}) in training labels; model is constant",
                          stacklevel=2)
        order = _canonical_order(X, y_cls.astype(float))
    else:
        classes = []
        y_reg = np.asarray(y, dtype=np.float64)
        if not np.all(np.isfinite(y_reg)):
            raise ForestError("regression targets must be finite")
        y_cls = np.zeros(n, dtype=np.int64)
        n_classes = 0
        order = _canonical_order(X, y_reg)
    X, y_cls, y_reg = np.ascontiguousarray(X[order]), y_cls[order], y_reg[order]

    trees = []
    for s in tree_seeds(p.seed, p.ntree):
        rng = np.random.Generator(np.random.PCG64(int(s)))
        sample = rng.integers(0, n, size=n).astype(np.int64)
        split_seed = int(rng.integers(0, 2**63 - 1))
        arrays = _kernels.build_tree(X, y_cls, y_reg, sample, n_classes, p.mtry, p.min_leaf, split_seed)
        trees.append(Tree(*arrays))
    return ForestModel(task, names, trees, p, classes, n)


def _rows(m: ForestModel, X) -> np.ndarray:
    if isinstance(X, dict):
        missing = [f for f in m.feature_names if f not in X]
        if missing:
            raise ForestError(f"missing features: {missing[:5]}{'...' if len(missing) > 5 else ''}")
        X = [[X[f] for f in m.feature_names]]
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(m.feature_names):
        raise ForestError(f"expected {len(m.feature_names)} features, got {X.shape[1]}")
    return _check_matrix(X)


def tree_outputs(m: ForestModel, X) -> np.ndarray:
    X = _rows(m, X)
    return _kernels.predict_trees(X, *m._pack())


def predict_many(m: ForestModel, X) -> list:
    """Predictions for each row of ``X``."""
    out = tree_outputs(m, X)
    if m.task == REGRESSION:
        first = out[:, :1]
        return (first[:, 0] + (out - first).mean(axis=1)).tolist()
    votes = out.astype(np.int64)
    k = len(m.classes)
    tallies = np.zeros((votes.shape[0], k), dtype=np.int64)
    for c in range(k):
        tallies[:, c] = (votes == c).sum(axis=1)
    # argmax returns the first maximum, i.e. the lowest class index on ties
    return [m.classes[i] for i in tallies.argmax(axis=1)]


def predict(m: ForestModel, x):
    """Prediction for one row, given as a sequence or a name -> value mapping."""
    return predict_many(m, x)[0]


def feature_importance(m: ForestModel) -> list[tuple[str, float]]:
    """Mean impurity decrease per feature, normalised to sum to one."""
    total = np.sum([t.importance for t in m.trees], axis=0) / len(m.trees)
    s = float(total.sum())
    if s > 0:
        total = total / s
    ranked = sorted(zip(m.feature_names, total.tolist()), key=lambda item: (-item[1], item[0]))
    return ranked


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _tree_to_nested(m: ForestModel, t: Tree) -> dict:
    def leaf(i):
        v = float(t.value[i])
        return {"value": m.classes[int(v)] if m.task == CLASSIFICATION else v}

    nodes: dict[int, dict] = {}
    # children always have larger indices than their parent
    for i in range(t.n_nodes - 1, -1, -1):
        f = int(t.feature[i])
        if f < 0:
            nodes[i] = leaf(i)
        else:
            nodes[i] = {
                "feature": m.feature_names[f],
                "threshold": float(t.threshold[i]),
                "left": nodes.pop(int(t.left[i])),
                "right": nodes.pop(int(t.right[i])),
            }
    return nodes[0]


def _tree_from_nested(m: ForestModel, root: dict) -> Tree:
    index = {name: j for j, name in enumerate(m.feature_names)}
    cls_index = {c: i for i, c in enumerate(m.classes)}
    feature, threshold, left, right, value = [], [], [], [], []
    stack = [(root, None, None)]
    while stack:
        node, parent, side = stack.pop()
        i = len(feature)
        if parent is not None:
            (left if side == "left" else right)[parent] = i
        if "value" in node:
            v = node["value"]
            feature.append(-1)
            threshold.append(0.0)
            value.append(float(cls_index[v]) if m.task == CLASSIFICATION else float(v))
        else:
            feature.append(index[node["feature"]])
            threshold.append(float(node["threshold"]))
            value.append(0.0)
        left.append(-1)
        right.append(-1)
        if "value" not in node:
            stack.append((node["right"], i, "right"))
            stack.append((node["left"], i, "left"))
    return Tree(
        np.array(feature, np.int64), np.array(threshold, np.float64), np.array(left, np.int64),
        np.array(right, np.int64), np.array(value, np.float64), np.zeros(len(m.feature_names)),
    )


def model_to_json(m: ForestModel) -> str:
    doc = {
        "format": FORMAT_ID,
        "task": m.task,
        "feature_names": m.feature_names,
        "classes": m.classes,
        "params": asdict(m.params),
        "n_train": m.n_train,
        "importance": [t.importance.tolist() for t in m.trees],
        "trees": [_tree_to_nested(m, t) for t in m.trees],
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def model_from_json(text: str) -> ForestModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_ID:
        raise ForestError(f"unsupported model format {doc.get('format')!r}")
    m = ForestModel(doc["task"], list(doc["feature_names"]), [], ForestParams(**doc["params"]),
                    list(doc["classes"]), doc.get("n_train", 0))
    imps = doc.get("importance") or [None] * len(doc["trees"])
    for nested, imp in zip(doc["trees"], imps):
        t = _tree_from_nested(m, nested)
        if imp is not None:
            t.importance = np.array(imp, dtype=float)
        m.trees.append(t)
    return m
