"""Cross-validation and windowed (time-to-prediction) evaluation.

Fold assignment depends only on the seed, the strata and the row ids, never
on the position of a row in the input, so permuting the rows of a dataset
leaves every fold, model and metric unchanged.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .. import stats
from ..features.catalog import FeatureCatalog, extract_features, feature_table
from ..metrics import ScoreGroup, dataset_metrics, score_group
from ..telemetry import GAME_KINDS, KIND_GAME, Dataset, GameLog
from .model import (
    CLASSIFICATION, REGRESSION, ForestError, ForestParams, feature_importance, predict_many, train,
)

TASK_CLASSES = {
    "groups4": tuple(g.label for g in ScoreGroup),
    "binary_novice": ("Novice", "Other"),
    "binary_split": ("Low", "High"),
}
TASKS = {
    "groups4": CLASSIFICATION,
    "binary_novice": CLASSIFICATION,
    "binary_split": CLASSIFICATION,
    "regress_sbar": REGRESSION,
}
FOLD_MODES = ("game", "player")


@dataclass
class EvalReport:
    task: str
    kind: str
    k: int
    fold_mode: str
    n_rows: int
    fold_sizes: list[int]
    fold_metrics: list[float]
    mean_metric: float
    pooled_rho: float | None = None  # regression only
    classes: list = field(default_factory=list)
    confusion: list[list[int]] = field(default_factory=list)  # rows: true, cols: predicted
    majority_baseline: float | None = None
    importances: list[tuple[str, float]] = field(default_factory=list)
    predictions: list = field(default_factory=list)  # out-of-fold, in input row order
    warnings: list[str] = field(default_factory=list)

    @property
    def metric(self) -> float:
        """Headline number: mean fold accuracy, or pooled rho for regression."""
        if self.kind == REGRESSION and self.pooled_rho is not None:
            return self.pooled_rho
        return self.mean_metric

    def to_json(self) -> str:
        doc = {
            "task": self.task,
            "kind": self.kind,
            "k": self.k,
            "fold_mode": self.fold_mode,
            "n_rows": self.n_rows,
            "fold_sizes": self.fold_sizes,
            "fold_metrics": [_num(v) for v in self.fold_metrics],
            "mean_metric": _num(self.mean_metric),
            "pooled_rho": _num(self.pooled_rho),
            "classes": self.classes,
            "confusion": self.confusion,
            "majority_baseline": _num(self.majority_baseline),
            "importances": [[n, v] for n, v in self.importances],
            "warnings": self.warnings,
        }
        return json.dumps(doc, indent=2) + "\n"

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\predicted", *self.classes, "total"])
        for c, row in zip(self.classes, self.confusion):
            w.writerow([c, *row, sum(row)])
        return buf.getvalue()


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


# --------------------------------------------------------------------------
# Folds
# --------------------------------------------------------------------------


def _row_keys(n: int, row_ids) -> np.ndarray:
    if row_ids is None:
        return np.arange(n)
    ids = np.asarray(row_ids)
    if len(ids) != n:
        raise ForestError(f"{len(ids)} row ids for {n} rows")
    if len(np.unique(ids)) != n:
        raise ForestError("row ids must be unique")
    return ids


def assign_folds(
    strata: Sequence, k: int, seed: int = 0, groups: Sequence | None = None, row_ids: Sequence | None = None
) -> np.ndarray:
    """Fold index (0..k-1) of every row.

    Without ``groups`` the rows of each stratum are shuffled and dealt
    round-robin, continuing the deal across strata so fold sizes differ by
    at most one. With ``groups`` whole groups (players) are shuffled and each
    goes to the currently smallest fold, so no group spans two folds.
    """
    n = len(strata)
    if k < 2:
        raise ForestError(f"need k >= 2 folds, got {k}")
    keys = _row_keys(n, row_ids)
    rng = np.random.Generator(np.random.PCG64(seed))
    folds = np.full(n, -1, dtype=np.int64)
    if groups is None:
        if n < k:
            raise ForestError(f"{n} rows cannot fill {k} folds")
        strata = np.asarray(strata)
        pos = 0
        for s in sorted(set(strata.tolist())):
            rows = np.flatnonzero(strata == s)
            rows = rows[np.argsort(keys[rows], kind="stable")]
            rows = rows[rng.permutation(len(rows))]
            folds[rows] = (pos + np.arange(len(rows))) % k
            pos += len(rows)
        return folds
    groups = np.asarray(groups)
    uniq = np.array(sorted(set(groups.tolist())))
    if len(uniq) < k:
        raise ForestError(f"{len(uniq)} groups cannot fill {k} folds")
    sizes = np.zeros(k, dtype=np.int64)
    for g in uniq[rng.permutation(len(uniq))]:
        rows = groups == g
        f = int(np.argmin(sizes))
        folds[rows] = f
        sizes[f] += int(rows.sum())
    return folds


def _regression_strata(y: np.ndarray, k: int, keys: np.ndarray) -> np.ndarray:
    # consecutive blocks of k rows in target order
    order = np.lexsort((keys, y))
    strata = np.empty(len(y), dtype=np.int64)
    strata[order] = np.arange(len(y)) // k
    return strata


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1, dtype=np.uint32)[0])


def _spearman_or_nan(a, b) -> float:
    try:
        return stats.spearman(a, b).coefficient
    except stats.UndefinedResultError:
        return math.nan


def cross_validate(
    X, y, p: ForestParams = ForestParams(), task: str = CLASSIFICATION, k: int = 5,
    fold_mode: str = "game", seed: int = 0, groups: Sequence | None = None,
    strata: Sequence | None = None, row_ids: Sequence | None = None,
    feature_names: Sequence[str] | None = None, task_name: str | None = None,
    class_order: Sequence | None = None,
) -> EvalReport:
    """k-fold cross-validation of a forest.

    ``fold_mode="game"`` stratifies rows by ``strata`` (default: the class
    label, or target-order blocks for regression). ``fold_mode="player"``
    keeps every group in ``groups`` inside one fold. Each fold model uses the
    forest parameters with a seed derived from ``(p.seed, fold)``.
    ``class_order`` fixes the row/column order of the confusion matrix.
    """
    if task not in (CLASSIFICATION, REGRESSION):
        raise ForestError(f"unknown task {task!r}")
    if fold_mode not in FOLD_MODES:
        raise ForestError(f"fold_mode must be one of {FOLD_MODES}, got {fold_mode!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = len(y)
    if X.ndim != 2 or X.shape[0] != n:
        raise ForestError(f"feature matrix shape {X.shape} does not match {n} targets")
    keys = _row_keys(n, row_ids)
    if fold_mode == "player":
        if groups is None:
            raise ForestError("player folds need the player id of every row")
        folds = assign_folds(np.zeros(n), k, seed, groups=groups, row_ids=keys)
    else:
        if strata is None:
            strata = y if task == CLASSIFICATION else _regression_strata(y.astype(float), k, keys)
        folds = assign_folds(strata, k, seed, row_ids=keys)

    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    classes = sorted(set(y.tolist())) if task == CLASSIFICATION else []
    if class_order is not None and task == CLASSIFICATION:
        extra = [c for c in classes if c not in class_order]
        if extra:
            raise ForestError(f"labels {extra} missing from class_order")
        classes = [c for c in class_order if c in set(classes)]
    cindex = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    predictions: list = [None] * n
    fold_metrics, fold_sizes, notes = [], [], []
    imp = np.zeros(len(names))

    for f in range(k):
        test = np.flatnonzero(folds == f)
        tr = np.flatnonzero(folds != f)
        fold_sizes.append(len(test))
        if len(test) == 0 or len(tr) == 0:
            raise ForestError(f"fold {f} is empty; too few rows for {k} folds")
        if task == CLASSIFICATION:
            missing = sorted(set(classes) - set(y[tr].tolist()), key=classes.index)
            if missing:
                msg = f"fold {f}: class(es) {missing} absent from the training rows"
                notes.append(msg)
                warnings.warn(msg, stacklevel=2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = train(X[tr], y[tr], replace(p, seed=_fold_seed(p.seed, f)), task, names)
        pred = predict_many(model, X[test])
        for i, v in zip(test.tolist(), pred):
            predictions[i] = v
        weights = dict(feature_importance(model))
        imp += np.array([weights[nm] for nm in names])
        if task == CLASSIFICATION:
            truth = y[test].tolist()
            fold_metrics.append(sum(a == b for a, b in zip(truth, pred)) / len(test))
            for a, b in zip(truth, pred):
                confusion[cindex[a], cindex[b]] += 1
        else:
            fold_metrics.append(_spearman_or_nan(pred, y[test].astype(float)))

    imp /= k
    importances = sorted(zip(names, imp.tolist()), key=lambda t: (-t[1], t[0]))
    finite = [m for m in fold_metrics if math.isfinite(m)]
    report = EvalReport(
        task=task_name or task, kind=task, k=k, fold_mode=fold_mode, n_rows=n,
        fold_sizes=fold_sizes, fold_metrics=fold_metrics,
        mean_metric=float(np.mean(finite)) if finite else math.nan,
        importances=importances, predictions=predictions, warnings=notes,
    )
    if task == CLASSIFICATION:
        report.classes = classes
        report.confusion = confusion.tolist()
        counts = [int((y == c).sum()) for c in classes]
        report.majority_baseline = max(counts) / n
    else:
        report.pooled_rho = _spearman_or_nan(predictions, y.astype(float))
    return report


# --------------------------------------------------------------------------
# Targets and windowed evaluation
# --------------------------------------------------------------------------


def game_targets(data: Dataset, task: str) -> dict[int, object]:
    """Per-game target of a task, derived from the player's mean score."""
    if task not in TASKS:
        raise ForestError(f"unknown task {task!r}; expected one of {sorted(TASKS)}")
    _, skills = dataset_metrics(data)
    out = {}
    for g in data.games:
        sbar = skills[g.meta.player_id].mean_score
        if task == "regress_sbar":
            out[g.meta.game_id] = sbar
            continue
        grp = score_group(sbar)
        if task == "groups4":
            out[g.meta.game_id] = grp.label
        elif task == "binary_novice":
            out[g.meta.game_id] = "Novice" if grp == ScoreGroup.NOVICE else "Other"
        else:
            out[g.meta.game_id] = "Low" if grp <= ScoreGroup.INTERMEDIATE else "High"
    return out


def current_score(log: GameLog, t_end: float) -> float:
    """Points earned by the player in the first ``t_end`` seconds.

    Once the window covers the whole game this is the scoreboard score.
    Before that it sums the ``points`` attributes of game events, or, for
    logs whose game events carry no points, counts kills.
    """
    m = log.meta
    if t_end * 1000.0 >= m.duration_ms:
        return float(m.scoreboard[m.client_number].points)
    ev = log.events.upto(t_end * 1000.0)
    rows = np.flatnonzero(ev.kind == KIND_GAME)
    with_points = [ev.aux[i]["points"] for i in rows.tolist() if "points" in ev.aux.get(i, {})]
    if with_points:
        return float(sum(with_points))
    return float(np.count_nonzero(ev.code[rows] == GAME_KINDS.index("kill")))


@dataclass(frozen=True)
class CurvePoint:
    t: float
    metric: float
    baseline: float
    report: EvalReport = field(repr=False, compare=False)


def _sub_catalog(cat: FeatureCatalog, group: tuple[str, str] | None) -> FeatureCatalog:
    if group is None:
        return cat
    keep = set(cat.names_in(*group))
    return FeatureCatalog(tuple(e for e in cat.entries if e.name in keep))


def window_matrix(data: Dataset, cat: FeatureCatalog, t: float):
    """Feature table of every game over its first ``t`` seconds."""
    vectors = [extract_features(g, cat, t) for g in data.games]
    return feature_table(vectors, cat.names)


def windowed_evaluation(
    data: Dataset, cat: FeatureCatalog, task: str, windows: Sequence[float],
    p: ForestParams = ForestParams(), k: int = 5, fold_mode: str = "game", seed: int = 0,
    group: tuple[str, str] | None = None, tables: Mapping | None = None,
) -> list[CurvePoint]:
    """Cross-validated metric of models trained on the first ``t`` seconds.

    The baseline at each ``t`` is the current score: for regression its
    Spearman rho with the target, for classification the cross-validated
    accuracy of a forest trained on the current score alone. ``tables``
    may hold precomputed feature tables by window (any superset of the
    selected features, rows in dataset order).
    """
    if not windows:
        raise ForestError("windows must be non-empty")
    kind = TASKS.get(task)
    if kind is None:
        raise ForestError(f"unknown task {task!r}; expected one of {sorted(TASKS)}")
    targets = game_targets(data, task)
    sub = _sub_catalog(cat, group)
    if len(sub) == 0:
        raise ForestError(f"feature group {group} selects no features")
    games = list(data.games)
    y = np.array([targets[g.meta.game_id] for g in games], dtype=object if kind == CLASSIFICATION else float)
    if kind == CLASSIFICATION:
        y = np.array(y.tolist())
    ids = [g.meta.game_id for g in games]
    players = [g.meta.player_id for g in games]
    # game-level folds are stratified by score group whatever the task
    groups4 = game_targets(data, "groups4")
    strata = [groups4[i] for i in ids]
    common = dict(
        p=p, task=kind, k=k, fold_mode=fold_mode, seed=seed, groups=players, strata=strata,
        row_ids=ids, task_name=task, class_order=TASK_CLASSES.get(task),
    )
    curve = []
    for t in windows:
        if tables is not None and t in tables:
            full = tables[t]
            cols = [full.names.index(n) for n in sub.names]
            X = full.X[:, cols]
        else:
            X = window_matrix(data, sub, t).X
        rep = cross_validate(X, y, feature_names=sub.names, **common)
        scores = np.array([[current_score(g, t)] for g in games])
        if kind == REGRESSION:
            base = _spearman_or_nan(scores[:, 0], y)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                base = cross_validate(scores, y, feature_names=["current_score"], **common).metric
        curve.append(CurvePoint(float(t), rep.metric, base, rep))
    return curve


def curve_csv(curve: Sequence[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "metric", "baseline"])
    for c in curve:
        w.writerow([repr(c.t), repr(c.metric), repr(c.baseline)])
    return buf.getvalue()
