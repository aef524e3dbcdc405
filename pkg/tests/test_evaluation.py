import json
import math

import numpy as np
import pytest

from conftest import game, make_log
from skillcap.features.catalog import default_catalog
from skillcap.forest import (
    CLASSIFICATION, REGRESSION, ForestError, ForestParams, assign_folds, cross_validate, current_score, curve_csv,
    game_targets, windowed_evaluation,
)
from skillcap.metrics import dataset_metrics
from skillcap.stats import spearman

FAST = ForestParams(ntree=40)


def labelled(n=160, seed=0):
    rng = np.random.default_rng(seed)
    y = np.array(["Novice", "Intermediate", "Skilled", "Expert"])[np.arange(n) % 4]
    X = rng.normal(size=(n, 5))
    return X, y


def test_perfect_feature_gives_perfect_accuracy():
    X, y = labelled()
    X[:, 2] = np.searchsorted(sorted(set(y)), y)
    rep = cross_validate(X, y, FAST, k=5)
    assert rep.metric == pytest.approx(1.0)
    assert rep.majority_baseline == 0.25


def test_shuffled_labels_near_chance():
    X, y = labelled(400, seed=3)
    rep = cross_validate(X, y, FAST, k=5)
    assert abs(rep.metric - 0.25) <= 0.1


def test_confusion_rows_match_class_counts():
    X, y = labelled()
    order = ["Novice", "Intermediate", "Skilled", "Expert"]
    rep = cross_validate(X, y, FAST, k=4, class_order=order)
    assert rep.classes == order
    assert [sum(r) for r in rep.confusion] == [int((y == c).sum()) for c in order]
    lines = rep.confusion_csv().splitlines()
    assert lines[0] == "true\\predicted,Novice,Intermediate,Skilled,Expert,total"
    assert lines[1].startswith("Novice,") and lines[1].endswith(",40")
    json.loads(rep.to_json())


def test_folds_reproducible_and_balanced():
    strata = ["a"] * 13 + ["b"] * 7
    ids = list(range(100, 120))
    f1 = assign_folds(strata, 5, seed=2, row_ids=ids)
    assert np.array_equal(f1, assign_folds(strata, 5, seed=2, row_ids=ids))
    assert sorted(np.bincount(f1).tolist()) == [4, 4, 4, 4, 4]
    for s in ("a", "b"):
        counts = np.bincount(f1[np.array(strata) == s], minlength=5)
        assert counts.max() - counts.min() <= 1
    # folds follow the rows, not their positions
    perm = np.random.default_rng(0).permutation(20)
    f2 = assign_folds([strata[i] for i in perm], 5, seed=2, row_ids=[ids[i] for i in perm])
    assert np.array_equal(f2, f1[perm])
    with pytest.raises(ForestError):
        assign_folds(strata, 1)


def test_player_folds_are_disjoint():
    players = np.repeat(np.arange(10), 6)
    folds = assign_folds(np.zeros(60), 5, seed=1, groups=players)
    for p in range(10):
        assert len(set(folds[players == p])) == 1
    X, y = labelled(60)
    rep = cross_validate(X, y, FAST, fold_mode="player", groups=players)
    assert sum(rep.fold_sizes) == 60
    with pytest.raises(ForestError):
        cross_validate(X, y, FAST, fold_mode="player")


def test_missing_training_class_warns():
    X = np.arange(12, dtype=float)[:, None]
    y = np.array(["a"] * 10 + ["b"] * 2)
    players = np.array([0] * 10 + [1] * 2)
    with pytest.warns(UserWarning, match="absent"):
        rep = cross_validate(X, y, FAST, k=2, fold_mode="player", groups=players)
    assert rep.warnings


def test_regression_reports_pooled_and_fold_rho():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(150, 3))
    y = X[:, 0] * 10
    rep = cross_validate(X, y, FAST, task=REGRESSION)
    assert rep.pooled_rho > 0.95 and rep.metric == rep.pooled_rho
    assert len(rep.fold_metrics) == 5 and all(r > 0.8 for r in rep.fold_metrics)


def test_current_score_rules():
    events = [game(1000, "kill", points=1), game(2000, "other", points=2), game(5000, "kill", points=1)]
    log = make_log(events)
    assert current_score(log, 1.5) == 1.0
    assert current_score(log, 3.0) == 3.0
    assert current_score(log, 180.0) == 12.0  # scoreboard
    bare = make_log([game(1000, "kill"), game(2000, "kill"), game(3000, "death")])
    assert current_score(bare, 2.5) == 2.0


def test_targets(small_synth):
    _, skills = dataset_metrics(small_synth)
    for task in ("groups4", "binary_novice", "binary_split", "regress_sbar"):
        t = game_targets(small_synth, task)
        assert set(t) == {g.meta.game_id for g in small_synth.games}
    reg = game_targets(small_synth, "regress_sbar")
    g = small_synth.games[0]
    assert reg[g.meta.game_id] == skills[g.meta.player_id].mean_score
    with pytest.raises(ForestError):
        game_targets(small_synth, "nope")


def test_windowed_curve(small_synth):
    cat = default_catalog()
    curve = windowed_evaluation(small_synth, cat, "regress_sbar", [5, 60], FAST, k=4,
                                group=("hardware", "Clicks"))
    assert [c.t for c in curve] == [5.0, 60.0]
    # at the full game the baseline is rho between game score and the player mean
    s = [g.meta.scoreboard[g.meta.client_number].points for g in small_synth.games]
    sbar = list(game_targets(small_synth, "regress_sbar").values())
    assert curve[-1].baseline == pytest.approx(spearman(s, sbar).coefficient)
    assert all(math.isfinite(c.metric) for c in curve)
    text = curve_csv(curve)
    assert text.splitlines()[0] == "t,metric,baseline" and len(text.splitlines()) == 3


def test_windowed_classification_baseline(small_synth):
    curve = windowed_evaluation(small_synth, default_catalog(), "binary_novice", [60], FAST, k=4,
                                group=("hardware", "Clicks"))
    assert 0.0 <= curve[0].baseline <= 1.0
    assert curve[0].report.classes == ["Novice", "Other"]
    with pytest.raises(ForestError):
        windowed_evaluation(small_synth, default_catalog(), "nope", [60])
