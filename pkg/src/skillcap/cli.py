"""Command-line pipeline: ingest, metrics, ratings, features, models, reports.

Every command is deterministic given its inputs and ``--seed``; outputs
carry no timestamps, so re-running a command rewrites identical files.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import warnings
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import metrics as mt
from . import rating as rt
from . import stats
from .features.catalog import (
    SCHEMES, UNGROUPED, FeatureCatalog, FeatureVector, catalog_json, default_catalog, feature_matrix_csv, parse_group,
)
from .forest import evaluation as ev
from .forest.model import ForestError, ForestParams, feature_importance, model_to_json, train
from .synth import SynthConfig, generate_dataset
from .telemetry import FPS_PLAYED_GROUPS, HOURS_GROUPS, Dataset, LogError, load_dataset, validate, write_dataset

log = logging.getLogger("skillcap")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_WINDOWS = (1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0, 90.0, 120.0, 180.0)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    windows: list[float] = field(default_factory=lambda: list(DEFAULT_WINDOWS))
    group: str | None = None  # scheme:group feature filter
    task: str = "groups4"
    folds: int = 5
    fold_mode: str = "game"
    ntree: int = 500
    mtry: int | None = None
    min_leaf: int | None = None
    seed: int = 0
    out: str = "out"
    trueskill: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)

    def __post_init__(self):
        self.windows = [float(w) for w in self.windows]
        if not self.windows:
            raise UsageError("window list is empty")
        if any(not w > 0 for w in self.windows):
            raise UsageError("windows must be positive")
        if self.windows != sorted(self.windows):
            raise UsageError("windows must be sorted ascending")
        if self.task not in ev.TASKS:
            raise UsageError(f"unknown task {self.task!r}; choose from {sorted(ev.TASKS)}")
        if self.fold_mode not in ev.FOLD_MODES:
            raise UsageError(f"unknown fold mode {self.fold_mode!r}")
        if self.folds < 2:
            raise UsageError("need at least 2 folds")
        try:
            parse_group(self.group)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def forest_params(self) -> ForestParams:
        return ForestParams(self.ntree, self.mtry, self.min_leaf, self.seed)

    def trueskill_params(self) -> rt.TrueSkillParams:
        try:
            return rt.TrueSkillParams(**self.trueskill)
        except TypeError as exc:
            raise UsageError(f"bad trueskill settings: {exc}") from None


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(doc) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return doc


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file values, overridden by any flag given on the command line."""
    doc = _load_config(args.config)
    overrides = {
        "inputs": getattr(args, "paths", None) or None,
        "windows": _parse_windows(args.windows) if getattr(args, "windows", None) else None,
        "group": getattr(args, "group", None),
        "task": getattr(args, "task", None),
        "folds": getattr(args, "folds", None),
        "fold_mode": getattr(args, "fold_mode", None),
        "ntree": getattr(args, "ntree", None),
        "seed": args.seed,
        "out": args.out,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**doc)


def _parse_windows(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"windows must be comma-separated seconds, got {text!r}") from None


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------


def _write(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _dataset(cfg: PipelineConfig) -> Dataset:
    if not cfg.inputs:
        raise UsageError("no input paths given")
    try:
        data, failures = load_dataset(cfg.inputs)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    for path, msg in failures:
        log.error("%s: %s", path, msg)
    if not data.games:
        raise DataError("no readable game logs in the given paths")
    return data


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _ordinal(value: str | None, groups: Sequence[str]) -> float:
    return float(groups.index(value)) if value in groups else math.nan


def skill_table(skills: dict[int, mt.PlayerSkill], ratings: dict[int, rt.Rating] | None) -> dict[str, list[float]]:
    """Per-player skill metrics as columns, f and h as ordinal category indices."""
    pids = sorted(skills)

    def col(getter):
        return [math.nan if (v := getter(pid)) is None else float(v) for pid in pids]

    table = {
        "player_id": list(pids),
        "s_bar": col(lambda p: skills[p].mean_score),
        "r_bar": col(lambda p: skills[p].mean_rank),
        "k_bar": col(lambda p: skills[p].mean_kdr),
        "a_bar": col(lambda p: skills[p].mean_accuracy),
    }
    if ratings is not None:
        table["T"] = col(lambda p: rt.conservative_estimate(ratings[p]) if p in ratings else None)
    table["d_bar"] = col(lambda p: skills[p].mean_deaths)
    table["f"] = [_ordinal(skills[p].fps_played, FPS_PLAYED_GROUPS) for p in pids]
    table["h"] = [_ordinal(skills[p].hours, HOURS_GROUPS) for p in pids]
    return table


def _ratings(data: Dataset, cfg: PipelineConfig):
    p = cfg.trueskill_params()
    bots = rt.calibrate_bot_ranges(data, p, seed=cfg.seed)
    traj = rt.player_trajectories(data, bots, p)
    players = {pid: t[-1].rating for pid, t in traj.items() if t}
    return bots, traj, players


def _table_csv(columns: dict[str, list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    for row in zip(*columns.values()):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _curves_csv(curves: dict[str, list[float]]) -> str:
    longest = max((len(v) for v in curves.values()), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["games_played", *curves])
    for i in range(longest):
        w.writerow([i + 1, *(_fmt(v[i]) if i < len(v) else "" for v in curves.values())])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_ingest(cfg: PipelineConfig) -> dict:
    data = _dataset(cfg)
    ids = Counter(g.meta.game_id for g in data.games)
    dup = sorted(i for i, c in ids.items() if c > 1)
    if dup:
        log.warning("duplicate game ids: %s", dup)
    summary = {
        "games": len(data.games),
        "players": len({g.meta.player_id for g in data.games}),
        "per_player": dict(sorted(Counter(str(g.meta.player_id) for g in data.games).items(), key=lambda kv: int(kv[0]))),
        "per_map": dict(sorted(Counter(g.meta.map_name for g in data.games).items())),
        "per_bot_range": dict(sorted(Counter(f"{g.meta.bot_min}-{g.meta.bot_max}" for g in data.games).items())),
        "duplicate_game_ids": dup,
    }
    text = json.dumps(summary, indent=2) + "\n"
    _write(cfg.out, "summary.json", text)
    print(text, end="")
    return summary


def cmd_validate(cfg: PipelineConfig) -> int:
    data = _dataset(cfg)
    n_err = 0
    lines = []
    for g in data.games:
        for issue in validate(g):
            n_err += issue.severity == "error"
            lines.append(f"game {g.meta.game_id}: {issue.severity}: {issue.message}")
    lines.append(f"{len(data.games)} game(s), {n_err} error(s)")
    print("\n".join(lines))
    return EXIT_DATA if n_err else EXIT_OK


def cmd_metrics(cfg: PipelineConfig) -> dict:
    data = _dataset(cfg)
    per_game, skills = mt.dataset_metrics(data)
    _, _, ratings = _ratings(data, cfg)
    table = skill_table(skills, ratings)
    matrix = stats.correlation_matrix({k: v for k, v in table.items() if k != "player_id"})
    _write(cfg.out, "games.csv", mt.games_csv(per_game))
    _write(cfg.out, "players.csv", mt.players_csv(skills))
    _write(cfg.out, "skill_metrics.csv", _table_csv(table))
    _write(cfg.out, "skill_correlations.csv", stats.matrix_csv(matrix))
    _write(cfg.out, "learning_curves.csv", _curves_csv(mt.learning_curves(per_game, skills)))
    print(f"{len(per_game)} games, {len(skills)} players -> {cfg.out}")
    return matrix


def cmd_rate(cfg: PipelineConfig, bot_file: str | None = None) -> dict:
    data = _dataset(cfg)
    p = cfg.trueskill_params()
    if bot_file:
        try:
            with open(bot_file, encoding="utf-8") as fh:
                doc = json.load(fh)
            bots = {
                tuple(int(x) for x in key.split("-")): rt.Rating(v["mu"], v["sigma"])
                for key, v in doc["bot_ranges"].items()
            }
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read bot ratings {bot_file}: {exc}") from None
    else:
        bots = rt.calibrate_bot_ranges(data, p, seed=cfg.seed)
    traj = rt.player_trajectories(data, bots, p)
    players = {pid: t[-1].rating for pid, t in traj.items() if t}
    _write(cfg.out, "ratings.json", rt.ratings_json(players, bots, p.k_conservative))
    _write(cfg.out, "trajectories.csv", rt.trajectories_csv(traj, p.k_conservative))
    print(f"{len(bots)} bot range(s), {len(players)} player(s) -> {cfg.out}")
    return players


def _feature_tables(data: Dataset, cat: FeatureCatalog, windows: Sequence[float]) -> dict:
    tables = {}
    for t in windows:
        log.info("extracting features at t=%gs", t)
        tables[t] = ev.window_matrix(data, cat, t)
    return tables


def feature_correlations(table, sbar: Sequence[float], cat: FeatureCatalog) -> tuple[str, dict]:
    """Per-feature Pearson and Spearman correlation with s-bar, and group summary."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "hardware", "type", "context", "pearson", "spearman", "strong"])
    strong = {scheme: Counter() for scheme in SCHEMES}
    totals = {scheme: Counter() for scheme in SCHEMES}
    y = np.asarray(sbar, dtype=float)
    for j, spec in enumerate(cat.entries):
        x = table.X[:, j]
        try:
            r = stats.pearson(x, y).coefficient
            rho = stats.spearman(x, y).coefficient
        except ValueError:
            r = rho = math.nan
        is_strong = math.isfinite(r) and abs(r) >= stats.STRONG_CORRELATION
        for scheme in SCHEMES:
            g = spec.group(scheme)
            totals[scheme][g] += 1
            strong[scheme][g] += is_strong
        w.writerow([spec.name, spec.hardware, spec.type, spec.context, _fmt(r), _fmt(rho), int(is_strong)])
    summary = {
        "threshold": stats.STRONG_CORRELATION,
        "groups": {
            scheme: {
                g: {"features": totals[scheme][g], "strong": strong[scheme][g]}
                for g in SCHEMES[scheme] + ((UNGROUPED,) if scheme != "context" else ())
                if totals[scheme][g]
            }
            for scheme in SCHEMES
        },
    }
    return buf.getvalue(), summary


def cmd_features(cfg: PipelineConfig, data: Dataset | None = None, tables: dict | None = None) -> dict:
    data = data or _dataset(cfg)
    cat = default_catalog()
    tables = tables or _feature_tables(data, cat, cfg.windows)
    _, skills = mt.dataset_metrics(data)
    _write(cfg.out, "catalog.json", catalog_json(cat))
    summaries = {}
    for t, table in tables.items():
        rows = [
            FeatureVector(dict(zip(table.names, table.X[i].tolist())), table.window_s[i], gid, pid)
            for i, (gid, pid) in enumerate(zip(table.game_ids, table.player_ids))
        ]
        _write(cfg.out, f"features_{t:g}s.csv", feature_matrix_csv(rows, table.names))
        sbar = [skills[pid].mean_score for pid in table.player_ids]
        text, summary = feature_correlations(table, sbar, cat)
        _write(cfg.out, f"feature_correlations_{t:g}s.csv", text)
        summaries[f"{t:g}"] = summary
    _write(cfg.out, "strong_features.json", json.dumps(summaries, indent=2) + "\n")
    print(f"{len(cat)} features x {len(data.games)} games at {len(tables)} window(s) -> {cfg.out}")
    return summaries


def _targets(data: Dataset, task: str):
    targets = ev.game_targets(data, task)
    return [targets[g.meta.game_id] for g in data.games]


def cmd_train(cfg: PipelineConfig, data: Dataset | None = None, tables: dict | None = None) -> ev.EvalReport:
    """Cross-validate on the full game and fit a final model on all games."""
    data = data or _dataset(cfg)
    cat = default_catalog()
    group = parse_group(cfg.group)
    names = cat.names_in(*group) if group else cat.names
    t_full = max(g.meta.duration_ms for g in data.games) / 1000.0
    if tables and max(tables) >= t_full:
        full = tables[max(tables)]
    else:
        full = ev.window_matrix(data, cat, t_full)
    cols = [full.names.index(n) for n in names]
    X = full.X[:, cols]
    y = _targets(data, cfg.task)
    kind = ev.TASKS[cfg.task]
    groups4 = _targets(data, "groups4")
    report = ev.cross_validate(
        X, np.array(y), cfg.forest_params(), kind, cfg.folds, cfg.fold_mode, cfg.seed,
        groups=[g.meta.player_id for g in data.games], strata=groups4,
        row_ids=[g.meta.game_id for g in data.games], feature_names=names, task_name=cfg.task,
        class_order=ev.TASK_CLASSES.get(cfg.task),
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = train(X, np.array(y), cfg.forest_params(), kind, names)
    for wmsg in caught:
        log.warning("%s", wmsg.message)
    _write(cfg.out, "report.json", report.to_json())
    if report.confusion:
        _write(cfg.out, "confusion.csv", report.confusion_csv())
    _write(cfg.out, "model.json", model_to_json(model))
    _write(cfg.out, "importances.csv", _table_csv({
        "feature": [n for n, _ in feature_importance(model)],
        "importance": [v for _, v in feature_importance(model)],
    }))
    label = "accuracy" if report.kind == "classification" else "rho"
    extra = f" (majority baseline {report.majority_baseline:.3f})" if report.majority_baseline is not None else ""
    print(f"{cfg.task}: {label} {report.metric:.4f}{extra} -> {cfg.out}")
    return report


def cmd_curve(cfg: PipelineConfig, data: Dataset | None = None, tables: dict | None = None) -> list:
    data = data or _dataset(cfg)
    curve = ev.windowed_evaluation(
        data, default_catalog(), cfg.task, cfg.windows, cfg.forest_params(), cfg.folds, cfg.fold_mode,
        cfg.seed, parse_group(cfg.group), tables,
    )
    _write(cfg.out, "curve.csv", ev.curve_csv(curve))
    for c in curve:
        print(f"t={c.t:g}s metric={c.metric:.4f} baseline={c.baseline:.4f}")
    return curve


def cmd_synth(cfg: PipelineConfig, overrides: dict) -> Dataset:
    doc = dict(cfg.synth)
    doc.setdefault("seed", cfg.seed)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        scfg = SynthConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad synth settings: {exc}") from None
    data = generate_dataset(scfg)
    write_dataset(data, cfg.out)
    print(f"{len(data.games)} games from {len(data.players)} players -> {cfg.out}")
    return data


def cmd_report(cfg: PipelineConfig) -> None:
    """Run the whole pipeline into subdirectories of the output directory."""
    data = _dataset(cfg)
    base = cfg.out
    sub = lambda name: _replace_out(cfg, os.path.join(base, name))
    cmd_metrics(sub("metrics"))
    cmd_rate(sub("rating"))
    cat = default_catalog()
    t_full = max(g.meta.duration_ms for g in data.games) / 1000.0
    windows = sorted(set(cfg.windows) | {t_full})
    tables = _feature_tables(data, cat, windows)
    cmd_features(sub("features"), data, tables)
    cmd_train(sub("train"), data, tables)
    cmd_curve(sub("curve"), data, {t: tables[t] for t in cfg.windows})


def _replace_out(cfg: PipelineConfig, out: str) -> PipelineConfig:
    return replace(cfg, out=out)


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--config", help="JSON pipeline config; flags override it")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("-v", "--verbose", action="store_true")

    data_args = argparse.ArgumentParser(add_help=False)
    data_args.add_argument("paths", nargs="*", help="log files, directories or globs")

    model_args = argparse.ArgumentParser(add_help=False)
    model_args.add_argument("--task", choices=sorted(ev.TASKS))
    model_args.add_argument("--group", help="feature group filter, e.g. hardware:Keyboard")
    model_args.add_argument("--folds", type=int)
    model_args.add_argument("--fold-mode", choices=ev.FOLD_MODES)
    model_args.add_argument("--ntree", type=int)

    windows = argparse.ArgumentParser(add_help=False)
    windows.add_argument("--windows", help="comma-separated window lengths in seconds")

    parser = _Parser(prog="skillcap", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs.add_parser("ingest", parents=[common, data_args], help="summarize a set of logs")
    subs.add_parser("validate", parents=[common, data_args], help="check logs against the schema invariants")
    subs.add_parser("metrics", parents=[common, data_args], help="performance and skill metrics")
    rate = subs.add_parser("rate", parents=[common, data_args], help="bot-calibrated ratings")
    rate.add_argument("--bot-ratings", help="ratings.json with precalibrated bot ranges")
    subs.add_parser("features", parents=[common, data_args, windows], help="feature matrices and correlations")
    subs.add_parser("train", parents=[common, data_args, model_args], help="cross-validate and fit a model")
    subs.add_parser("curve", parents=[common, data_args, model_args, windows], help="metric against window length")
    synth = subs.add_parser("synth", parents=[common], help="write a synthetic dataset")
    synth.add_argument("--players-per-archetype", type=int)
    synth.add_argument("--games-per-player", type=int)
    synth.add_argument("--duration", type=float, help="game length in seconds")
    subs.add_parser("report", parents=[common, data_args, model_args, windows], help="run the whole pipeline")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s"
        )
        cfg = build_config(args)
        cmd = args.command
        if cmd == "ingest":
            cmd_ingest(cfg)
        elif cmd == "validate":
            return cmd_validate(cfg)
        elif cmd == "metrics":
            cmd_metrics(cfg)
        elif cmd == "rate":
            cmd_rate(cfg, args.bot_ratings)
        elif cmd == "features":
            cmd_features(cfg)
        elif cmd == "train":
            cmd_train(cfg)
        elif cmd == "curve":
            cmd_curve(cfg)
        elif cmd == "synth":
            cmd_synth(cfg, {
                "players_per_archetype": args.players_per_archetype,
                "games_per_player": args.games_per_player,
                "duration_s": args.duration,
                "seed": args.seed,
            })
        elif cmd == "report":
            cmd_report(cfg)
        return EXIT_OK
    except UsageError as exc:
        print(f"skillcap: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (rt.NumericError, FloatingPointError, OverflowError) as exc:
        print(f"skillcap: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, LogError, mt.MetricsError, rt.RatingError, ForestError, ValueError) as exc:
        print(f"skillcap: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"skillcap: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
