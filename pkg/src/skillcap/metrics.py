"""Per-game performance and per-player skill metrics."""

from __future__ import annotations

import csv
import enum
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .telemetry import KIND_BUTTON, KIND_GAME, GAME_KINDS, GameLog, GameMeta, PlayerLabels

# Button actions that count as a shot fired.
FIRE_ACTIONS = ("primary", "secondary")

# Lower edges of the Intermediate, Skilled and Expert bins; bins are [lo, hi).
SCORE_GROUP_EDGES = (14.0, 22.0, 27.0)


class MetricsError(ValueError):
    pass


class ScoreGroup(enum.IntEnum):
    NOVICE = 0
    INTERMEDIATE = 1
    SKILLED = 2
    EXPERT = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass(frozen=True)
class GamePerformance:
    game_id: int
    player_id: int
    game_number: int
    rank: int
    score: int
    kills: int
    deaths: int | None
    kdr: float | None
    shots: int
    hits: int | None
    accuracy: float | None

    @property
    def absent(self) -> tuple[str, ...]:
        """Names of metrics that could not be computed from the log."""
        return tuple(n for n in ("deaths", "kdr", "hits", "accuracy") if getattr(self, n) is None)


@dataclass(frozen=True)
class PlayerSkill:
    player_id: int
    n_games: int
    mean_rank: float
    mean_score: float
    mean_kdr: float | None
    mean_accuracy: float | None
    mean_deaths: float | None
    fps_played: str | None = None
    hours: str | None = None

    @property
    def score_group(self) -> ScoreGroup:
        return score_group(self.mean_score)


def rank_from_scoreboard(meta: GameMeta) -> int:
    """Competition rank of the logged client by points (ties share the better rank)."""
    board = meta.scoreboard
    if meta.client_number not in board:
        raise MetricsError(f"client {meta.client_number} missing from scoreboard of game {meta.game_id}")
    own = board[meta.client_number].points
    return 1 + sum(1 for e in board.values() if e.points > own)


def game_performance(log: GameLog) -> GamePerformance:
    meta = log.meta
    ev = log.events
    entry = meta.scoreboard.get(meta.client_number)
    if entry is None:
        raise MetricsError(f"client {meta.client_number} missing from scoreboard of game {meta.game_id}")
    rank = rank_from_scoreboard(meta)

    fire = [ev.action_code(a) for a in FIRE_ACTIONS]
    shots = int(np.count_nonzero((ev.kind == KIND_BUTTON) & (ev.state == 1) & np.isin(ev.action, fire)))

    game_rows = ev.kind == KIND_GAME
    has_game_events = bool(game_rows.any())
    if has_game_events:
        deaths = int(np.count_nonzero(game_rows & (ev.code == GAME_KINDS.index("death"))))
        hits = int(np.count_nonzero(game_rows & (ev.code == GAME_KINDS.index("damage_dealt"))))
        kdr = entry.kills / max(deaths, 1)
    else:
        deaths = hits = kdr = None

    if shots == 0:
        accuracy = 0.0
    elif hits is None:
        accuracy = None
    else:
        accuracy = min(hits, shots) / shots

    return GamePerformance(
        game_id=meta.game_id,
        player_id=meta.player_id,
        game_number=meta.game_number,
        rank=rank,
        score=entry.points,
        kills=entry.kills,
        deaths=deaths,
        kdr=kdr,
        shots=shots,
        hits=hits,
        accuracy=accuracy,
    )


def _mean_or_none(values: Iterable[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return float(np.mean(present))


def player_skill(games: Sequence[GamePerformance], labels: PlayerLabels | None = None) -> PlayerSkill:
    """Average a player's per-game metrics. Absent values are skipped."""
    if not games:
        raise MetricsError("player_skill needs at least one game")
    players = {g.player_id for g in games}
    if len(players) != 1:
        raise MetricsError(f"games belong to several players: {sorted(players)}")
    labels = labels or PlayerLabels()
    return PlayerSkill(
        player_id=games[0].player_id,
        n_games=len(games),
        mean_rank=float(np.mean([g.rank for g in games])),
        mean_score=float(np.mean([g.score for g in games])),
        mean_kdr=_mean_or_none(g.kdr for g in games),
        mean_accuracy=_mean_or_none(g.accuracy for g in games),
        mean_deaths=_mean_or_none(g.deaths for g in games),
        fps_played=labels.fps_played,
        hours=labels.hours,
    )


def score_group(mean_score: float) -> ScoreGroup:
    lo_mid, mid_hi, hi = SCORE_GROUP_EDGES
    if mean_score < lo_mid:
        return ScoreGroup.NOVICE
    if mean_score < mid_hi:
        return ScoreGroup.INTERMEDIATE
    if mean_score < hi:
        return ScoreGroup.SKILLED
    return ScoreGroup.EXPERT


def cumulative_average(series: Sequence[float]) -> list[float]:
    if len(series) == 0:
        raise MetricsError("cumulative_average of an empty series")
    out = []
    total = 0.0
    for i, v in enumerate(series, start=1):
        total += v
        out.append(total / i)
    return out


def dataset_metrics(data) -> tuple[list[GamePerformance], dict[int, PlayerSkill]]:
    """Per-game performance for every game and per-player skill for every player."""
    per_game = []
    skills = {}
    for pid, games in data.by_player().items():
        perf = [game_performance(g) for g in games]
        per_game.extend(perf)
        skills[pid] = player_skill(perf, data.players.get(pid))
    return per_game, skills


def learning_curves(per_game: Sequence[GamePerformance], skills: dict[int, PlayerSkill]) -> dict[str, list[float]]:
    """Mean cumulative-average score per score group, indexed by games played."""
    by_player: dict[int, list[GamePerformance]] = {}
    for g in per_game:
        by_player.setdefault(g.player_id, []).append(g)
    curves: dict[str, list[list[float]]] = {}
    for pid, games in sorted(by_player.items()):
        games.sort(key=lambda g: g.game_number)
        curve = cumulative_average([g.score for g in games])
        curves.setdefault(skills[pid].score_group.label, []).append(curve)
    out = {}
    for group in ScoreGroup:
        rows = curves.get(group.label, [])
        if not rows:
            continue
        longest = max(len(r) for r in rows)
        out[group.label] = [
            float(np.mean([r[i] for r in rows if len(r) > i])) for i in range(longest)
        ]
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 10))
    return str(v)


GAME_CSV_HEADER = (
    "game_id", "player_id", "game_number", "rank", "score", "kills",
    "deaths", "kdr", "shots", "hits", "accuracy",
)
PLAYER_CSV_HEADER = (
    "player_id", "n_games", "mean_rank", "mean_score", "mean_kdr",
    "mean_accuracy", "mean_deaths", "score_group", "fps_played", "hours",
)


def games_csv(per_game: Iterable[GamePerformance]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GAME_CSV_HEADER)
    for g in per_game:
        w.writerow([_fmt(getattr(g, h)) for h in GAME_CSV_HEADER])
    return buf.getvalue()


def players_csv(skills: dict[int, PlayerSkill]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLAYER_CSV_HEADER)
    for pid in sorted(skills):
        s = skills[pid]
        row = [_fmt(getattr(s, h)) for h in PLAYER_CSV_HEADER if h != "score_group"]
        row.insert(PLAYER_CSV_HEADER.index("score_group"), s.score_group.label)
        w.writerow(row)
    return buf.getvalue()
