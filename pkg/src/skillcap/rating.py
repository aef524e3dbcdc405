"""Two-player TrueSkill updates and bot-range calibration.

Players only ever faced bots whose difficulty was drawn from a range, so
every bot range is treated as one rated entity. Calibration sweeps over
the games in random order, lets each bot in a game update against the
player, and moves the range to the average of its bots' posteriors. Player
ratings are then computed against the frozen range ratings.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from scipy.special import log_ndtr

from .telemetry import Dataset, GameLog

WIN, DRAW, LOSS = "win", "draw", "loss"

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class RatingError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Rating:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma < 0:
            raise RatingError(f"invalid rating mu={self.mu} sigma={self.sigma}")


@dataclass(frozen=True)
class TrueSkillParams:
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    epsilon: float = 0.1 * 25.0 / 6.0
    k_conservative: float = 3.0

    def __post_init__(self):
        if not self.beta > 0:
            raise RatingError(f"beta must be positive, got {self.beta}")
        if not self.epsilon >= 0:
            raise RatingError(f"epsilon must be non-negative, got {self.epsilon}")

    def prior(self) -> Rating:
        return Rating(self.mu0, self.sigma0)


@dataclass(frozen=True)
class PairOutcome:
    """Result of the logged player against one bot of the game's range."""

    bot_client: int
    player_points: int
    bot_points: int
    outcome: str  # from the player's point of view


def _log_pdf(x: float) -> float:
    return -0.5 * x * x - _LOG_SQRT_2PI


def _v_win(x: float) -> float:
    # pdf(x) / cdf(x), evaluated in log space so the far left tail stays finite
    return math.exp(_log_pdf(x) - float(log_ndtr(x)))


def _w_win(x: float, v: float) -> float:
    if x < -1e4:
        # v + x -> 1/z - 2/z^3 for z = -x; avoids cancellation
        z = -x
        return v * (1.0 / z - 2.0 / z**3)
    return v * (v + x)


def _log_diff_cdf(a: float, b: float) -> float:
    """log(cdf(a) - cdf(b)) for a > b."""
    if a <= 0:
        la, lb = float(log_ndtr(a)), float(log_ndtr(b))
        return la + math.log1p(-math.exp(lb - la))
    if b >= 0:
        # upper tails: cdf(a) - cdf(b) = sf(b) - sf(a)
        la, lb = float(log_ndtr(-b)), float(log_ndtr(-a))
        return la + math.log1p(-math.exp(lb - la))
    return math.log(1.0 - math.exp(float(log_ndtr(b))) - math.exp(float(log_ndtr(-a))))


def vw(t: float, eps: float, outcome: str = WIN) -> tuple[float, float]:
    """Mean and variance corrections of the truncated performance difference.

    ``t`` is the rating gap and ``eps`` the draw margin, both already divided
    by ``c``. For a win the difference is truncated to ``(eps, inf)``; for a
    draw to ``[-eps, eps]``.
    """
    if not (math.isfinite(t) and math.isfinite(eps)):
        raise NumericError(f"vw called with non-finite arguments t={t} eps={eps}")
    if outcome == WIN:
        x = t - eps
        v = _v_win(x)
        return v, min(max(_w_win(x, v), 0.0), 1.0)
    if outcome != DRAW:
        raise RatingError(f"unknown outcome {outcome!r}")
    if eps < 1e-12:
        # zero-width draw band: the difference is pinned at 0
        return -t, 1.0
    a, b = eps - t, -eps - t
    log_z = _log_diff_cdf(a, b)
    pa = math.exp(_log_pdf(a) - log_z)
    pb = math.exp(_log_pdf(b) - log_z)
    v = pb - pa
    w = v * v + (a * pa - b * pb)
    return v, min(max(w, 0.0), 1.0)


def trueskill_update(
    winner: Rating, loser: Rating, p: TrueSkillParams = TrueSkillParams(), outcome: str = WIN
) -> tuple[Rating, Rating]:
    """Posterior ratings after ``winner`` beats (or draws with) ``loser``."""
    var_w, var_l = winner.sigma**2, loser.sigma**2
    c2 = 2.0 * p.beta**2 + var_w + var_l
    c = math.sqrt(c2)
    v, w = vw((winner.mu - loser.mu) / c, p.epsilon / c, outcome)
    mu_w = winner.mu + var_w / c * v
    mu_l = loser.mu - var_l / c * v
    s2_w = var_w * (1.0 - var_w / c2 * w)
    s2_l = var_l * (1.0 - var_l / c2 * w)
    values = (mu_w, mu_l, s2_w, s2_l)
    if not all(math.isfinite(x) for x in values) or s2_w < 0 or s2_l < 0:
        raise NumericError(
            f"non-finite update: winner={winner} loser={loser} c={c} v={v} w={w} -> {values}"
        )
    return Rating(mu_w, math.sqrt(s2_w)), Rating(mu_l, math.sqrt(s2_l))


def conservative_estimate(r: Rating, k: float = 3.0) -> float:
    return r.mu - k * r.sigma


def decompose_game(log: GameLog) -> list[PairOutcome]:
    """Split a 1-vs-N game into player-vs-bot outcomes, strongest bot first."""
    meta = log.meta
    board = meta.scoreboard
    if len(board) < 2:
        raise RatingError(f"game {meta.game_id} needs at least two scoreboard entries")
    own = board[meta.client_number].points
    bots = sorted(
        ((c, e.points) for c, e in board.items() if c != meta.client_number),
        key=lambda item: (-item[1], item[0]),
    )
    out = []
    for client, pts in bots:
        result = WIN if own > pts else LOSS if own < pts else DRAW
        out.append(PairOutcome(client, own, pts, result))
    return out


def _play(player: Rating, bot: Rating, outcome: str, p: TrueSkillParams) -> tuple[Rating, Rating]:
    """Update a (player, bot) pair; returns (player', bot')."""
    if outcome == LOSS:
        bot2, player2 = trueskill_update(bot, player, p, WIN)
        return player2, bot2
    return trueskill_update(player, bot, p, outcome)


def calibrate_bot_ranges(
    data: Dataset,
    p: TrueSkillParams = TrueSkillParams(),
    seed: int = 0,
    tol: float = 1e-3,
    max_sweeps: int = 100,
) -> dict[tuple[int, int], Rating]:
    """Estimate one rating per bot-difficulty range.

    Each sweep starts players from the prior, visits the games in a seeded
    random order and, per game, updates the player sequentially against
    every bot while each bot starts from the current range rating. The
    range then takes the mean posterior mu and sigma of its bots in that
    game. Sweeps stop once no range mean moves by ``tol`` or more.
    """
    games = list(data.games)
    if not games:
        raise RatingError("cannot calibrate bot ranges on an empty dataset")
    ranges = {g.meta.bot_range: p.prior() for g in games}
    outcomes = {g.meta.game_id: decompose_game(g) for g in games}
    rng = random.Random(seed)
    for _ in range(max_sweeps):
        before = dict(ranges)
        players: dict[int, Rating] = {}
        order = sorted(games, key=lambda g: (g.meta.player_id, g.meta.game_number))
        rng.shuffle(order)
        for g in order:
            pid, key = g.meta.player_id, g.meta.bot_range
            player = players.get(pid, p.prior())
            bot_prior = ranges[key]
            posts = []
            for pair in outcomes[g.meta.game_id]:
                player, bot_post = _play(player, bot_prior, pair.outcome, p)
                posts.append(bot_post)
            players[pid] = player
            if posts:
                ranges[key] = Rating(
                    sum(b.mu for b in posts) / len(posts),
                    sum(b.sigma for b in posts) / len(posts),
                )
        if max(abs(ranges[k].mu - before[k].mu) for k in ranges) < tol:
            break
    return dict(sorted(ranges.items()))


@dataclass(frozen=True)
class TrajectoryPoint:
    player_id: int
    game_number: int
    game_id: int
    rating: Rating

    @property
    def conservative(self) -> float:
        return conservative_estimate(self.rating)


def player_trajectories(
    data: Dataset, bot_ratings: Mapping[tuple[int, int], Rating], p: TrueSkillParams = TrueSkillParams()
) -> dict[int, list[TrajectoryPoint]]:
    """Rating of each player after each of their games, bots held fixed."""
    out: dict[int, list[TrajectoryPoint]] = {}
    for pid, games in data.by_player().items():
        rating = p.prior()
        points = []
        for g in games:
            key = g.meta.bot_range
            if key not in bot_ratings:
                raise RatingError(f"no calibrated rating for bot range {key} (game {g.meta.game_id})")
            bot = bot_ratings[key]
            for pair in decompose_game(g):
                rating, _ = _play(rating, bot, pair.outcome, p)
            points.append(TrajectoryPoint(pid, g.meta.game_number, g.meta.game_id, rating))
        out[pid] = points
    return out


def rate_players(
    data: Dataset, bot_ratings: Mapping[tuple[int, int], Rating], p: TrueSkillParams = TrueSkillParams()
) -> dict[int, Rating]:
    return {
        pid: traj[-1].rating
        for pid, traj in player_trajectories(data, bot_ratings, p).items()
        if traj
    }


def ratings_json(
    players: Mapping[int, Rating], bots: Mapping[tuple[int, int], Rating], k: float = 3.0
) -> str:
    doc = {
        "players": {
            str(pid): {"mu": r.mu, "sigma": r.sigma, "T": conservative_estimate(r, k)}
            for pid, r in sorted(players.items())
        },
        "bot_ranges": {
            f"{lo}-{hi}": {"mu": r.mu, "sigma": r.sigma, "T": conservative_estimate(r, k)}
            for (lo, hi), r in sorted(bots.items())
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def trajectories_csv(traj: Mapping[int, Sequence[TrajectoryPoint]], k: float = 3.0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["player_id", "game_number", "game_id", "mu", "sigma", "T"])
    for pid in sorted(traj):
        for pt in traj[pid]:
            r = pt.rating
            w.writerow([pid, pt.game_number, pt.game_id, repr(r.mu), repr(r.sigma),
                        repr(conservative_estimate(r, k))])
    return buf.getvalue()
