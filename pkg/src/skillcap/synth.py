"""Synthetic game logs from parameterized player archetypes.

The generator is a test fixture, not a model of real players: it produces
logs in the same format the parser reads, with keyboard, mouse and game
events whose statistics move with skill in the directions the analysis
expects (more presses, more keys held at once, richer movement patterns).

Randomness flows through one seed hierarchy: dataset -> player -> game ->
stream, via ``numpy.random.SeedSequence.spawn``. A game therefore depends
only on its own seed, and generating games in any order or in parallel
gives the same logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import datetime, timedelta

import numpy as np
from scipy.optimize import brentq

from .telemetry import (
    KIND_BUTTON, KIND_GAME, KIND_KEY, KIND_MOTION, GAME_KINDS, Dataset, EventStream, GameLog, GameMeta,
    PlayerLabels, ScoreEntry, FPS_PLAYED_GROUPS, HOURS_GROUPS,
)

MAPS = ("bath", "darkness", "deadsimple", "foundation", "ubik", "wet", "center", "error")
BOT_RANGES = ((40, 50), (50, 60), (60, 70), (70, 80), (80, 90), (90, 100))

# key id, action
MOVEMENT_KEYS = ((119, "forward"), (115, "backward"), (97, "left"), (100, "right"))
OTHER_KEYS = ((32, "jump"), (306, "crouch"), (304, "sprint"), (114, "reload"), (101, "use"), (113, "switch_weapon"))
PRIMARY_BUTTON, SECONDARY_BUTTON = 1, 3

BASE_TIME = datetime(2013, 2, 18, 10, 0, 0)
BASE_MS = 1_361_181_600_000  # BASE_TIME as Unix milliseconds


@dataclass(frozen=True)
class Archetype:
    name: str
    key_rate: float  # key presses per second
    hold_mean_s: float
    movement_entropy: float  # bits over the four movement keys, 0..2
    chord_prob: float  # chance a movement press brings a second key with it
    other_key_share: float  # share of presses on non-movement keys
    mouse_speed: float  # mean px/s while moving
    mouse_speed_sd: float
    moving_fraction: float  # share of time the mouse is moving
    burst_mean_s: float
    direction_change_rate: float  # heading reversals per second of movement
    click_rate: float  # fire presses per second
    accuracy: float  # chance a shot hits
    score_mean: float  # expected points against the 40-50 range
    score_slope: float  # change in expected points per bot difficulty point
    score_sd: float
    deaths_mean: float  # expected deaths against the 40-50 range

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("name", "score_slope"):
                continue
            if not (isinstance(v, (int, float)) and v >= 0):
                raise ValueError(f"{self.name}: {f.name} must be non-negative, got {v!r}")
        if self.movement_entropy > 2.0:
            raise ValueError(f"{self.name}: movement_entropy is at most 2 bits")
        for name in ("chord_prob", "other_key_share", "moving_fraction", "accuracy"):
            if getattr(self, name) > 1.0:
                raise ValueError(f"{self.name}: {name} must be a probability")

    def expected_score(self, difficulty: float) -> float:
        return max(0.0, self.score_mean + self.score_slope * (difficulty - 45.0))


DEFAULT_ARCHETYPES = (
    Archetype("Novice", key_rate=1.0, hold_mean_s=0.65, movement_entropy=1.1, chord_prob=0.03,
              other_key_share=0.10, mouse_speed=260.0, mouse_speed_sd=120.0, moving_fraction=0.35,
              burst_mean_s=0.9, direction_change_rate=0.8, click_rate=0.6, accuracy=0.15,
              score_mean=11.0, score_slope=-0.12, score_sd=3.5, deaths_mean=9.0),
    Archetype("Intermediate", key_rate=1.8, hold_mean_s=0.55, movement_entropy=1.45, chord_prob=0.10,
              other_key_share=0.15, mouse_speed=420.0, mouse_speed_sd=180.0, moving_fraction=0.42,
              burst_mean_s=0.8, direction_change_rate=1.3, click_rate=1.0, accuracy=0.24,
              score_mean=22.5, score_slope=-0.16, score_sd=3.5, deaths_mean=7.0),
    Archetype("Skilled", key_rate=2.8, hold_mean_s=0.48, movement_entropy=1.75, chord_prob=0.20,
              other_key_share=0.20, mouse_speed=600.0, mouse_speed_sd=240.0, moving_fraction=0.50,
              burst_mean_s=0.7, direction_change_rate=1.9, click_rate=1.4, accuracy=0.32,
              score_mean=29.0, score_slope=-0.18, score_sd=3.5, deaths_mean=5.5),
    Archetype("Expert", key_rate=4.0, hold_mean_s=0.42, movement_entropy=1.95, chord_prob=0.32,
              other_key_share=0.25, mouse_speed=820.0, mouse_speed_sd=300.0, moving_fraction=0.58,
              burst_mean_s=0.6, direction_change_rate=2.6, click_rate=1.8, accuracy=0.40,
              score_mean=38.0, score_slope=-0.20, score_sd=3.5, deaths_mean=4.0),
)


def interpolate(a: Archetype, b: Archetype, w: float, name: str | None = None) -> Archetype:
    """Archetype whose numeric parameters lie a fraction ``w`` from ``a`` to ``b``."""
    vals = {}
    for f in fields(Archetype):
        if f.name == "name":
            continue
        vals[f.name] = (1.0 - w) * getattr(a, f.name) + w * getattr(b, f.name)
    return Archetype(name or (a.name if w < 0.5 else b.name), **vals)


def archetype_at(position: float, archetypes=DEFAULT_ARCHETYPES) -> Archetype:
    """Archetype at a continuous skill position (0 = first, len-1 = last)."""
    top = len(archetypes) - 1
    u = min(max(position, 0.0), float(top))
    i = min(int(math.floor(u)), max(top - 1, 0))
    if top == 0:
        return archetypes[0]
    return interpolate(archetypes[i], archetypes[i + 1], u - i, archetypes[int(round(u))].name)


@dataclass(frozen=True)
class SynthConfig:
    players_per_archetype: int = 10
    games_per_player: int = 10
    maps: tuple[str, ...] = MAPS
    bot_ranges: tuple[tuple[int, int], ...] = BOT_RANGES
    duration_s: float = 180.0
    seed: int = 0
    n_bots: int = 5
    skill_jitter: float = 0.35  # half-width of the skill-position spread within an archetype
    game_jitter: float = 0.15  # log-scale sd of per-game variation in input rates
    archetypes: tuple[Archetype, ...] = DEFAULT_ARCHETYPES

    def __post_init__(self):
        for name in ("players_per_archetype", "games_per_player", "n_bots"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.maps or not self.bot_ranges or not self.archetypes:
            raise ValueError("maps, bot_ranges and archetypes must be non-empty")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if self.skill_jitter < 0 or self.game_jitter < 0:
            raise ValueError("jitter must be non-negative")
        for lo, hi in self.bot_ranges:
            if not 0 <= lo <= hi <= 101:
                raise ValueError(f"invalid bot range {lo}-{hi}")

    @classmethod
    def from_dict(cls, doc: dict) -> SynthConfig:
        doc = dict(doc)
        if "maps" in doc:
            doc["maps"] = tuple(doc["maps"])
        if "bot_ranges" in doc:
            doc["bot_ranges"] = tuple(tuple(r) for r in doc["bot_ranges"])
        if "archetypes" in doc:
            doc["archetypes"] = tuple(Archetype(**a) for a in doc["archetypes"])
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


# --------------------------------------------------------------------------
# Streams
# --------------------------------------------------------------------------


def _forward_bias(entropy_bits: float) -> float:
    """Probability of the forward key giving the target movement entropy.

    The other three movement keys share the remainder equally.
    """
    def h(b):
        rest = (1.0 - b) / 3.0
        out = -b * math.log2(b) if b > 0 else 0.0
        return out - 3 * rest * math.log2(rest) if rest > 0 else out

    if entropy_bits >= 2.0 - 1e-12:
        return 0.25
    if entropy_bits <= 0.0:
        return 1.0
    return brentq(lambda b: h(b) - entropy_bits, 0.25, 1.0 - 1e-12)


def _paired_presses(starts, holds, end_ms):
    """Press/release times for one key, dropping presses that would overlap.

    Returns integer (press, release) arrays with press < release <= end_ms
    and each release strictly before the next press.
    """
    order = np.argsort(starts, kind="stable")
    s = np.floor(starts[order]).astype(np.int64)
    h = np.maximum(1, np.round(holds[order] * 1000.0)).astype(np.int64)
    presses, releases = [], []
    free_at = -1
    for t0, d in zip(s.tolist(), h.tolist()):
        if t0 <= free_at or t0 >= end_ms:
            continue
        t1 = min(t0 + d, end_ms)
        presses.append(t0)
        releases.append(t1)
        free_at = t1
    return np.array(presses, np.int64), np.array(releases, np.int64)


def _key_events(a: Archetype, end_ms: int, rng) -> tuple[list, list]:
    """Keyboard presses as per-key (code, action, press_times, release_times)."""
    n = rng.poisson(a.key_rate * end_ms / 1000.0)
    keys = MOVEMENT_KEYS + OTHER_KEYS
    bias = _forward_bias(a.movement_entropy)
    share = a.other_key_share
    p_move = np.array([bias, (1 - bias) / 3, (1 - bias) / 3, (1 - bias) / 3]) * (1 - share)
    p = np.concatenate([p_move, np.full(len(OTHER_KEYS), share / len(OTHER_KEYS))])
    times = rng.uniform(0, end_ms, n)
    which = rng.choice(len(keys), size=n, p=p)
    holds = rng.gamma(2.0, a.hold_mean_s / 2.0, n)
    # chords: a movement press pulls in a second movement key or sprint/jump
    chord = (which < 4) & (rng.random(n) < a.chord_prob)
    m = int(chord.sum())
    partner = rng.choice([1, 2, 3, 4, 6], size=m)  # index offsets into keys
    c_which = np.where(partner < 4, (which[chord] + partner) % 4, np.where(partner == 4, 6, 4))
    c_times = times[chord] + rng.uniform(0, 80, m)
    c_holds = holds[chord] * rng.uniform(0.6, 1.2, m)
    times = np.concatenate([times, c_times])
    which = np.concatenate([which, c_which])
    holds = np.concatenate([holds, c_holds])
    out = []
    for k, (code, action) in enumerate(keys):
        sel = which == k
        if not sel.any():
            continue
        pr, rl = _paired_presses(times[sel], holds[sel], end_ms)
        out.append((code, action, pr, rl))
    return out


def _click_events(a: Archetype, end_ms: int, rng):
    n = rng.poisson(a.click_rate * end_ms / 1000.0)
    times = rng.uniform(0, end_ms, n)
    holds = rng.uniform(0.05, 0.2, n)
    secondary = rng.random(n) < 0.1
    out = []
    for code, action, sel in ((PRIMARY_BUTTON, "primary", ~secondary), (SECONDARY_BUTTON, "secondary", secondary)):
        pr, rl = _paired_presses(times[sel], holds[sel], end_ms)
        out.append((code, action, pr, rl))
    return out


def _motion_events(a: Archetype, end_ms: int, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mouse motion: bursts of ~3 ms samples following a correlated walk."""
    ts, dxs, dys = [], [], []
    if a.moving_fraction <= 0 or a.mouse_speed <= 0:
        z = np.zeros(0, np.int64)
        return z, z, z
    idle_mean = a.burst_mean_s * (1 - a.moving_fraction) / max(a.moving_fraction, 1e-9)
    t = rng.exponential(idle_mean) * 1000.0
    while t < end_ms:
        dur = max(0.1, rng.exponential(a.burst_mean_s)) * 1000.0
        steps = rng.choice([2, 3, 4], size=int(dur / 2) + 2, p=[0.25, 0.5, 0.25])
        st = t + np.cumsum(steps)
        st = st[(st <= t + dur) & (st <= end_ms)]
        k = len(st)
        if k:
            dt = np.diff(np.concatenate([[t], st]))
            # log-normal burst speed with a bell-shaped profile inside the burst
            sd = a.mouse_speed_sd / a.mouse_speed
            sigma = math.sqrt(math.log1p(sd * sd))
            speed = a.mouse_speed * math.exp(rng.normal(-0.5 * sigma * sigma, sigma))
            profile = 0.3 + 1.4 * np.sin(np.pi * (np.arange(k) + 0.5) / k) ** 2
            heading = rng.uniform(0, 2 * np.pi) + np.cumsum(rng.normal(0, 0.08, k))
            flips = rng.random(k) < a.direction_change_rate * dt / 1000.0
            heading = heading + np.pi * np.cumsum(flips)
            v = speed * profile
            fx = np.cumsum(v * np.cos(heading) * dt / 1000.0)
            fy = np.cumsum(0.5 * v * np.sin(heading) * dt / 1000.0)
            # integer counts whose running sum tracks the continuous path
            dx = np.diff(np.concatenate([[0], np.round(fx).astype(np.int64)]))
            dy = np.diff(np.concatenate([[0], np.round(fy).astype(np.int64)]))
            moved = (dx != 0) | (dy != 0)
            ts.append(np.floor(st[moved]).astype(np.int64))
            dxs.append(dx[moved])
            dys.append(dy[moved])
        t += dur + rng.exponential(idle_mean) * 1000.0
    if not ts:
        z = np.zeros(0, np.int64)
        return z, z, z
    return np.concatenate(ts), np.concatenate(dxs), np.concatenate(dys)


def _scoreboard(a: Archetype, bot_range, n_bots: int, rng) -> tuple[dict[int, ScoreEntry], list[int]]:
    lo, hi = bot_range
    diffs = rng.integers(lo, hi + 1, size=n_bots)
    mid = (lo + hi) / 2.0
    points = int(max(0, round(rng.normal(a.expected_score(mid), a.score_sd))))
    kills = int(rng.binomial(points, 0.85)) if points > 0 else 0
    board = {0: ScoreEntry(points, kills)}
    for j, d in enumerate(diffs.tolist(), start=1):
        bp = int(max(0, round(rng.normal(6.0 + 0.3 * (d - 40), 3.0))))
        board[j] = ScoreEntry(bp, bp, {"bot": True, "difficulty": d})
    return board, diffs.tolist()


def generate_game_log(
    a: Archetype, map_name: str, bot_range: tuple[int, int], duration_s: float = 180.0, seed=0,
    *, game_id: int = 1, player_id: int = 1, game_number: int = 0, connect_ms: int = BASE_MS,
    n_bots: int = 5,
) -> GameLog:
    """One synthetic game of a player with archetype ``a``.

    ``seed`` may be an int or a ``SeedSequence``. The player is client 0
    and the bots are clients 1..n_bots.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    r_keys, r_clicks, r_mouse, r_game = (np.random.Generator(np.random.PCG64(s)) for s in ss.spawn(4))
    end_ms = int(round(duration_s * 1000.0))

    cols = {c: [] for c in ("t", "kind", "code", "state", "action", "dx", "dy")}
    actions = sorted({act for _, act in MOVEMENT_KEYS + OTHER_KEYS} | {"primary", "secondary"})
    aidx = {name: i for i, name in enumerate(actions)}
    aux_rows: list[tuple[int, dict]] = []  # (position in concatenated columns, attrs)

    def add(t, kind, code=0, state=-1, action=-1, dx=0, dy=0):
        t = np.asarray(t, np.int64)
        k = len(t)
        cols["t"].append(t)
        for name, v in (("kind", kind), ("code", code), ("state", state), ("action", action), ("dx", dx), ("dy", dy)):
            cols[name].append(np.broadcast_to(np.asarray(v, np.int64), (k,)))
        return sum(len(c) for c in cols["t"][:-1])

    for code, action, pr, rl in _key_events(a, end_ms, r_keys):
        add(pr, KIND_KEY, code, 1, aidx[action])
        add(rl, KIND_KEY, code, 0, aidx[action])
    fire_presses = []
    for code, action, pr, rl in _click_events(a, end_ms, r_clicks):
        add(pr, KIND_BUTTON, code, 1, aidx[action])
        add(rl, KIND_BUTTON, code, 0, aidx[action])
        fire_presses.append(pr)
    mt, mdx, mdy = _motion_events(a, end_ms, r_mouse)
    add(mt, KIND_MOTION, 0, -1, -1, mdx, mdy)

    board, _ = _scoreboard(a, bot_range, n_bots, r_game)
    me = board[0]
    shots = np.sort(np.concatenate(fire_presses)) if fire_presses else np.zeros(0, np.int64)
    n_hits = int(r_game.binomial(len(shots), a.accuracy)) if len(shots) else 0
    hit_t = np.sort(r_game.choice(shots, size=n_hits, replace=False)) if n_hits else np.zeros(0, np.int64)
    hit_t = np.minimum(hit_t + r_game.integers(5, 40, size=n_hits), end_ms)
    mid = sum(bot_range) / 2.0
    deaths = int(r_game.poisson(max(0.5, a.deaths_mean * (1.0 + 0.012 * (mid - 45.0)))))
    n_taken = int(r_game.poisson(3.0 * deaths + 1.0))

    def rand_times(k):
        return np.sort(r_game.integers(1, end_ms + 1, size=k))

    game_kind = GAME_KINDS.index
    kill_t = rand_times(me.kills)
    bonus_t = rand_times(me.points - me.kills)
    base = add(kill_t, KIND_GAME, game_kind("kill"))
    aux_rows += [(base + i, {"points": 1}) for i in range(len(kill_t))]
    base = add(bonus_t, KIND_GAME, game_kind("other"))
    aux_rows += [(base + i, {"event": "bonus", "points": 1}) for i in range(len(bonus_t))]
    add(rand_times(deaths), KIND_GAME, game_kind("death"))
    add(hit_t, KIND_GAME, game_kind("damage_dealt"))
    add(rand_times(n_taken), KIND_GAME, game_kind("damage_taken"))

    arrays = {k: np.concatenate(v) if v else np.zeros(0, np.int64) for k, v in cols.items()}
    aux = dict(aux_rows)
    events = EventStream._sorted(
        arrays["t"], arrays["kind"], arrays["code"], arrays["state"], arrays["action"],
        arrays["dx"], arrays["dy"], actions, aux,
    )
    # keep only the actions that occur, as the parser would
    used = sorted({actions[i] for i in np.unique(events.action).tolist() if i >= 0})
    remap = np.full(len(actions) + 1, -1, np.int64)
    for i, name in enumerate(actions):
        if name in used:
            remap[i] = used.index(name)
    events = EventStream(
        events.t, events.kind, events.code, events.state, remap[events.action], events.dx, events.dy,
        used, events.aux,
    )
    start = BASE_TIME + timedelta(milliseconds=connect_ms - BASE_MS)
    meta = GameMeta(
        game_id=game_id, player_id=player_id, client_number=0, game_number=game_number,
        map_name=map_name, bot_min=bot_range[0], bot_max=bot_range[1], connect_ms=connect_ms,
        disconnect_ms=connect_ms + end_ms, scoreboard=board, date_time=start.replace(microsecond=0),
        extra={"archetype": a.name},
    )
    return GameLog(meta, events)


@dataclass(frozen=True)
class SynthPlayer:
    player_id: int
    archetype: str
    position: float  # continuous skill position


def player_roster(cfg: SynthConfig) -> list[SynthPlayer]:
    """Players with their archetype and skill position, in player-id order."""
    root = np.random.SeedSequence(cfg.seed)
    n = cfg.players_per_archetype * len(cfg.archetypes)
    out = []
    for i, ss in enumerate(root.spawn(n)):
        arch = i // cfg.players_per_archetype
        rng = np.random.Generator(np.random.PCG64(ss.spawn(1)[0]))
        pos = arch + rng.uniform(-cfg.skill_jitter, cfg.skill_jitter)
        out.append(SynthPlayer(i + 1, cfg.archetypes[arch].name, float(pos)))
    return out


_JITTERED = ("key_rate", "hold_mean_s", "click_rate", "mouse_speed", "moving_fraction", "chord_prob")


def game_variant(a: Archetype, sd: float, rng) -> Archetype:
    """Archetype with its input rates scaled by per-game log-normal factors."""
    if sd <= 0:
        return a
    factors = np.exp(rng.normal(0.0, sd, len(_JITTERED)))
    changes = {name: getattr(a, name) * f for name, f in zip(_JITTERED, factors.tolist())}
    for name in ("moving_fraction", "chord_prob"):
        changes[name] = min(changes[name], 0.95)
    return replace(a, **changes)


def generate_dataset(cfg: SynthConfig = SynthConfig()) -> Dataset:
    """Players, their schedules and all their games, deterministic in ``cfg.seed``."""
    root = np.random.SeedSequence(cfg.seed)
    roster = player_roster(cfg)
    player_seqs = root.spawn(len(roster))
    games, labels = [], {}
    duration_ms = int(round(cfg.duration_s * 1000.0))
    game_id = 0
    for sp, ss in zip(roster, player_seqs):
        # child 0 drew the skill position (player_roster), child 1 the schedule
        kids = ss.spawn(2 + cfg.games_per_player)
        own, game_seqs = kids[1], kids[2:]
        rng = np.random.Generator(np.random.PCG64(own))
        a = archetype_at(sp.position, cfg.archetypes)
        # ranges cycle through a shuffled order so every player meets each
        order = rng.permutation(len(cfg.bot_ranges))
        maps = rng.integers(0, len(cfg.maps), size=cfg.games_per_player)
        level = sp.position / max(len(cfg.archetypes) - 1, 1)
        fps = FPS_PLAYED_GROUPS[min(len(FPS_PLAYED_GROUPS) - 1, int(level * len(FPS_PLAYED_GROUPS) + rng.integers(0, 2)))]
        hours = HOURS_GROUPS[min(len(HOURS_GROUPS) - 1, int(level * len(HOURS_GROUPS) * rng.uniform(0.5, 1.0)))]
        labels[sp.player_id] = PlayerLabels(fps, hours)
        variants = [game_variant(a, cfg.game_jitter, rng) for _ in range(cfg.games_per_player)]
        for g in range(cfg.games_per_player):
            game_id += 1
            rng_range = cfg.bot_ranges[int(order[g % len(order)])]
            connect = BASE_MS + (game_id - 1) * (duration_ms + 120_000)
            games.append(
                generate_game_log(
                    variants[g], cfg.maps[int(maps[g])], rng_range, cfg.duration_s, game_seqs[g],
                    game_id=game_id, player_id=sp.player_id, game_number=g, connect_ms=connect,
                    n_bots=cfg.n_bots,
                )
            )
    return Dataset(tuple(games), labels)
