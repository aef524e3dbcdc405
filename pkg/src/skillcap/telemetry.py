"""Game-log data model, JSON parsing/serialization and windowing.

A game log is a block of metadata plus a time-ordered stream of input and
game events. Events are held column-wise (numpy arrays) because a single
three-minute game carries tens of thousands of mouse-motion samples; the
:class:`EventStream` still behaves as an immutable sequence of
:class:`Event` objects for code that wants them one at a time.

The on-disk JSON layout is documented in ``docs/log_schema.md``.
"""

from __future__ import annotations

import glob
import json
import math
import os
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Union

import numpy as np

SCHEMA_ID = "skillcap.gamelog/1"

GAP_WARN_MS = 15_000

KIND_KEY, KIND_BUTTON, KIND_MOTION, KIND_GAME = 0, 1, 2, 3
GAME_KINDS = ("kill", "death", "damage_dealt", "damage_taken", "other")
_GAME_KIND_CODE = {k: i for i, k in enumerate(GAME_KINDS)}
_TYPE_NAMES = {KIND_KEY: "key", KIND_BUTTON: "button", KIND_MOTION: "motion", KIND_GAME: "game"}
_STATE_NAMES = {1: "pressed", 0: "released"}
_STATE_CODES = {"pressed": 1, "released": 0}

FPS_PLAYED_GROUPS = ("Never", "1 or 2", "2-5", "5-10", "10+")
HOURS_GROUPS = ("<2", "2-5", "5-10", "10+")

_META_FIELDS = (
    "game_id",
    "player_id",
    "client_number",
    "game_number",
    "map_name",
    "bot_min",
    "bot_max",
    "connect_ms",
    "disconnect_ms",
    "scoreboard",
    "date_time",
)


class LogError(ValueError):
    """Base class for problems with a game log document."""


class LogParseError(LogError):
    """The document is not valid JSON."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte {byte_offset})")
        self.byte_offset = byte_offset


class SchemaError(LogError):
    """The document is JSON but does not follow the log schema."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


# --------------------------------------------------------------------------
# Data model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreEntry:
    points: int
    kills: int
    extra: Mapping[str, Any] = field(default_factory=dict, compare=True)


@dataclass(frozen=True)
class GameMeta:
    game_id: int
    player_id: int
    client_number: int
    game_number: int
    map_name: str
    bot_min: int
    bot_max: int
    connect_ms: int
    disconnect_ms: int
    scoreboard: Mapping[int, ScoreEntry]
    date_time: datetime | None
    extra: Mapping[str, Any] = field(default_factory=dict)
    # set by slice_window; None means the full game
    effective_duration_ms: int | None = None

    @property
    def duration_ms(self) -> int:
        return self.disconnect_ms - self.connect_ms

    @property
    def bot_range(self) -> tuple[int, int]:
        return (self.bot_min, self.bot_max)

    @property
    def window_ms(self) -> int:
        """Length of the observed part of the game."""
        if self.effective_duration_ms is None:
            return self.duration_ms
        return self.effective_duration_ms


@dataclass(frozen=True)
class KeyPress:
    key_id: int
    final_state: str
    game_action: str | None = None


@dataclass(frozen=True)
class MouseButton:
    button_id: int
    final_state: str
    game_action: str | None = None


@dataclass(frozen=True)
class MouseMotion:
    dx: int
    dy: int


@dataclass(frozen=True)
class GameEvent:
    kind: str
    attributes: Mapping[str, Any] = field(default_factory=dict)


Payload = Union[KeyPress, MouseButton, MouseMotion, GameEvent]


@dataclass(frozen=True)
class Event:
    timestamp_ms: int
    payload: Payload
    extra: Mapping[str, Any] = field(default_factory=dict)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class EventStream(Sequence):
    """Immutable, time-ordered event table.

    Columns: ``t`` (game-relative ms), ``kind`` (KIND_* code), ``code``
    (key id, button id or game-kind index), ``state`` (1 pressed, 0 released,
    -1 n/a), ``action`` (index into ``actions`` or -1), ``dx``/``dy``.
    ``aux`` maps a row index to that row's extra fields (input events) or
    attributes (game events); most rows have none.
    """

    __slots__ = ("t", "kind", "code", "state", "action", "dx", "dy", "actions", "aux")

    def __init__(self, t, kind, code, state, action, dx, dy, actions=(), aux=None):
        n = len(t)
        cols = [np.asarray(c) for c in (t, kind, code, state, action, dx, dy)]
        if any(len(c) != n for c in cols):
            raise ValueError("event columns must have equal length")
        self.t = _frozen(cols[0].astype(np.int64, copy=True))
        self.kind = _frozen(cols[1].astype(np.int8, copy=True))
        self.code = _frozen(cols[2].astype(np.int64, copy=True))
        self.state = _frozen(cols[3].astype(np.int8, copy=True))
        self.action = _frozen(cols[4].astype(np.int32, copy=True))
        self.dx = _frozen(cols[5].astype(np.int64, copy=True))
        self.dy = _frozen(cols[6].astype(np.int64, copy=True))
        self.actions = tuple(actions)
        self.aux = dict(aux or {})

    @classmethod
    def empty(cls) -> EventStream:
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, z, z, z, z, z)

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> EventStream:
        """Build a stream from Event objects, stably sorted by timestamp."""
        events = list(events)
        n = len(events)
        t = np.empty(n, np.int64)
        kind = np.empty(n, np.int8)
        code = np.zeros(n, np.int64)
        state = np.full(n, -1, np.int8)
        action_names: list[str | None] = [None] * n
        dx = np.zeros(n, np.int64)
        dy = np.zeros(n, np.int64)
        aux: dict[int, dict] = {}
        for i, ev in enumerate(events):
            t[i] = ev.timestamp_ms
            p = ev.payload
            if isinstance(p, KeyPress):
                kind[i], code[i], state[i] = KIND_KEY, p.key_id, _STATE_CODES[p.final_state]
                action_names[i] = p.game_action
            elif isinstance(p, MouseButton):
                kind[i], code[i], state[i] = KIND_BUTTON, p.button_id, _STATE_CODES[p.final_state]
                action_names[i] = p.game_action
            elif isinstance(p, MouseMotion):
                kind[i], dx[i], dy[i] = KIND_MOTION, p.dx, p.dy
            elif isinstance(p, GameEvent):
                kind[i], code[i] = KIND_GAME, _GAME_KIND_CODE.get(p.kind, _GAME_KIND_CODE["other"])
                if p.attributes:
                    aux[i] = dict(p.attributes)
            else:
                raise TypeError(f"unknown payload type {type(p).__name__}")
            if ev.extra and not isinstance(p, GameEvent):
                aux[i] = dict(ev.extra)
        vocab = sorted({a for a in action_names if a is not None})
        index = {a: j for j, a in enumerate(vocab)}
        action = np.array([-1 if a is None else index[a] for a in action_names], dtype=np.int32)
        return cls._sorted(t, kind, code, state, action, dx, dy, vocab, aux)

    @classmethod
    def _sorted(cls, t, kind, code, state, action, dx, dy, actions, aux) -> EventStream:
        order = np.argsort(t, kind="stable")
        if np.all(order == np.arange(len(order))):
            return cls(t, kind, code, state, action, dx, dy, actions, aux)
        inverse = np.empty_like(order)
        inverse[order] = np.arange(len(order))
        aux = {int(inverse[i]): v for i, v in aux.items()}
        return cls(
            t[order], kind[order], code[order], state[order], action[order],
            dx[order], dy[order], actions, aux,
        )

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i):
        if isinstance(i, slice):
            start, stop, step = i.indices(len(self))
            if step != 1:
                raise ValueError("EventStream only supports contiguous slices")
            return self._take_range(start, stop)
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return self._event(i)

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self._event(i)

    def _event(self, i: int) -> Event:
        k = int(self.kind[i])
        aux = self.aux.get(i, {})
        a = int(self.action[i])
        action = self.actions[a] if a >= 0 else None
        if k == KIND_KEY:
            payload = KeyPress(int(self.code[i]), _STATE_NAMES[int(self.state[i])], action)
        elif k == KIND_BUTTON:
            payload = MouseButton(int(self.code[i]), _STATE_NAMES[int(self.state[i])], action)
        elif k == KIND_MOTION:
            payload = MouseMotion(int(self.dx[i]), int(self.dy[i]))
        else:
            return Event(int(self.t[i]), GameEvent(GAME_KINDS[int(self.code[i])], dict(aux)))
        return Event(int(self.t[i]), payload, dict(aux))

    def _take_range(self, start: int, stop: int) -> EventStream:
        aux = {i - start: v for i, v in self.aux.items() if start <= i < stop}
        return EventStream(
            self.t[start:stop], self.kind[start:stop], self.code[start:stop],
            self.state[start:stop], self.action[start:stop], self.dx[start:stop],
            self.dy[start:stop], self.actions, aux,
        )

    def upto(self, t_ms: float) -> EventStream:
        """Prefix of events with timestamp <= t_ms."""
        stop = int(np.searchsorted(self.t, t_ms, side="right"))
        if stop == len(self):
            return self
        return self._take_range(0, stop)

    def action_names(self) -> np.ndarray:
        """Per-row action name (object array, None where absent)."""
        lookup = np.array(list(self.actions) + [None], dtype=object)
        return lookup[self.action]

    def action_code(self, name: str) -> int:
        try:
            return self.actions.index(name)
        except ValueError:
            return -2  # matches no row

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        if len(self) != len(other):
            return False
        for col in ("t", "kind", "code", "state", "dx", "dy"):
            if not np.array_equal(getattr(self, col), getattr(other, col)):
                return False
        if not np.array_equal(self.action_names(), other.action_names()):
            return False
        return self.aux == other.aux

    __hash__ = None

    def __repr__(self) -> str:
        return f"EventStream(n={len(self)})"


@dataclass(frozen=True)
class GameLog:
    meta: GameMeta
    events: EventStream

    @property
    def game_id(self) -> int:
        return self.meta.game_id


@dataclass(frozen=True)
class PlayerLabels:
    fps_played: str | None = None
    hours: str | None = None


@dataclass(frozen=True)
class Dataset:
    games: tuple[GameLog, ...]
    players: Mapping[int, PlayerLabels] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "games", tuple(self.games))
        seen = set()
        for g in self.games:
            key = (g.meta.player_id, g.meta.game_number)
            if key in seen:
                raise SchemaError(
                    f"duplicate game_number {g.meta.game_number} for player {g.meta.player_id}"
                )
            seen.add(key)

    def by_player(self) -> dict[int, list[GameLog]]:
        """Games grouped per player, each list in game_number order."""
        out: dict[int, list[GameLog]] = {}
        for g in self.games:
            out.setdefault(g.meta.player_id, []).append(g)
        for games in out.values():
            games.sort(key=lambda g: g.meta.game_number)
        return dict(sorted(out.items()))


@dataclass(frozen=True)
class Issue:
    severity: str  # "warn" | "error"
    message: str


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

Adapter = Callable[[dict], dict]


def _require(obj: Mapping, key: str, where: str = ""):
    if key not in obj:
        raise SchemaError("missing required field", f"{where}{key}")
    return obj[key]


def _as_int(value, name: str) -> int:
    if isinstance(value, bool):
        raise SchemaError(f"expected integer, got {value!r}", name)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
    raise SchemaError(f"expected integer, got {value!r}", name)


def _parse_datetime(value) -> datetime | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError(f"expected date string, got {value!r}", "date_time")
    for candidate in (value, value.replace(", ", "T"), value.replace(" ", "T")):
        try:
            return datetime.fromisoformat(candidate)
        except ValueError:
            continue
    raise SchemaError(f"unrecognised date {value!r}", "date_time")


def _parse_scoreboard(raw) -> dict[int, ScoreEntry]:
    if not isinstance(raw, Mapping):
        raise SchemaError("expected an object keyed by client number", "scoreboard")
    board = {}
    for key, entry in raw.items():
        where = f"scoreboard.{key}."
        client = _as_int(key, "scoreboard")
        if not isinstance(entry, Mapping):
            raise SchemaError("expected {points, kills}", f"scoreboard.{key}")
        points = _as_int(_require(entry, "points", where), where + "points")
        kills = _as_int(_require(entry, "kills", where), where + "kills")
        extra = {k: v for k, v in entry.items() if k not in ("points", "kills")}
        board[client] = ScoreEntry(points, kills, extra)
    return dict(sorted(board.items()))


def _parse_events(raw, connect_ms: int) -> EventStream:
    if not isinstance(raw, list):
        raise SchemaError("expected a list", "events")
    n = len(raw)
    t = np.empty(n, np.int64)
    kind = np.empty(n, np.int8)
    code = np.zeros(n, np.int64)
    state = np.full(n, -1, np.int8)
    dx = np.zeros(n, np.int64)
    dy = np.zeros(n, np.int64)
    action_names: list = [None] * n
    aux: dict[int, dict] = {}
    for i, ev in enumerate(raw):
        where = f"events[{i}]."
        if not isinstance(ev, dict):
            raise SchemaError("expected an object", f"events[{i}]")
        t[i] = _as_int(_require(ev, "t", where), where + "t") - connect_ms
        typ = ev.get("type")
        if typ == "motion":
            kind[i] = KIND_MOTION
            x, y = _require(ev, "dx", where), _require(ev, "dy", where)
            dx[i] = _as_int(x, where + "dx")
            dy[i] = _as_int(y, where + "dy")
            rest = {k: v for k, v in ev.items() if k not in ("t", "type", "dx", "dy")}
        elif typ in ("key", "button"):
            id_field = "key" if typ == "key" else "button"
            kind[i] = KIND_KEY if typ == "key" else KIND_BUTTON
            code[i] = _as_int(_require(ev, id_field, where), where + id_field)
            st = _require(ev, "state", where)
            if st not in _STATE_CODES:
                raise SchemaError(f"expected 'pressed' or 'released', got {st!r}", where + "state")
            state[i] = _STATE_CODES[st]
            act = ev.get("action")
            if act is not None and not isinstance(act, str):
                raise SchemaError(f"expected string or null, got {act!r}", where + "action")
            action_names[i] = act
            rest = {k: v for k, v in ev.items() if k not in ("t", "type", id_field, "state", "action")}
        elif typ == "game":
            kind[i] = KIND_GAME
            gk = ev.get("kind", "other")
            code[i] = _GAME_KIND_CODE.get(gk, _GAME_KIND_CODE["other"])
            # unknown kinds keep their name as an attribute
            rest = {k: v for k, v in ev.items() if k not in ("t", "type")}
            if rest.get("kind") in GAME_KINDS:
                rest.pop("kind")
        else:
            # unknown event type: kept verbatim as an "other" game event
            kind[i] = KIND_GAME
            code[i] = _GAME_KIND_CODE["other"]
            rest = {k: v for k, v in ev.items() if k != "t"}
        if rest:
            aux[i] = rest
    vocab = sorted({a for a in action_names if a is not None})
    index = {a: j for j, a in enumerate(vocab)}
    action = np.array([-1 if a is None else index[a] for a in action_names], dtype=np.int32)
    return EventStream._sorted(t, kind, code, state, action, dx, dy, vocab, aux)


def log_from_dict(doc: Mapping) -> GameLog:
    """Build a GameLog from an already-decoded JSON object."""
    if not isinstance(doc, Mapping):
        raise SchemaError("top level must be a JSON object")
    for name in _META_FIELDS:
        _require(doc, name)
    bot_min = _as_int(doc["bot_min"], "bot_min")
    bot_max = _as_int(doc["bot_max"], "bot_max")
    if bot_min > bot_max:
        raise SchemaError(f"bot_min {bot_min} exceeds bot_max {bot_max}", "bot_min")
    connect_ms = _as_int(doc["connect_ms"], "connect_ms")
    map_name = doc["map_name"]
    if not isinstance(map_name, str):
        raise SchemaError(f"expected string, got {map_name!r}", "map_name")
    known = set(_META_FIELDS) | {"events", "schema"}
    meta = GameMeta(
        game_id=_as_int(doc["game_id"], "game_id"),
        player_id=_as_int(doc["player_id"], "player_id"),
        client_number=_as_int(doc["client_number"], "client_number"),
        game_number=_as_int(doc["game_number"], "game_number"),
        map_name=map_name,
        bot_min=bot_min,
        bot_max=bot_max,
        connect_ms=connect_ms,
        disconnect_ms=_as_int(doc["disconnect_ms"], "disconnect_ms"),
        scoreboard=_parse_scoreboard(doc["scoreboard"]),
        date_time=_parse_datetime(doc["date_time"]),
        extra={k: v for k, v in doc.items() if k not in known},
    )
    events = _parse_events(doc.get("events", []), connect_ms)
    return GameLog(meta, events)


def parse_game_log(text: str | bytes, adapter: Adapter | None = None) -> GameLog:
    """Parse one JSON game log.

    ``adapter`` may rewrite the decoded object before schema checks, which is
    the hook for reading logs that use different key names.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise LogParseError(exc.msg, offset) from None
    if adapter is not None:
        doc = adapter(doc)
    return log_from_dict(doc)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def log_to_dict(log: GameLog) -> dict:
    m = log.meta
    doc: dict[str, Any] = {
        "schema": SCHEMA_ID,
        "game_id": m.game_id,
        "player_id": m.player_id,
        "client_number": m.client_number,
        "game_number": m.game_number,
        "map_name": m.map_name,
        "bot_min": m.bot_min,
        "bot_max": m.bot_max,
        "connect_ms": m.connect_ms,
        "disconnect_ms": m.disconnect_ms,
        "scoreboard": {
            str(c): {"points": e.points, "kills": e.kills, **e.extra}
            for c, e in sorted(m.scoreboard.items())
        },
        "date_time": m.date_time.isoformat() if m.date_time is not None else None,
    }
    for k in sorted(m.extra):
        doc[k] = m.extra[k]
    doc["events"] = _events_to_list(log.events, m.connect_ms)
    return doc


def _events_to_list(ev: EventStream, connect_ms: int) -> list[dict]:
    out = []
    t = (ev.t + connect_ms).tolist()
    kind = ev.kind.tolist()
    code = ev.code.tolist()
    state = ev.state.tolist()
    action = ev.action.tolist()
    dx = ev.dx.tolist()
    dy = ev.dy.tolist()
    actions = ev.actions
    aux = ev.aux
    for i in range(len(t)):
        k = kind[i]
        if k == KIND_MOTION:
            d = {"t": t[i], "type": "motion", "dx": dx[i], "dy": dy[i]}
        elif k == KIND_GAME:
            if "type" in aux.get(i, ()):
                # event of an unknown type, kept verbatim
                d = {"t": t[i]}
            else:
                d = {"t": t[i], "type": "game", "kind": GAME_KINDS[code[i]]}
        else:
            d = {
                "t": t[i],
                "type": _TYPE_NAMES[k],
                ("key" if k == KIND_KEY else "button"): code[i],
                "state": _STATE_NAMES[state[i]],
                "action": actions[action[i]] if action[i] >= 0 else None,
            }
        extra = aux.get(i)
        if extra:
            d.update(extra)
        out.append(d)
    return out


def serialize_game_log(log: GameLog) -> str:
    """Canonical JSON text; byte-stable for equal logs."""
    doc = log_to_dict(log)
    events = doc.pop("events")
    head = json.dumps(doc, ensure_ascii=False, separators=(", ", ": "))
    lines = [json.dumps(e, ensure_ascii=False, separators=(",", ":")) for e in events]
    body = ",\n  ".join(lines)
    events_text = "[]" if not lines else "[\n  " + body + "\n]"
    return head[:-1] + ', "events": ' + events_text + "}\n"


# --------------------------------------------------------------------------
# Validation and windowing
# --------------------------------------------------------------------------


def validate(log: GameLog, gap_warn_ms: int = GAP_WARN_MS) -> list[Issue]:
    """Report invariant violations and suspicious data gaps."""
    issues: list[Issue] = []
    m = log.meta
    if m.bot_min > m.bot_max:
        issues.append(Issue("error", f"bot_min {m.bot_min} > bot_max {m.bot_max}"))
    for name in ("bot_min", "bot_max"):
        v = getattr(m, name)
        if not 0 <= v <= 101:
            issues.append(Issue("error", f"{name} {v} outside 0..101"))
    if m.connect_ms >= m.disconnect_ms:
        issues.append(Issue("error", f"connect_ms {m.connect_ms} >= disconnect_ms {m.disconnect_ms}"))
    if m.client_number not in m.scoreboard:
        issues.append(Issue("error", f"scoreboard has no entry for client {m.client_number}"))
    t = log.events.t
    if len(t):
        if np.any(np.diff(t) < 0):
            issues.append(Issue("error", "event timestamps decrease"))
        duration = m.duration_ms
        outside = int(np.count_nonzero((t < 0) | (t > duration)))
        if outside:
            issues.append(
                Issue("error", f"{outside} event(s) outside game time 0..{duration} ms")
            )
        gaps = np.diff(t)
        for i in np.flatnonzero(gaps > gap_warn_ms):
            issues.append(
                Issue(
                    "warn",
                    f"{gaps[i] / 1000:.1f} s without events after t={t[i] / 1000:.3f} s",
                )
            )
    return issues


def slice_window(log: GameLog, t_end: float) -> GameLog:
    """Keep the events of the first ``t_end`` seconds of a game."""
    if t_end < 0 or (isinstance(t_end, float) and math.isnan(t_end)):
        raise ValueError(f"t_end must be non-negative, got {t_end}")
    limit_ms = t_end * 1000.0
    effective = int(min(limit_ms, log.meta.duration_ms)) if math.isfinite(limit_ms) else log.meta.duration_ms
    if log.meta.effective_duration_ms is not None:
        effective = min(effective, log.meta.effective_duration_ms)
    meta = replace(log.meta, effective_duration_ms=effective)
    return GameLog(meta, log.events.upto(limit_ms))


def select_study_games(
    data: Dataset, min_games: int = 8, max_game_number: float = 16
) -> Dataset:
    """Drop players with too few games and games past the cut-off."""
    counts: dict[int, int] = {}
    for g in data.games:
        counts[g.meta.player_id] = counts.get(g.meta.player_id, 0) + 1
    kept = tuple(
        g
        for g in data.games
        if counts[g.meta.player_id] >= min_games and g.meta.game_number < max_game_number
    )
    kept_players = {g.meta.player_id for g in kept}
    return Dataset(kept, {p: lab for p, lab in data.players.items() if p in kept_players})


# --------------------------------------------------------------------------
# Files
# --------------------------------------------------------------------------

PLAYERS_FILE = "players.json"


def read_game_log(path: str | os.PathLike, adapter: Adapter | None = None) -> GameLog:
    with open(path, "rb") as fh:
        return parse_game_log(fh.read(), adapter)


def write_game_log(log: GameLog, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_game_log(log))


def expand_paths(paths: Iterable[str]) -> list[str]:
    """Expand directories and globs into a sorted list of log files."""
    files: set[str] = set()
    for p in paths:
        if os.path.isdir(p):
            for name in os.listdir(p):
                if name.endswith(".json") and name != PLAYERS_FILE:
                    files.add(os.path.join(p, name))
        elif any(ch in p for ch in "*?["):
            files.update(f for f in glob.glob(p) if os.path.basename(f) != PLAYERS_FILE)
        elif os.path.exists(p):
            files.add(p)
    return sorted(files)


def _labels_from_json(raw: Mapping) -> dict[int, PlayerLabels]:
    return {
        int(pid): PlayerLabels(lab.get("fps_played"), lab.get("hours"))
        for pid, lab in raw.items()
    }


def read_players(path: str | os.PathLike) -> dict[int, PlayerLabels]:
    with open(path, encoding="utf-8") as fh:
        return _labels_from_json(json.load(fh))


def players_to_json(players: Mapping[int, PlayerLabels]) -> str:
    doc = {
        str(pid): {"fps_played": lab.fps_played, "hours": lab.hours}
        for pid, lab in sorted(players.items())
    }
    return json.dumps(doc, indent=2) + "\n"


def load_dataset(
    paths: Iterable[str], adapter: Adapter | None = None
) -> tuple[Dataset, list[tuple[str, str]]]:
    """Read every log under ``paths``.

    Returns the dataset and a list of ``(path, error message)`` for files
    that failed to parse. A ``players.json`` next to the logs supplies the
    demographic labels.
    """
    paths = list(paths)
    games = []
    failures = []
    for f in expand_paths(paths):
        try:
            games.append(read_game_log(f, adapter))
        except (LogError, UnicodeDecodeError, OSError) as exc:
            failures.append((f, str(exc)))
    players: dict[int, PlayerLabels] = {}
    for p in paths:
        candidate = os.path.join(p, PLAYERS_FILE) if os.path.isdir(p) else None
        if candidate and os.path.exists(candidate):
            players.update(read_players(candidate))
    games.sort(key=lambda g: (g.meta.player_id, g.meta.game_number, g.meta.game_id))
    return Dataset(tuple(games), players), failures


def write_dataset(data: Dataset, directory: str | os.PathLike) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    written = []
    for g in data.games:
        name = os.path.join(directory, f"game_{g.meta.game_id:05d}.json")
        write_game_log(g, name)
        written.append(name)
    if data.players:
        with open(os.path.join(directory, PLAYERS_FILE), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(players_to_json(data.players))
    return written
