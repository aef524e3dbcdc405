"""The feature catalog and windowed feature extraction.

Every catalog entry names an extractor plus its parameters and carries one
group per grouping scheme (hardware, type, context). Extraction slices the
log, builds a :class:`WindowView` that caches derived streams (tick-sampled
held-key sets, hold intervals, resampled mouse series) and evaluates each
entry independently against it, so entry order never affects values.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..telemetry import KIND_BUTTON, KIND_KEY, KIND_MOTION, GameLog, slice_window
from . import complexity
from .inputs import kinetics_features, key_stats, motion_bursts, resample_displacement, KINETICS_NAMES

SCHEMES: dict[str, tuple[str, ...]] = {
    "hardware": ("Keyboard", "Mouse", "Clicks"),
    "type": ("EventFrequency", "Complexity", "Kinetics"),
    "context": ("ContextFree", "Dependent"),
}
UNGROUPED = "Ungrouped"

MOVEMENT_ACTIONS = ("forward", "backward", "left", "right")
KEY_ACTIONS = MOVEMENT_ACTIONS + ("jump", "crouch", "sprint", "reload", "use", "switch_weapon")
BUTTON_ACTIONS = ("primary", "secondary")

TICK_MS = 50  # symbol/series sampling period for keyboard complexity and SampEn
DFT_HZ = 100.0
MOUSE_BANDS = ((0.0, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 8.0), (8.0, 16.0), (16.0, 50.0))
KEY_BANDS = ((0.0, 0.5), (0.5, 1.0), (1.0, 2.0), (2.0, 4.0), (4.0, 10.0))
SPEED_LEVELS = (200.0, 800.0, 2000.0)  # px/s edges between non-idle speed symbols
SAMPEN = complexity.SampEnParams()

_MASK64 = (1 << 64) - 1


def _mix64(x: int) -> int:
    # splitmix64 finaliser: stable per-key hash for held-set symbols
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    extractor: str
    params: tuple[tuple[str, object], ...]
    hardware: str
    type: str
    context: str
    default: float = 0.0

    def group(self, scheme: str) -> str:
        return getattr(self, scheme)


@dataclass(frozen=True)
class FeatureCatalog:
    entries: tuple[FeatureSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate feature names: {dup}")
        for e in self.entries:
            for scheme, groups in SCHEMES.items():
                g = e.group(scheme)
                allowed = groups + ((UNGROUPED,) if scheme != "context" else ())
                if g not in allowed:
                    raise ValueError(f"{e.name}: {g!r} is not a {scheme} group")
            if e.extractor not in EXTRACTORS:
                raise ValueError(f"{e.name}: unknown extractor {e.extractor!r}")

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def group_counts(self) -> dict[str, dict[str, int]]:
        out = {}
        for scheme, groups in SCHEMES.items():
            counts = dict.fromkeys(groups + ((UNGROUPED,) if scheme != "context" else ()), 0)
            for e in self.entries:
                counts[e.group(scheme)] += 1
            out[scheme] = counts
        return out

    def names_in(self, scheme: str, group: str) -> list[str]:
        _check_group(scheme, group)
        return [e.name for e in self.entries if e.group(scheme) == group]


@dataclass(frozen=True)
class FeatureVector:
    values: Mapping[str, float]
    window_s: float
    game_id: int
    player_id: int = -1

    def as_array(self, names: Sequence[str]) -> np.ndarray:
        return np.array([self.values[n] for n in names], dtype=float)


# --------------------------------------------------------------------------
# Derived per-window data
# --------------------------------------------------------------------------


class WindowView:
    """Lazily derived input streams of one (already sliced) game log."""

    def __init__(self, log: GameLog):
        self.log = log
        self.ev = log.events
        self.window_ms = float(log.meta.window_ms)
        self.window_s = self.window_ms / 1000.0

    # raw rows ----------------------------------------------------------
    @cached_property
    def key_rows(self) -> np.ndarray:
        return np.flatnonzero(self.ev.kind == KIND_KEY)

    @cached_property
    def button_rows(self) -> np.ndarray:
        return np.flatnonzero(self.ev.kind == KIND_BUTTON)

    @cached_property
    def motion_rows(self) -> np.ndarray:
        return np.flatnonzero(self.ev.kind == KIND_MOTION)

    def _rows_for_actions(self, rows: np.ndarray, actions: Iterable[str]) -> np.ndarray:
        codes = [self.ev.action_code(a) for a in actions]
        return rows[np.isin(self.ev.action[rows], codes)]

    def key_group_rows(self, group: str) -> np.ndarray:
        if group == "keys":
            return self.key_rows
        if group == "move":
            return self._rows_for_actions(self.key_rows, MOVEMENT_ACTIONS)
        if group == "buttons":
            return self.button_rows
        if group in BUTTON_ACTIONS:
            return self._rows_for_actions(self.button_rows, (group,))
        return self._rows_for_actions(self.key_rows, (group,))

    def stats(self, group: str) -> dict[str, float]:
        cache = self.__dict__.setdefault("_stats", {})
        if group not in cache:
            rows = self.key_group_rows(group)
            cache[group] = key_stats(
                self.ev.t[rows], self.ev.code[rows], self.ev.state[rows], self.window_ms
            )
        return cache[group]

    # ticks -------------------------------------------------------------
    @cached_property
    def n_ticks(self) -> int:
        # ticks at 0, TICK_MS, ... up to the window end; none for an empty window
        if self.window_ms <= 0:
            return 0
        return int(self.window_ms // TICK_MS) + 1

    def _open_intervals(self, rows: np.ndarray):
        """(start_ms, end_ms, press row); unreleased keys stay open forever."""
        t, code, state = self.ev.t[rows], self.ev.code[rows], self.ev.state[rows]
        open_at: dict[int, tuple[int, int]] = {}
        out = []
        for ti, ci, si, ri in zip(t.tolist(), code.tolist(), state.tolist(), rows.tolist()):
            if si == 1:
                open_at.setdefault(ci, (ti, ri))
            elif ci in open_at:
                t0, r0 = open_at.pop(ci)
                out.append((t0, ti, r0))
        out.extend((t0, math.inf, r0) for t0, r0 in open_at.values())
        out.sort(key=lambda item: item[2])
        return out

    def _tick_span(self, start: float, end: float) -> tuple[int, int]:
        a = int(math.ceil(start / TICK_MS))
        b = self.n_ticks if math.isinf(end) else int(math.ceil(end / TICK_MS))
        return min(a, self.n_ticks), min(b, self.n_ticks)

    def _held_count(self, rows: np.ndarray) -> np.ndarray:
        diff = np.zeros(self.n_ticks + 1, dtype=np.int64)
        for start, end, _ in self._open_intervals(rows):
            a, b = self._tick_span(start, end)
            diff[a] += 1
            diff[b] -= 1
        return np.cumsum(diff)[:-1]

    @cached_property
    def keys_held(self) -> np.ndarray:
        return self._held_count(self.key_rows)

    @cached_property
    def move_held(self) -> np.ndarray:
        return self._held_count(self.key_group_rows("move"))

    @cached_property
    def keys_ticks(self) -> list[int]:
        """Held raw-key set per tick, as an order-free 64-bit hash."""
        acc = np.zeros(self.n_ticks + 1, dtype=np.uint64)
        for start, end, row in self._open_intervals(self.key_rows):
            a, b = self._tick_span(start, end)
            h = np.uint64(_mix64(int(self.ev.code[row])))
            acc[a] ^= h
            acc[b] ^= h
        return np.bitwise_xor.accumulate(acc)[:-1].tolist()

    def _action_bits(self, rows: np.ndarray, actions: Sequence[str]) -> np.ndarray:
        state = np.zeros(self.n_ticks, dtype=np.int64)
        for bit, action in enumerate(actions):
            held = self._held_count(self._rows_for_actions(rows, (action,)))
            state |= (held > 0).astype(np.int64) << bit
        return state

    @cached_property
    def move_state(self) -> np.ndarray:
        return self._action_bits(self.key_rows, MOVEMENT_ACTIONS)

    @cached_property
    def button_ticks(self) -> list[int]:
        acc = np.zeros(self.n_ticks + 1, dtype=np.uint64)
        for start, end, row in self._open_intervals(self.button_rows):
            a, b = self._tick_span(start, end)
            h = np.uint64(_mix64(int(self.ev.code[row])))
            acc[a] ^= h
            acc[b] ^= h
        return np.bitwise_xor.accumulate(acc)[:-1].tolist()

    @cached_property
    def primary_held(self) -> np.ndarray:
        return self._held_count(self._rows_for_actions(self.button_rows, ("primary",)))

    # mouse ------------------------------------------------------------
    @cached_property
    def motion(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = self.motion_rows
        return self.ev.t[r], self.ev.dx[r], self.ev.dy[r]

    def mouse_series(self, hz: float) -> dict[str, np.ndarray]:
        cache = self.__dict__.setdefault("_mouse", {})
        if hz not in cache:
            t, dx, dy = self.motion
            x = resample_displacement(t, dx, self.window_ms, hz)
            y = resample_displacement(t, dy, self.window_ms, hz)
            cache[hz] = {"dx": x, "dy": y, "speed": np.hypot(x, y) * hz}
        return cache[hz]

    @cached_property
    def kinetics(self) -> dict[str, float]:
        t, dx, dy = self.motion
        return kinetics_features(t, dx, dy, self.window_s)

    # symbol streams --------------------------------------------------
    def stream(self, name: str) -> list:
        cache = self.__dict__.setdefault("_streams", {})
        if name not in cache:
            cache[name] = STREAM_BUILDERS[name](self)
        return cache[name]


def _runs(seq) -> list:
    return [s for i, s in enumerate(seq) if i == 0 or s != seq[i - 1]]


def _presses(view: WindowView, rows: np.ndarray, by_action: bool) -> list:
    rows = rows[view.ev.state[rows] == 1]
    if by_action:
        names = view.ev.action_names()[rows]
        return ["none" if a is None else a for a in names.tolist()]
    return view.ev.code[rows].tolist()


def _mouse_dir8(view: WindowView) -> list:
    _, dx, dy = view.motion
    moving = (dx != 0) | (dy != 0)
    ang = np.arctan2(dy[moving], dx[moving])
    return (np.round(ang / (np.pi / 4)).astype(np.int64) % 8).tolist()


def _mouse_speed_levels(view: WindowView) -> list:
    speed = view.mouse_series(1000.0 / TICK_MS)["speed"]
    levels = np.where(speed > 0, 1 + np.searchsorted(SPEED_LEVELS, speed), 0)
    return levels.tolist()


def _activity_ticks(view: WindowView) -> list:
    n = view.n_ticks
    if n == 0:
        return []
    bits = np.zeros(n, dtype=np.int64)
    ev = view.ev
    for bit, rows in ((0, view.key_rows), (1, view.button_rows)):
        rows = rows[ev.state[rows] == 1]
        idx = np.minimum(np.ceil(ev.t[rows] / TICK_MS).astype(np.int64), n - 1)
        mark = np.zeros(n, dtype=bool)
        mark[idx] = True
        bits |= mark.astype(np.int64) << bit
    t, _, _ = view.motion
    idx = np.minimum(np.ceil(t / TICK_MS).astype(np.int64), n - 1)
    mark = np.zeros(n, dtype=bool)
    mark[idx] = True
    bits |= mark.astype(np.int64) << 2
    return bits.tolist()


STREAM_BUILDERS = {
    "keys_ticks": lambda v: v.keys_ticks,
    "keys_runs": lambda v: _runs(v.keys_ticks),
    "keys_presses": lambda v: _presses(v, v.key_rows, False),
    "move_ticks": lambda v: v.move_state.tolist(),
    "move_runs": lambda v: _runs(v.move_state.tolist()),
    "move_presses": lambda v: _presses(v, v.key_group_rows("move"), True),
    "action_presses": lambda v: _presses(v, v.key_rows, True),
    "button_presses": lambda v: _presses(v, v.button_rows, False),
    "button_ticks": lambda v: v.button_ticks,
    "button_action_presses": lambda v: _presses(v, v.button_rows, True),
    "mouse_dir8": _mouse_dir8,
    "mouse_speed_levels": _mouse_speed_levels,
    "mouse_xsign": lambda v: np.sign(v.motion[1]).tolist(),
    "activity_ticks": _activity_ticks,
}


# --------------------------------------------------------------------------
# Extractors
# --------------------------------------------------------------------------


def _x_complexity(view: WindowView, stream: str, measure: str) -> float:
    seq = view.stream(stream)
    if not seq:
        return 0.0
    if measure == "lzw":
        return float(complexity.lzw_code_count(seq))
    if measure == "lzw_rate":
        return complexity.lzw_code_count(seq) / len(seq)
    if measure == "huffman_bits":
        return float(complexity.huffman_bits(seq))
    if measure == "huffman_bps":
        return complexity.huffman_bits(seq) / len(seq)
    if measure == "entropy":
        return complexity.shannon_entropy(seq)
    raise ValueError(f"unknown complexity measure {measure!r}")


def _series(view: WindowView, series: str, hz: float) -> np.ndarray:
    if series == "keys_held":
        return view.keys_held.astype(float)
    if series == "move_held":
        return view.move_held.astype(float)
    return view.mouse_series(hz)[series.removeprefix("mouse_")]


def _x_sampen(view: WindowView, series: str) -> float:
    x = _series(view, series, 1000.0 / TICK_MS)
    if len(x) < SAMPEN.m + 2:
        return math.nan
    return complexity.sample_entropy(x, SAMPEN)


def _x_dft(view: WindowView, series: str, lo: float, hi: float, hz: float) -> float:
    x = _series(view, series, hz)
    if len(x) < 2:
        return math.nan
    return complexity.dft_band_features(x, hz, [(lo, hi)])[(lo, hi)]


def _x_key_stat(view: WindowView, group: str, stat: str) -> float:
    return view.stats(group)[stat]


def _x_movement(view: WindowView, stat: str) -> float:
    state = view.move_state
    fwd, back, left, right = (1, 2, 4, 8)
    if stat.startswith("frac_") and len(state) == 0:
        return 0.0
    if stat == "frac_strafing":
        return float(np.mean((state & (left | right)) != 0))
    if stat == "frac_forward_only":
        return float(np.mean(state == fwd))
    if stat == "frac_diagonal":
        return float(np.mean(((state & (fwd | back)) != 0) & ((state & (left | right)) != 0)))
    if stat in ("strafe_reversals_per_s", "fwd_back_reversals_per_s"):
        pair = ("left", "right") if stat.startswith("strafe") else ("forward", "backward")
        seq = [a for a in view.stream("move_presses") if a in pair]
        flips = sum(1 for a, b in zip(seq, seq[1:]) if a != b)
        return flips / view.window_s if view.window_s > 0 else 0.0
    if stat == "mean_move_run_s":
        moving = state != 0
        if not moving.any():
            return 0.0
        edges = np.diff(np.concatenate([[0], moving.astype(np.int8), [0]]))
        lengths = np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
        return float(lengths.mean()) * TICK_MS / 1000.0
    raise ValueError(f"unknown movement statistic {stat!r}")


def _x_kinetics(view: WindowView, stat: str) -> float:
    return view.kinetics[stat]


def _x_mouse_activity(view: WindowView, stat: str) -> float:
    t, dx, dy = view.motion
    w = view.window_s
    if stat == "motion_events":
        return float(len(t))
    if stat == "motion_events_per_s":
        return len(t) / w if w > 0 else 0.0
    if stat == "bursts_per_s":
        return len(motion_bursts(t)) / w if w > 0 else 0.0
    if stat == "frac_time_moving":
        s = view.mouse_series(1000.0 / TICK_MS)["speed"]
        return float(np.mean(s > 0)) if len(s) else 0.0
    raise ValueError(f"unknown mouse activity statistic {stat!r}")


def _x_combined(view: WindowView, stat: str) -> float:
    w = view.window_s
    if stat == "input_events_per_s":
        ev = view.ev
        n = int(np.count_nonzero(np.isin(ev.kind, (KIND_KEY, KIND_BUTTON, KIND_MOTION))))
        return n / w if w > 0 else 0.0
    if stat == "keys_per_click":
        return view.stats("keys")["presses"] / max(view.stats("buttons")["presses"], 1.0)
    speed = view.mouse_series(1000.0 / TICK_MS)["speed"]
    n = min(len(speed), view.n_ticks)
    if stat == "mouse_speed_while_firing":
        sel = view.primary_held[:n] > 0
    elif stat == "mouse_speed_while_moving":
        sel = view.move_held[:n] > 0
    elif stat == "frac_firing_while_moving":
        moving = view.move_held > 0
        return float(np.mean(view.primary_held[moving] > 0)) if moving.any() else 0.0
    else:
        raise ValueError(f"unknown combined statistic {stat!r}")
    return float(speed[:n][sel].mean()) if sel.any() else 0.0


EXTRACTORS = {
    "complexity": _x_complexity,
    "sampen": _x_sampen,
    "dft_band": _x_dft,
    "key_stat": _x_key_stat,
    "movement": _x_movement,
    "kinetics": _x_kinetics,
    "mouse_activity": _x_mouse_activity,
    "combined": _x_combined,
}


# --------------------------------------------------------------------------
# Default catalog
# --------------------------------------------------------------------------

_STREAM_GROUPS = {
    "keys_ticks": ("Keyboard", "ContextFree"),
    "keys_runs": ("Keyboard", "ContextFree"),
    "keys_presses": ("Keyboard", "ContextFree"),
    "move_ticks": ("Keyboard", "Dependent"),
    "move_runs": ("Keyboard", "Dependent"),
    "move_presses": ("Keyboard", "Dependent"),
    "action_presses": ("Keyboard", "Dependent"),
    "button_presses": ("Clicks", "ContextFree"),
    "button_ticks": ("Clicks", "ContextFree"),
    "button_action_presses": ("Clicks", "Dependent"),
    "mouse_dir8": ("Mouse", "ContextFree"),
    "mouse_speed_levels": ("Mouse", "ContextFree"),
    "mouse_xsign": ("Mouse", "ContextFree"),
    "activity_ticks": (UNGROUPED, "ContextFree"),
}
_ALL_MEASURES = ("lzw", "lzw_rate", "huffman_bits", "huffman_bps", "entropy")
_CLICK_MEASURES = ("lzw", "huffman_bps", "entropy")


def _band_label(lo: float, hi: float) -> str:
    return f"{lo:g}-{hi:g}hz"


def default_catalog() -> FeatureCatalog:
    entries: list[FeatureSpec] = []

    def add(name, extractor, hardware, type_, context, **params):
        entries.append(
            FeatureSpec(name, extractor, tuple(sorted(params.items())), hardware, type_, context)
        )

    for stream, (hw, ctx) in _STREAM_GROUPS.items():
        measures = _CLICK_MEASURES if hw == "Clicks" else _ALL_MEASURES
        for m in measures:
            add(f"{stream}_{m}", "complexity", hw, "Complexity", ctx, stream=stream, measure=m)

    add("keys_held_sampen", "sampen", "Keyboard", "Complexity", "ContextFree", series="keys_held")
    add("move_held_sampen", "sampen", "Keyboard", "Complexity", "Dependent", series="move_held")
    for s in ("mouse_dx", "mouse_dy", "mouse_speed"):
        add(f"{s}_sampen", "sampen", "Mouse", "Complexity", "ContextFree", series=s)
    for s in ("mouse_dx", "mouse_dy", "mouse_speed"):
        for lo, hi in MOUSE_BANDS:
            add(f"{s}_dft_{_band_label(lo, hi)}", "dft_band", "Mouse", "Complexity", "ContextFree",
                series=s, lo=lo, hi=hi, hz=DFT_HZ)
    for lo, hi in KEY_BANDS:
        add(f"keys_held_dft_{_band_label(lo, hi)}", "dft_band", "Keyboard", "Complexity", "ContextFree",
            series="keys_held", lo=lo, hi=hi, hz=1000.0 / TICK_MS)

    for stat in ("presses", "presses_per_s", "mean_hold_s", "std_hold_s", "max_hold_s", "mean_held",
                 "max_held", "time_2plus_s", "time_3plus_s", "frac_2plus", "mean_gap_s", "std_gap_s"):
        add(f"keys_{stat}", "key_stat", "Keyboard", "EventFrequency", "ContextFree", group="keys", stat=stat)
    add("keys_distinct", "key_stat", "Keyboard", UNGROUPED, "ContextFree", group="keys", stat="distinct")
    for action in KEY_ACTIONS:
        for stat in ("presses_per_s", "mean_hold_s", "frac_held"):
            add(f"action_{action}_{stat}", "key_stat", "Keyboard", "EventFrequency", "Dependent",
                group=action, stat=stat)
    for stat in ("presses_per_s", "mean_held", "time_2plus_s"):
        add(f"move_{stat}", "key_stat", "Keyboard", "EventFrequency", "Dependent", group="move", stat=stat)
    add("move_frac_time_moving", "key_stat", "Keyboard", "Kinetics", "Dependent", group="move", stat="frac_held")
    for stat in ("frac_strafing", "frac_forward_only", "frac_diagonal", "strafe_reversals_per_s",
                 "fwd_back_reversals_per_s", "mean_move_run_s"):
        add(f"move_{stat}", "movement", "Keyboard", "Kinetics", "Dependent", stat=stat)

    for stat in ("presses", "presses_per_s", "mean_hold_s", "max_hold_s", "mean_gap_s"):
        add(f"clicks_{stat}", "key_stat", "Clicks", "EventFrequency", "ContextFree", group="buttons", stat=stat)
    for action, stat in (("primary", "presses_per_s"), ("primary", "frac_held"), ("secondary", "presses_per_s")):
        add(f"clicks_{action}_{stat}", "key_stat", "Clicks", "EventFrequency", "Dependent", group=action, stat=stat)

    for stat in ("motion_events", "motion_events_per_s", "bursts_per_s", "frac_time_moving"):
        add(f"mouse_{stat}", "mouse_activity", "Mouse", "EventFrequency", "ContextFree", stat=stat)
    for stat in KINETICS_NAMES:
        add(f"mouse_{stat}", "kinetics", "Mouse", "Kinetics", "ContextFree", stat=stat)

    add("input_events_per_s", "combined", UNGROUPED, "EventFrequency", "ContextFree", stat="input_events_per_s")
    add("keys_per_click", "combined", UNGROUPED, UNGROUPED, "ContextFree", stat="keys_per_click")
    add("mouse_speed_while_firing", "combined", UNGROUPED, "Kinetics", "Dependent", stat="mouse_speed_while_firing")
    add("mouse_speed_while_moving", "combined", UNGROUPED, "Kinetics", "Dependent", stat="mouse_speed_while_moving")
    add("frac_firing_while_moving", "combined", UNGROUPED, UNGROUPED, "Dependent", stat="frac_firing_while_moving")
    return FeatureCatalog(tuple(entries))


# --------------------------------------------------------------------------
# Extraction and filtering
# --------------------------------------------------------------------------


def evaluate(spec: FeatureSpec, view: WindowView) -> float:
    """One catalog entry on one window; degenerate input gives the default."""
    try:
        value = EXTRACTORS[spec.extractor](view, **dict(spec.params))
    except (ValueError, ZeroDivisionError, FloatingPointError):
        return spec.default
    value = float(value)
    return value if math.isfinite(value) else spec.default


def extract_features(log: GameLog, cat: FeatureCatalog, t_end: float) -> FeatureVector:
    """All catalog features over the first ``t_end`` seconds of ``log``."""
    sliced = slice_window(log, t_end)
    view = WindowView(sliced)
    with np.errstate(all="ignore"):
        values = {e.name: evaluate(e, view) for e in cat.entries}
    return FeatureVector(values, view.window_s, log.meta.game_id, log.meta.player_id)


def _check_group(scheme: str, group: str) -> None:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown grouping scheme {scheme!r}; expected one of {sorted(SCHEMES)}")
    allowed = SCHEMES[scheme] + ((UNGROUPED,) if scheme != "context" else ())
    if group not in allowed:
        raise ValueError(f"{group!r} is not a group of scheme {scheme!r}; expected one of {allowed}")


def group_filter(v: FeatureVector, cat: FeatureCatalog, scheme: str, group: str) -> FeatureVector:
    keep = set(cat.names_in(scheme, group))
    values = {k: x for k, x in v.values.items() if k in keep}
    return FeatureVector(values, v.window_s, v.game_id, v.player_id)


def parse_group(text: str | None) -> tuple[str, str] | None:
    """Parse a ``scheme:group`` selector such as ``hardware:Keyboard``."""
    if not text:
        return None
    scheme, sep, group = text.partition(":")
    if not sep:
        raise ValueError(f"group selector must look like scheme:group, got {text!r}")
    _check_group(scheme, group)
    return scheme, group


# --------------------------------------------------------------------------
# Export
# --------------------------------------------------------------------------


def catalog_json(cat: FeatureCatalog) -> str:
    doc = {
        "tick_ms": TICK_MS,
        "sampen": {"m": SAMPEN.m, "r_tol": SAMPEN.r_tol},
        "counts": cat.group_counts(),
        "features": [
            {
                "name": e.name,
                "extractor": e.extractor,
                "params": dict(e.params),
                "groups": {"hardware": e.hardware, "type": e.type, "context": e.context},
                "default": e.default,
            }
            for e in cat.entries
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def feature_matrix_csv(vectors: Iterable[FeatureVector], names: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["game_id", "player_id", "window_s", *names])
    for v in vectors:
        w.writerow([v.game_id, v.player_id, repr(v.window_s), *(repr(v.values[n]) for n in names)])
    return buf.getvalue()


@dataclass
class FeatureTable:
    """Feature vectors of many games for one window, as a matrix."""

    names: list[str]
    game_ids: list[int]
    player_ids: list[int]
    X: np.ndarray
    window_s: list[float] = field(default_factory=list)


def feature_table(vectors: Sequence[FeatureVector], names: Sequence[str]) -> FeatureTable:
    names = list(names)
    X = np.array([v.as_array(names) for v in vectors], dtype=float).reshape(len(vectors), len(names))
    return FeatureTable(
        names, [v.game_id for v in vectors], [v.player_id for v in vectors], X, [v.window_s for v in vectors]
    )
