"""Event-frequency and kinetic features of raw keyboard and mouse input."""

from __future__ import annotations

import math

import numpy as np

from ..telemetry import KIND_BUTTON, KIND_KEY, KIND_MOTION, EventStream

# Motion samples further apart than this start a new movement burst.
BURST_GAP_MS = 50


def hold_intervals(
    t: np.ndarray, code: np.ndarray, state: np.ndarray, window_ms: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pair presses with releases per key.

    Returns ``(start_ms, end_ms, row)`` where ``row`` indexes the press in
    the given arrays. A repeated press while held is ignored, a release
    without a press is dropped, and a key still held at the end of the
    window is cut off at ``window_ms``.
    """
    open_at: dict[int, tuple[int, int]] = {}
    starts, ends, rows = [], [], []
    for i, (ti, ci, si) in enumerate(zip(t.tolist(), code.tolist(), state.tolist())):
        if si == 1:
            if ci not in open_at:
                open_at[ci] = (ti, i)
        elif ci in open_at:
            t0, row = open_at.pop(ci)
            starts.append(t0)
            ends.append(ti)
            rows.append(row)
    for t0, row in open_at.values():
        starts.append(t0)
        ends.append(max(t0, window_ms))
        rows.append(row)
    order = np.argsort(np.asarray(rows, dtype=np.int64), kind="stable")
    return (
        np.asarray(starts, dtype=float)[order],
        np.asarray(ends, dtype=float)[order],
        np.asarray(rows, dtype=np.int64)[order],
    )


def overlap_profile(starts: np.ndarray, ends: np.ndarray, window_ms: float) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-constant count of simultaneously open intervals on [0, window].

    Returns ``(durations_ms, counts)`` of consecutive segments.
    """
    if window_ms <= 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    s = np.clip(starts, 0, window_ms)
    e = np.clip(ends, 0, window_ms)
    keep = e > s
    times = np.concatenate([[0.0], s[keep], e[keep], [window_ms]])
    deltas = np.concatenate([[0], np.ones(keep.sum(), np.int64), -np.ones(keep.sum(), np.int64), [0]])
    order = np.argsort(times, kind="stable")
    times, deltas = times[order], deltas[order]
    counts = np.cumsum(deltas)[:-1]
    durations = np.diff(times)
    return durations, counts


def _time_at_least(durations: np.ndarray, counts: np.ndarray, k: int) -> float:
    return float(durations[counts >= k].sum())


def key_stats(t: np.ndarray, code: np.ndarray, state: np.ndarray, window_ms: float) -> dict[str, float]:
    """Frequency, hold and simultaneity statistics of one group of keys."""
    window_s = window_ms / 1000.0
    presses = t[state == 1]
    starts, ends, _ = hold_intervals(t, code, state, window_ms)
    holds = (ends - starts) / 1000.0
    durations, counts = overlap_profile(starts, ends, window_ms)
    gaps = np.diff(presses) / 1000.0 if len(presses) > 1 else np.zeros(0)
    out = {
        "presses": float(len(presses)),
        "presses_per_s": len(presses) / window_s if window_s > 0 else 0.0,
        "mean_hold_s": float(holds.mean()) if len(holds) else 0.0,
        "std_hold_s": float(holds.std()) if len(holds) else 0.0,
        "max_hold_s": float(holds.max()) if len(holds) else 0.0,
        "mean_held": float(np.dot(durations, counts) / window_ms) if window_ms > 0 else 0.0,
        "max_held": float(counts.max()) if len(counts) else 0.0,
        "time_2plus_s": _time_at_least(durations, counts, 2) / 1000.0,
        "time_3plus_s": _time_at_least(durations, counts, 3) / 1000.0,
        "frac_2plus": _time_at_least(durations, counts, 2) / window_ms if window_ms > 0 else 0.0,
        "frac_held": _time_at_least(durations, counts, 1) / window_ms if window_ms > 0 else 0.0,
        "distinct": float(len(np.unique(code[state == 1]))),
        "mean_gap_s": float(gaps.mean()) if len(gaps) else 0.0,
        "std_gap_s": float(gaps.std()) if len(gaps) else 0.0,
    }
    return out


def event_frequency_features(events: EventStream, window_s: float) -> dict[str, float]:
    """Headline frequency features over the first ``window_s`` seconds."""
    if not window_s > 0:
        raise ValueError(f"window_s must be positive, got {window_s}")
    window_ms = window_s * 1000.0
    keys = events.kind == KIND_KEY
    buttons = events.kind == KIND_BUTTON
    motion = events.kind == KIND_MOTION
    ks = key_stats(events.t[keys], events.code[keys], events.state[keys], window_ms)
    clicks = int(np.count_nonzero(buttons & (events.state == 1)))
    return {
        "key_presses_per_s": ks["presses_per_s"],
        "clicks_per_s": clicks / window_s,
        "motion_events_per_s": int(np.count_nonzero(motion)) / window_s,
        "mean_key_hold_s": ks["mean_hold_s"],
        "mean_keys_held": ks["mean_held"],
        "time_2plus_keys_s": ks["time_2plus_s"],
    }


def motion_bursts(t: np.ndarray, gap_ms: float = BURST_GAP_MS) -> list[tuple[int, int]]:
    """Index ranges [i, j) of motion samples forming continuous movements."""
    if len(t) == 0:
        return []
    breaks = np.flatnonzero(np.diff(t) > gap_ms) + 1
    edges = np.concatenate([[0], breaks, [len(t)]])
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def _direction_changes(d: np.ndarray) -> int:
    s = np.sign(d[d != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def turn_angles(dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Unsigned angles (radians) between successive non-zero displacements."""
    moving = (dx != 0) | (dy != 0)
    x = np.asarray(dx, dtype=float)[moving]
    y = np.asarray(dy, dtype=float)[moving]
    if len(x) < 2:
        return np.zeros(0)
    cross = x[:-1] * y[1:] - y[:-1] * x[1:]
    dot = x[:-1] * x[1:] + y[:-1] * y[1:]
    return np.abs(np.arctan2(cross, dot))


KINETICS_NAMES = (
    "x_direction_changes",
    "y_direction_changes",
    "x_changes_per_s",
    "mean_turn_angle",
    "std_turn_angle",
    "mean_speed",
    "max_speed",
    "std_speed",
    "mean_acceleration",
    "path_length",
    "straightness",
    "horizontal_share",
    "mean_burst_s",
    "mean_burst_path",
)


def kinetics_features(t_ms, dx, dy, window_s: float | None = None) -> dict[str, float]:
    """Movement statistics of a mouse trace given as per-sample displacements.

    Speeds are in pixels per second and only use samples that follow the
    previous one within one burst gap, since a sample's displacement covers
    the time since the previous sample.
    """
    t = np.asarray(t_ms, dtype=float)
    x = np.asarray(dx, dtype=float)
    y = np.asarray(dy, dtype=float)
    out = dict.fromkeys(KINETICS_NAMES, 0.0)
    if len(t) == 0:
        return out
    step = np.hypot(x, y)
    path = float(step.sum())
    angles = turn_angles(x, y)
    out["x_direction_changes"] = float(_direction_changes(x))
    out["y_direction_changes"] = float(_direction_changes(y))
    if window_s:
        out["x_changes_per_s"] = out["x_direction_changes"] / window_s
    if len(angles):
        out["mean_turn_angle"] = float(angles.mean())
        out["std_turn_angle"] = float(angles.std())
    if len(t) > 1:
        dt = np.diff(t)
        ok = dt <= BURST_GAP_MS
        speed = step[1:][ok] * 1000.0 / np.maximum(dt[ok], 1.0)
        if len(speed):
            out["mean_speed"] = float(speed.mean())
            out["max_speed"] = float(speed.max())
            out["std_speed"] = float(speed.std())
        if len(speed) > 1:
            dts = np.maximum(dt[ok][1:], 1.0) / 1000.0
            out["mean_acceleration"] = float(np.mean(np.abs(np.diff(speed)) / dts))
    out["path_length"] = path
    if path > 0:
        out["straightness"] = float(math.hypot(x.sum(), y.sum()) / path)
        total_abs = float(np.abs(x).sum() + np.abs(y).sum())
        out["horizontal_share"] = float(np.abs(x).sum()) / total_abs
    bursts = motion_bursts(t)
    out["mean_burst_s"] = float(np.mean([(t[b - 1] - t[a]) / 1000.0 for a, b in bursts]))
    out["mean_burst_path"] = float(np.mean([step[a:b].sum() for a, b in bursts]))
    return out


def resample_displacement(t_ms, d, window_ms: float, hz: float) -> np.ndarray:
    """Per-bin displacement on a uniform grid.

    The cumulative displacement (0 at time 0) is linearly interpolated at
    the grid points and differenced.
    """
    step_ms = 1000.0 / hz
    n_bins = int(math.floor(window_ms / step_ms + 1e-9))
    if n_bins <= 0:
        return np.zeros(0)
    t = np.asarray(t_ms, dtype=float)
    d = np.asarray(d, dtype=float)
    grid = np.arange(n_bins + 1) * step_ms
    if len(t) == 0:
        return np.zeros(n_bins)
    cum = np.cumsum(d)
    # last cumulative value per distinct timestamp
    last = np.concatenate([t[1:] != t[:-1], [True]])
    tx, cx = t[last], cum[last]
    if tx[0] > 0:
        tx = np.concatenate([[0.0], tx])
        cx = np.concatenate([[0.0], cx])
    else:
        cx = cx.copy()
    at = np.interp(grid, tx, cx)
    return np.diff(at)
