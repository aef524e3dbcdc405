import math

import numpy as np
import pytest

from conftest import button, key, make_log, motion
from skillcap.features.inputs import (
    event_frequency_features, hold_intervals, key_stats, kinetics_features, motion_bursts, overlap_profile,
    resample_displacement, turn_angles,
)

P, R = 1, 0


def test_hold_intervals_pairing_rules():
    # key 1: press, repeat press, release; key 2: stray release then open press
    t = np.array([0, 100, 300, 350, 400])
    code = np.array([1, 1, 1, 2, 2])
    state = np.array([P, P, R, R, P])
    s, e, rows = hold_intervals(t, code, state, 1000)
    assert s.tolist() == [0, 400] and e.tolist() == [300, 1000] and rows.tolist() == [0, 4]


def test_overlap_profile_against_sampling():
    rng = np.random.default_rng(5)
    starts = rng.uniform(0, 900, 12)
    ends = starts + rng.uniform(0, 300, 12)
    dur, cnt = overlap_profile(starts, ends, 1000.0)
    assert dur.sum() == pytest.approx(1000.0)
    # compare with a fine grid sample at segment midpoints
    edges = np.concatenate([[0], np.cumsum(dur)])
    for (a, b), c in zip(zip(edges[:-1], edges[1:]), cnt):
        if b - a > 1e-9:
            mid = 0.5 * (a + b)
            assert c == np.sum((starts <= mid) & (np.minimum(ends, 1000) > mid))


def test_key_stats_hand_computed():
    # two keys: [0, 400) and [200, 600), window 1000 ms
    t = np.array([0, 200, 400, 600])
    code = np.array([1, 2, 1, 2])
    state = np.array([P, P, R, R])
    ks = key_stats(t, code, state, 1000.0)
    assert ks["presses"] == 2 and ks["presses_per_s"] == 2.0
    assert ks["mean_hold_s"] == pytest.approx(0.4)
    assert ks["mean_held"] == pytest.approx(0.8)
    assert ks["time_2plus_s"] == pytest.approx(0.2)
    assert ks["frac_held"] == pytest.approx(0.6)
    assert ks["max_held"] == 2 and ks["distinct"] == 2
    assert ks["mean_gap_s"] == pytest.approx(0.2)


def test_key_stats_empty():
    z = np.zeros(0, dtype=np.int64)
    ks = key_stats(z, z, z, 1000.0)
    assert all(v == 0.0 for v in ks.values())


def test_event_frequency_features():
    log = make_log([
        key(0, 119, "pressed", "forward"), key(500, 119, "released", "forward"),
        button(100, 1, "pressed"), button(150, 1, "released"),
        motion(200, 3, 4), motion(210, 3, 4),
    ])
    f = event_frequency_features(log.events, 2.0)
    assert f["key_presses_per_s"] == 0.5 and f["clicks_per_s"] == 0.5 and f["motion_events_per_s"] == 1.0
    assert f["mean_key_hold_s"] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        event_frequency_features(log.events, 0)


@pytest.mark.parametrize("theta", [0.1, 0.5, 1.2, 2.5])
def test_turn_angle_polygon_spiral(theta):
    # constant step rotated by theta each sample turns by exactly theta
    k = np.arange(40)
    r = 5.0 + 0.5 * k  # growing radius: a spiral, direction still turns by theta
    dx, dy = r * np.cos(k * theta), r * np.sin(k * theta)
    angles = turn_angles(dx, dy)
    assert np.allclose(angles, theta)
    f = kinetics_features(k * 10.0, dx, dy, window_s=1.0)
    assert f["mean_turn_angle"] == pytest.approx(theta)
    assert f["std_turn_angle"] == pytest.approx(0.0, abs=1e-9)
    assert f["path_length"] == pytest.approx(r.sum())


def test_turn_angles_skip_zero_steps():
    assert turn_angles(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])) == pytest.approx([math.pi / 2])


def test_kinetics_straight_line():
    t = np.arange(10) * 10.0
    f = kinetics_features(t, np.full(10, 3.0), np.full(10, 4.0), window_s=1.0)
    assert f["straightness"] == pytest.approx(1.0)
    assert f["mean_speed"] == pytest.approx(500.0)
    assert f["mean_acceleration"] == pytest.approx(0.0)
    assert f["horizontal_share"] == pytest.approx(3 / 7)
    assert f["x_direction_changes"] == 0
    assert kinetics_features([], [], []) == dict.fromkeys(f, 0.0)


def test_motion_bursts():
    assert motion_bursts(np.array([0, 10, 20, 200, 210, 500])) == [(0, 3), (3, 5), (5, 6)]
    assert motion_bursts(np.zeros(0)) == []


def test_resample_preserves_total_displacement():
    t = np.array([5.0, 12.0, 12.0, 30.0, 77.0])
    d = np.array([1.0, 2.0, 3.0, -1.0, 4.0])
    out = resample_displacement(t, d, 100.0, 100.0)
    assert len(out) == 10
    assert out.sum() == pytest.approx(d.sum())
    assert resample_displacement(t, d, 5.0, 100.0).size == 0
