import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import button, game, key, make_doc, make_log, motion
from skillcap.telemetry import (
    Dataset, EventStream, GameEvent, KeyPress, LogParseError, MouseMotion, SchemaError, load_dataset,
    parse_game_log, select_study_games, serialize_game_log, slice_window, validate, write_dataset,
)


def test_parse_normalizes_time_and_keeps_fields():
    log = make_log([key(100, 119, "pressed", "forward"), motion(105, 3, -2), game(900, "kill", points=1)])
    assert log.meta.duration_ms == 180_000
    assert log.events.t.tolist() == [100, 105, 900]
    ev = list(log.events)
    assert ev[0].payload == KeyPress(119, "pressed", "forward")
    assert ev[1].payload == MouseMotion(3, -2)
    assert ev[2].payload == GameEvent("kill", {"points": 1})
    assert log.meta.scoreboard[2].points == 15


def test_round_trip_is_byte_stable():
    log = make_log([key(5, 97, "pressed", "left"), game(7, "teleport", where="x"), {"t": 9, "type": "chat", "msg": "hi"}])
    text = serialize_game_log(log)
    again = parse_game_log(text)
    assert serialize_game_log(again) == text
    assert again.events == log.events
    # unknown types and kinds survive as "other" game events
    kinds = [e.payload.kind for e in again.events if isinstance(e.payload, GameEvent)]
    assert kinds == ["other", "other"]


def test_events_are_sorted_stably():
    log = make_log([key(50, 1, "pressed"), key(10, 2, "pressed"), key(50, 3, "pressed")])
    assert log.events.t.tolist() == [10, 50, 50]
    assert log.events.code.tolist() == [2, 1, 3]


def test_parse_error_reports_byte_offset():
    text = '{"game_id": 1, "é": ,}'
    with pytest.raises(LogParseError) as info:
        parse_game_log(text)
    # the offending comma sits after a two-byte character
    assert info.value.byte_offset == len('{"game_id": 1, "é": '.encode())


@pytest.mark.parametrize("field", ["game_id", "scoreboard", "map_name", "connect_ms"])
def test_missing_field_is_schema_error(field):
    doc = make_doc()
    del doc[field]
    with pytest.raises(SchemaError) as info:
        parse_game_log(json.dumps(doc))
    assert info.value.field == field


def test_bad_state_and_inverted_bot_range():
    with pytest.raises(SchemaError):
        make_log([{"t": 1, "type": "key", "key": 1, "state": "down"}])
    with pytest.raises(SchemaError):
        make_log(bot_min=80, bot_max=70)


def test_validate_reports_errors_and_gaps():
    log = make_log([key(10, 1, "pressed"), key(20_000, 1, "released"), key(190_000, 2, "pressed")])
    issues = validate(log)
    assert any(i.severity == "warn" and "without events" in i.message for i in issues)
    assert any(i.severity == "error" and "outside game time" in i.message for i in issues)
    missing = make_log(client_number=9)
    assert any("no entry for client 9" in i.message for i in validate(missing))


def test_slice_window():
    log = make_log([key(0, 1, "pressed"), key(999, 1, "released"), key(1000, 2, "pressed"), key(1001, 2, "released")])
    s = slice_window(log, 1.0)
    assert s.events.t.tolist() == [0, 999, 1000]
    assert s.meta.window_ms == 1000
    assert len(slice_window(log, 0).events) == 1
    full = slice_window(log, 1e9)
    assert full.events == log.events and full.meta.window_ms == 180_000
    with pytest.raises(ValueError):
        slice_window(log, -1)


def test_select_study_games():
    games = [make_log(game_id=i, player_id=1, game_number=i) for i in range(20)]
    games += [make_log(game_id=100 + i, player_id=2, game_number=i) for i in range(5)]
    kept = select_study_games(Dataset(tuple(games)), 8, 16)
    assert [g.meta.game_number for g in kept.games] == list(range(16))


def test_duplicate_player_game_rejected():
    a = make_log(game_id=1)
    b = make_log(game_id=2)
    with pytest.raises(ValueError):
        Dataset((a, b))


def test_dataset_files(tmp_path):
    games = tuple(make_log([key(1, 1, "pressed")], game_id=i, game_number=i) for i in range(3))
    write_dataset(Dataset(games), tmp_path)
    (tmp_path / "broken.json").write_text("{")
    data, failures = load_dataset([str(tmp_path)])
    assert [g.meta.game_id for g in data.games] == [0, 1, 2]
    assert len(failures) == 1 and failures[0][0].endswith("broken.json")


def test_fixture_logs_parse():
    here = os.path.join(os.path.dirname(__file__), "fixtures")
    data, failures = load_dataset([here])
    assert not failures
    assert len(data.games) >= 2
    for g in data.games:
        assert not [i for i in validate(g) if i.severity == "error"]


_event = st.one_of(
    st.builds(lambda t, k, s: key(t, k, s, None), st.integers(0, 180_000), st.integers(0, 400), st.sampled_from(["pressed", "released"])),
    st.builds(lambda t, b, s: button(t, b, s), st.integers(0, 180_000), st.integers(1, 5), st.sampled_from(["pressed", "released"])),
    st.builds(motion, st.integers(0, 180_000), st.integers(-500, 500), st.integers(-500, 500)),
    st.builds(lambda t, p: game(t, "kill", points=p), st.integers(0, 180_000), st.integers(-1, 3)),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(_event, max_size=40))
def test_round_trip_property(events):
    log = make_log(events)
    text = serialize_game_log(log)
    again = parse_game_log(text)
    assert again.events == log.events
    assert serialize_game_log(again) == text
    assert np.all(np.diff(again.events.t) >= 0)


def test_event_stream_sequence_protocol():
    log = make_log([key(1, 1, "pressed"), motion(2, 1, 1), key(3, 1, "released")])
    ev = log.events
    assert len(ev) == 3 and ev[-1].timestamp_ms == 3
    assert isinstance(ev[1:], EventStream) and len(ev[1:]) == 2
    assert EventStream.from_events(list(ev)) == ev
