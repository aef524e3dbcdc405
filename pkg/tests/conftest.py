import copy
import json

import pytest

from skillcap.synth import SynthConfig, generate_dataset
from skillcap.telemetry import log_from_dict

CONNECT = 1_361_800_000_000


def make_doc(events=None, **meta):
    """A small valid log document; ``events`` use game-relative times."""
    doc = {
        "game_id": 7,
        "player_id": 3,
        "client_number": 0,
        "game_number": 0,
        "map_name": "wet",
        "bot_min": 60,
        "bot_max": 70,
        "connect_ms": CONNECT,
        "disconnect_ms": CONNECT + 180_000,
        "scoreboard": {"0": {"points": 12, "kills": 10}, "1": {"points": 8, "kills": 8}, "2": {"points": 15, "kills": 14}},
        "date_time": "2013-02-26T14:40:54",
    }
    doc.update(meta)
    evs = []
    for e in events or []:
        e = dict(e)
        e["t"] = e["t"] + doc["connect_ms"]
        evs.append(e)
    doc["events"] = evs
    return doc


def make_log(events=None, **meta):
    return log_from_dict(make_doc(events, **meta))


def key(t, k, state, action=None):
    return {"t": t, "type": "key", "key": k, "state": state, "action": action}


def button(t, b, state, action="primary"):
    return {"t": t, "type": "button", "button": b, "state": state, "action": action}


def motion(t, dx, dy):
    return {"t": t, "type": "motion", "dx": dx, "dy": dy}


def game(t, kind, **attrs):
    return {"t": t, "type": "game", "kind": kind, **attrs}


@pytest.fixture(scope="session")
def small_synth():
    """Two players per archetype, four one-minute games each."""
    return generate_dataset(SynthConfig(players_per_archetype=2, games_per_player=4, duration_s=60.0, seed=11))


@pytest.fixture
def doc():
    return copy.deepcopy(make_doc([key(100, 119, "pressed", "forward"), key(400, 119, "released", "forward")]))


def dumps(doc) -> str:
    return json.dumps(doc)
