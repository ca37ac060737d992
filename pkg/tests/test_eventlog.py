"""Event log: append bytes, seed derivation, replay verification."""

from __future__ import annotations

import json

import pytest

from avatar_sync.errors import ReplayMismatch, SeqGap
from avatar_sync.eventlog import (
    EventLog,
    derive_room_seed,
    replay_log,
    room_id_for_log,
)
from avatar_sync.model import GameMode, TapBurst
from avatar_sync.protocol import (
    Envelope,
    Gesture,
    Join,
    Leave,
    SelectMode,
    decode_line,
    encode_envelope,
)
from avatar_sync.session import apply_event, create_room

from conftest import envelope


def test_derive_room_seed_is_stable():
    assert derive_room_seed(7, "w1") == derive_room_seed(7, "w1")
    assert derive_room_seed(7, "w1") != derive_room_seed(7, "w2")
    assert derive_room_seed(7, "w1") != derive_room_seed(8, "w1")
    assert 0 <= derive_room_seed(0, "") < 2**64


def test_room_id_for_log():
    assert room_id_for_log("/var/log/rooms/w1.jsonl") == "w1"
    assert room_id_for_log("w1.jsonl") == "w1"
    assert room_id_for_log("w1") == "w1"


def test_append_writes_canonical_lines(tmp_path):
    path = tmp_path / "r.jsonl"
    envs = [
        envelope("r", "", Join(display_name="Ana")),
        envelope("r", "p1", Gesture(gesture=TapBurst(2)), sent_at=50),
    ]
    with EventLog(path) as log:
        for env in envs:
            log.append(env)
    data = path.read_bytes()
    assert data == b"".join(encode_envelope(e) for e in envs)
    assert [decode_line(line) for line in data.splitlines()] == envs


def test_truncate_versus_append(tmp_path):
    path = tmp_path / "r.jsonl"
    env = envelope("r", "", Join())
    with EventLog(path) as log:
        log.append(env)
    with EventLog(path, truncate=False) as log:
        log.append(env)
    assert path.read_bytes().count(b"\n") == 2
    with EventLog(path) as log:  # default truncates
        log.append(env)
    assert path.read_bytes().count(b"\n") == 1


def _record_session(path, config, room_seed, script):
    """Drive the reducer over `script` and write inputs + outputs like the server."""
    state = create_room(room_id_for_log(path), config, room_seed)
    with EventLog(path) as log:
        for sender, payload, at in script:
            env = Envelope(seq=0, room_id=state.room_id, sender=sender, sent_at=at, payload=payload)
            log.append(env)
            state, outs = apply_event(state, env)
            for out in outs:
                log.append(out.envelope)
            log.flush()
    return state


SCRIPT = [
    ("", Join(display_name="Ana"), 0),
    ("", Join(display_name="Rui"), 100),
    ("p1", SelectMode(mode=GameMode.HISTORIA_AVATAR), 200),
    ("p1", Gesture(gesture=TapBurst(1)), 300),
    ("p2", Gesture(gesture=TapBurst(5)), 400),
    ("p2", Leave(), 500),
    ("p1", Leave(), 600),
]


def test_replay_reproduces_final_state(tmp_path, small_config):
    path = tmp_path / "r.jsonl"
    seed = derive_room_seed(3, "r")
    final = _record_session(path, small_config, seed, SCRIPT)
    replayed, outputs = replay_log(path, small_config, 3)
    assert replayed == final
    assert replayed.snapshot_bytes() == final.snapshot_bytes()
    assert outputs and all(e.sender == "server" for e in outputs)


def test_replay_with_explicit_room_seed(tmp_path, small_config):
    path = tmp_path / "r.jsonl"
    seed = derive_room_seed(3, "r")
    final = _record_session(path, small_config, seed, SCRIPT)
    replayed, _ = replay_log(path, small_config, seed, derive_seed=False)
    assert replayed == final


def test_replay_flags_seq_gap(tmp_path, small_config):
    path = tmp_path / "r.jsonl"
    _record_session(path, small_config, derive_room_seed(3, "r"), SCRIPT)
    lines = path.read_bytes().splitlines(keepends=True)
    # the gesture burst emits back-to-back broadcasts; dropping the first one
    # leaves its sibling with a hole in the numbering
    gesture_seqs = [
        json.loads(ln)["seq"]
        for ln in lines
        if json.loads(ln)["payload"]["tag"] == "action_broadcast"
    ]
    victim = gesture_seqs[0]
    doctored = [ln for ln in lines if json.loads(ln).get("seq") != victim]
    path.write_bytes(b"".join(doctored))
    with pytest.raises(SeqGap) as exc_info:
        replay_log(path, small_config, 3)
    assert exc_info.value.expected == victim
    assert exc_info.value.got == victim + 1


def test_replay_flags_tampered_output(tmp_path, small_config):
    path = tmp_path / "r.jsonl"
    _record_session(path, small_config, derive_room_seed(3, "r"), SCRIPT)
    lines = path.read_bytes().splitlines(keepends=True)
    doctored = []
    for ln in lines:
        obj = json.loads(ln)
        if obj["payload"].get("tag") == "action_broadcast":
            obj["payload"]["points"] = 99
            ln = (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode()
        doctored.append(ln)
    path.write_bytes(b"".join(doctored))
    with pytest.raises(ReplayMismatch):
        replay_log(path, small_config, 3)


def test_replay_flags_missing_outputs_before_next_input(tmp_path, small_config):
    path = tmp_path / "r.jsonl"
    _record_session(path, small_config, derive_room_seed(3, "r"), SCRIPT)
    lines = path.read_bytes().splitlines(keepends=True)
    # drop the seq=0 welcome reply of the first join: the second input then
    # arrives while a regenerated output is still owed
    welcome_at = next(
        i for i, ln in enumerate(lines) if json.loads(ln)["payload"]["tag"] == "welcome"
    )
    del lines[welcome_at]
    path.write_bytes(b"".join(lines))
    with pytest.raises(ReplayMismatch):
        replay_log(path, small_config, 3)


def test_replay_accepts_truncated_tail(tmp_path, small_config):
    """A crash can cut the log mid-delivery; the prefix must still verify."""
    path = tmp_path / "r.jsonl"
    final = _record_session(path, small_config, derive_room_seed(3, "r"), SCRIPT)
    lines = path.read_bytes().splitlines(keepends=True)
    assert json.loads(lines[-1])["sender"] == "server"
    path.write_bytes(b"".join(lines[:-1]))  # lose the last delivered output
    replayed, _ = replay_log(path, small_config, 3)
    assert replayed == final  # the last input was logged, so state still converges


def test_replay_empty_log_is_fresh_room(tmp_path, small_config):
    path = tmp_path / "empty.jsonl"
    path.write_bytes(b"")
    state, outputs = replay_log(path, small_config, 3)
    assert outputs == []
    assert state.players == {} and state.score == 0


def test_replay_wrong_seed_is_caught(tmp_path, small_config):
    """A different seed changes the random draws, and replay refuses the log."""
    path = tmp_path / "r.jsonl"
    # solo player: bursts 3 and 4 sit at ratios 2/1 and 3/1, each a random
    # dance draw, so a wrong seed has to collide twice to slip through
    script = [("", Join(), 0)] + [
        ("p1", Gesture(gesture=TapBurst(5)), 100 * i) for i in range(1, 5)
    ]
    _record_session(path, small_config, derive_room_seed(3, "r"), script)
    hits = 0
    for other_seed in range(4, 12):
        try:
            replay_log(path, small_config, other_seed)
        except ReplayMismatch:
            hits += 1
    assert hits >= 6  # double dance-draw collisions are a ~6% fluke per seed
