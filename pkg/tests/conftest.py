"""Shared fixtures: a small handmade config and helpers to drive the reducer."""

from __future__ import annotations

from pathlib import Path

import pytest

from avatar_sync.model import GameMode, Pose
from avatar_sync.narrative import (
    HiddenObjectsLayout,
    NarrativeConfig,
    QuizQuestion,
    SceneObject,
    Tolerance,
    load_config,
)
from avatar_sync.protocol import Envelope, Join, SelectMode
from avatar_sync.session import BROADCAST, REPLY, apply_event, create_room

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def small_config() -> NarrativeConfig:
    return NarrativeConfig(
        words=("abc", "dado"),
        hidden_objects=HiddenObjectsLayout(
            target_pose=Pose(0.0, 0.0, 0.0),
            objects=(SceneObject("lamp", 10.0, 5.0), SceneObject("book", -3.0, 8.0)),
            tolerance=Tolerance(distance=10.0, rot_deg=15.0),
        ),
        quiz=(
            QuizQuestion("primeira?", ("sim",)),
            QuizQuestion("segunda?", ("dois", "2")),
        ),
        mission_target=20,
    )


@pytest.fixture
def story_config() -> NarrativeConfig:
    return load_config(REPO_ROOT / "story.json")


def envelope(room_id: str, sender: str, payload, sent_at: int = 0) -> Envelope:
    return Envelope(seq=0, room_id=room_id, sender=sender, sent_at=sent_at, payload=payload)


def drive(state, sender, payload, sent_at: int = 0):
    """apply_event with envelope plumbing out of the way."""
    return apply_event(state, envelope(state.room_id, sender, payload, sent_at))


def broadcasts(outs):
    return [o.envelope for o in outs if o.recipient == BROADCAST]


def replies(outs):
    return [o.envelope for o in outs if o.recipient == REPLY]


def payloads(envelopes):
    return [e.payload for e in envelopes]


def room_with_players(config, n: int, room_id: str = "r", seed: int = 1):
    """A room with n auto-named players (p1..pn), still in Toques mode."""
    state = create_room(room_id, config, seed)
    for _ in range(n):
        state, _ = drive(state, "", Join())
    return state


def room_in_mode(config, n: int, mode: GameMode, room_id: str = "r", seed: int = 1):
    state = room_with_players(config, n, room_id, seed)
    state, _ = drive(state, "p1", SelectMode(mode=mode))
    return state
