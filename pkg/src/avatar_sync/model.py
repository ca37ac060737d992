"""Domain vocabulary shared by the wire protocol and the room reducer."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


class GameMode(str, Enum):
    TOQUES = "toques"
    HISTORIA_AVATAR = "historia_avatar"
    HISTORIA_SURPRESA = "historia_surpresa"


# Canonical dance tokens, in the order a 1/2/3-tap burst selects them.
DANCES = ("macarena", "samba", "move_it", "twist")

SWIPE_DIRECTIONS = ("up", "down", "left", "right")

# One color per room slot, assigned in order on join; 8 slots = room capacity.
PALETTE = (
    "#E6194B",
    "#3CB44B",
    "#FFE119",
    "#4363D8",
    "#F58231",
    "#911EB4",
    "#42D4F4",
    "#F032E6",
)

MINIGAME_KINDS = ("hidden_objects", "quiz", "word")


@dataclass(frozen=True)
class TapBurst:
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("tap burst needs at least one tap")


@dataclass(frozen=True)
class Swipe:
    direction: str

    def __post_init__(self):
        if self.direction not in SWIPE_DIRECTIONS:
            raise ValueError(f"bad swipe direction: {self.direction!r}")


@dataclass(frozen=True)
class RawTaps:
    """Unaggregated tap timestamps; the server classifies them into a burst."""

    timestamps_ms: tuple[int, ...]


GestureEvent = Union[TapBurst, Swipe, RawTaps]


@dataclass(frozen=True)
class Dance:
    name: str

    def __post_init__(self):
        if self.name not in DANCES:
            raise ValueError(f"unknown dance: {self.name!r}")


@dataclass(frozen=True)
class SmallChaos:
    chosen: str

    def __post_init__(self):
        if self.chosen not in DANCES:
            raise ValueError(f"unknown dance: {self.chosen!r}")


@dataclass(frozen=True)
class Chaos:
    track: str = "Axel F"


ActionOutcome = Union[Dance, SmallChaos, Chaos]


@dataclass
class AvatarState:
    """What the shared avatar is doing and whom it is turned toward."""

    animation: Optional[ActionOutcome] = None  # None = idle
    facing: Optional[str] = None  # player id


@dataclass(frozen=True)
class Player:
    id: str
    color: str
    joined_at_seq: int
    display_name: str = ""


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    rot_deg: float


def outcome_to_wire(outcome: Optional[ActionOutcome]) -> dict:
    if outcome is None:
        return {"kind": "idle"}
    if isinstance(outcome, Dance):
        return {"kind": "dance", "name": outcome.name}
    if isinstance(outcome, SmallChaos):
        return {"kind": "small_chaos", "chosen": outcome.chosen}
    if isinstance(outcome, Chaos):
        return {"kind": "chaos", "track": outcome.track}
    raise TypeError(f"not an outcome: {outcome!r}")


def outcome_from_wire(obj: dict) -> Optional[ActionOutcome]:
    kind = obj.get("kind")
    if kind == "idle":
        return None
    if kind == "dance":
        return Dance(obj["name"])
    if kind == "small_chaos":
        return SmallChaos(obj["chosen"])
    if kind == "chaos":
        return Chaos(obj["track"])
    raise ValueError(f"unknown outcome kind: {kind!r}")
