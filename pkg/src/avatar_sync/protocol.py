"""Wire message schema and its canonical newline-delimited JSON encoding.

One envelope per line, UTF-8, LF-terminated, keys sorted, compact
separators: encoding the same envelope twice yields identical bytes, so
session logs are byte-comparable. Clients send ``seq=0``; only the server
assigns sequence numbers. Decoders ignore unknown extra fields but reject
unknown tags. The machine-readable schema ships at ``protocol/schema.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Optional, Union

from .errors import BadType, MalformedJson, MissingField, UnknownTag
from .model import (
    DANCES,
    MINIGAME_KINDS,
    SWIPE_DIRECTIONS,
    AvatarState,
    GameMode,
    GestureEvent,
    RawTaps,
    Swipe,
    TapBurst,
    outcome_from_wire,
    outcome_to_wire,
)

WIRE_VERSION = 1
SERVER_SENDER = "server"


# ---------------------------------------------------------------------------
# payload variants


@dataclass(frozen=True)
class Join:
    display_name: str = ""


@dataclass(frozen=True)
class Leave:
    pass


@dataclass(frozen=True)
class Gesture:
    gesture: GestureEvent


@dataclass(frozen=True)
class SelectMode:
    mode: GameMode


@dataclass(frozen=True)
class StartMinigame:
    kind: str


@dataclass(frozen=True)
class MinigameInput:
    input: dict


@dataclass(frozen=True)
class Ping:
    pass


@dataclass(frozen=True)
class Pong:
    pass


@dataclass(frozen=True)
class Welcome:
    player_id: str
    color: str


@dataclass(frozen=True)
class PlayerJoined:
    player_id: str
    color: str


@dataclass(frozen=True)
class PlayerLeft:
    player_id: str


@dataclass(frozen=True)
class ModeChanged:
    mode: GameMode
    actor_color: Optional[str] = None


@dataclass(frozen=True)
class ActionBroadcast:
    actor_color: str
    outcome: dict  # wire form of an ActionOutcome
    points: int


@dataclass(frozen=True)
class AvatarUpdate:
    animation: dict  # wire form of an outcome, or {"kind": "idle"}
    facing: Optional[str]


@dataclass(frozen=True)
class ScoreUpdate:
    total: int


@dataclass(frozen=True)
class MissionComplete:
    final_total: int


@dataclass(frozen=True)
class MinigameUpdate:
    snapshot: dict


@dataclass(frozen=True)
class Notification:
    actor_color: str
    text: str


@dataclass(frozen=True)
class ErrorReply:
    code: str
    text: str


Message = Union[
    Join,
    Leave,
    Gesture,
    SelectMode,
    StartMinigame,
    MinigameInput,
    Ping,
    Pong,
    Welcome,
    PlayerJoined,
    PlayerLeft,
    ModeChanged,
    ActionBroadcast,
    AvatarUpdate,
    ScoreUpdate,
    MissionComplete,
    MinigameUpdate,
    Notification,
    ErrorReply,
]

CLIENT_TAGS = frozenset(
    {"join", "leave", "gesture", "select_mode", "start_minigame", "minigame_input"}
)


@dataclass(frozen=True)
class Envelope:
    """The unit of synchronization: everything on the wire is one of these."""

    seq: int
    room_id: str
    sender: str  # player id, or "server"
    sent_at: int  # milliseconds since epoch
    payload: Message


def avatar_update_for(avatar: AvatarState) -> AvatarUpdate:
    return AvatarUpdate(
        animation=outcome_to_wire(avatar.animation), facing=avatar.facing
    )


# ---------------------------------------------------------------------------
# encoding

_TAGS = {
    Join: "join",
    Leave: "leave",
    Gesture: "gesture",
    SelectMode: "select_mode",
    StartMinigame: "start_minigame",
    MinigameInput: "minigame_input",
    Ping: "ping",
    Pong: "pong",
    Welcome: "welcome",
    PlayerJoined: "player_joined",
    PlayerLeft: "player_left",
    ModeChanged: "mode_changed",
    ActionBroadcast: "action_broadcast",
    AvatarUpdate: "avatar_update",
    ScoreUpdate: "score_update",
    MissionComplete: "mission_complete",
    MinigameUpdate: "minigame_update",
    Notification: "notification",
    ErrorReply: "error_reply",
}


def _gesture_to_wire(g: GestureEvent) -> dict:
    if isinstance(g, TapBurst):
        return {"kind": "tap_burst", "taps": g.count}
    if isinstance(g, Swipe):
        return {"kind": "swipe", "direction": g.direction}
    if isinstance(g, RawTaps):
        return {"kind": "raw_taps", "timestamps_ms": list(g.timestamps_ms)}
    raise TypeError(f"not a gesture: {g!r}")


def payload_to_wire(payload: Message) -> dict:
    tag = _TAGS.get(type(payload))
    if tag is None:
        raise TypeError(f"not a message: {payload!r}")
    obj: dict = {"tag": tag}
    if isinstance(payload, Gesture):
        obj["gesture"] = _gesture_to_wire(payload.gesture)
        return obj
    for f in fields(payload):
        value = getattr(payload, f.name)
        if isinstance(value, GameMode):
            value = value.value
        obj[f.name] = value
    return obj


def encode_envelope(env: Envelope) -> bytes:
    """Canonical single-line encoding; safe to append to a byte-comparable log."""
    obj = {
        "v": WIRE_VERSION,
        "seq": env.seq,
        "room_id": env.room_id,
        "sender": env.sender,
        "sent_at": env.sent_at,
        "payload": payload_to_wire(env.payload),
    }
    return (
        json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        + "\n"
    ).encode("utf-8")


# ---------------------------------------------------------------------------
# decoding

def _need(obj: dict, name: str):
    if name not in obj:
        raise MissingField(name)
    return obj[name]


def _need_str(obj: dict, name: str) -> str:
    value = _need(obj, name)
    if not isinstance(value, str):
        raise BadType(name, "expected string")
    return value


def _need_int(obj: dict, name: str) -> int:
    value = _need(obj, name)
    if not isinstance(value, int) or isinstance(value, bool):
        raise BadType(name, "expected integer")
    return value


def _need_dict(obj: dict, name: str) -> dict:
    value = _need(obj, name)
    if not isinstance(value, dict):
        raise BadType(name, "expected object")
    return value


def _opt_str(obj: dict, name: str) -> Optional[str]:
    value = _need(obj, name)
    if value is None:
        return None
    if not isinstance(value, str):
        raise BadType(name, "expected string or null")
    return value


def _decode_gesture(obj: dict) -> GestureEvent:
    kind = _need_str(obj, "kind")
    if kind == "tap_burst":
        taps = _need_int(obj, "taps")
        if taps < 1:
            raise BadType("taps", "must be >= 1")
        return TapBurst(taps)
    if kind == "swipe":
        direction = _need_str(obj, "direction")
        if direction not in SWIPE_DIRECTIONS:
            raise BadType("direction", f"must be one of {SWIPE_DIRECTIONS}")
        return Swipe(direction)
    if kind == "raw_taps":
        stamps = _need(obj, "timestamps_ms")
        if (
            not isinstance(stamps, list)
            or not stamps
            or not all(isinstance(t, int) and not isinstance(t, bool) for t in stamps)
        ):
            raise BadType("timestamps_ms", "expected non-empty list of integers")
        return RawTaps(tuple(stamps))
    raise BadType("kind", f"unknown gesture kind {kind!r}")


def _decode_mode(obj: dict, name: str = "mode") -> GameMode:
    raw = _need_str(obj, name)
    try:
        return GameMode(raw)
    except ValueError:
        raise BadType(name, f"unknown mode {raw!r}") from None


def _decode_outcome_obj(obj: dict, name: str, allow_idle: bool) -> dict:
    value = _need_dict(obj, name)
    kind = value.get("kind")
    if kind == "idle":
        if allow_idle:
            return {"kind": "idle"}
        raise BadType(name, "idle is not an action outcome")
    try:
        wire = outcome_to_wire(outcome_from_wire(value))
    except (ValueError, KeyError, TypeError):
        raise BadType(name, "not a valid outcome") from None
    if wire["kind"] in ("dance", "small_chaos"):
        token = wire.get("name") or wire.get("chosen")
        if token not in DANCES:
            raise BadType(name, f"unknown dance {token!r}")
    return wire


def _decode_payload(obj: dict) -> Message:
    tag = _need_str(obj, "tag")
    if tag == "join":
        name = obj.get("display_name", "")
        if not isinstance(name, str):
            raise BadType("display_name", "expected string")
        return Join(display_name=name)
    if tag == "leave":
        return Leave()
    if tag == "gesture":
        return Gesture(gesture=_decode_gesture(_need_dict(obj, "gesture")))
    if tag == "select_mode":
        return SelectMode(mode=_decode_mode(obj))
    if tag == "start_minigame":
        kind = _need_str(obj, "kind")
        if kind not in MINIGAME_KINDS:
            raise BadType("kind", f"must be one of {MINIGAME_KINDS}")
        return StartMinigame(kind=kind)
    if tag == "minigame_input":
        return MinigameInput(input=_need_dict(obj, "input"))
    if tag == "ping":
        return Ping()
    if tag == "pong":
        return Pong()
    if tag == "welcome":
        return Welcome(player_id=_need_str(obj, "player_id"), color=_need_str(obj, "color"))
    if tag == "player_joined":
        return PlayerJoined(
            player_id=_need_str(obj, "player_id"), color=_need_str(obj, "color")
        )
    if tag == "player_left":
        return PlayerLeft(player_id=_need_str(obj, "player_id"))
    if tag == "mode_changed":
        return ModeChanged(mode=_decode_mode(obj), actor_color=_opt_str(obj, "actor_color"))
    if tag == "action_broadcast":
        outcome = _decode_outcome_obj(obj, "outcome", allow_idle=False)
        return ActionBroadcast(
            actor_color=_need_str(obj, "actor_color"),
            outcome=outcome,
            points=_need_int(obj, "points"),
        )
    if tag == "avatar_update":
        return AvatarUpdate(
            animation=_decode_outcome_obj(obj, "animation", allow_idle=True),
            facing=_opt_str(obj, "facing"),
        )
    if tag == "score_update":
        return ScoreUpdate(total=_need_int(obj, "total"))
    if tag == "mission_complete":
        return MissionComplete(final_total=_need_int(obj, "final_total"))
    if tag == "minigame_update":
        return MinigameUpdate(snapshot=_need_dict(obj, "snapshot"))
    if tag == "notification":
        return Notification(
            actor_color=_need_str(obj, "actor_color"), text=_need_str(obj, "text")
        )
    if tag == "error_reply":
        return ErrorReply(code=_need_str(obj, "code"), text=_need_str(obj, "text"))
    raise UnknownTag(tag)


def decode_line(line: Union[bytes, str]) -> Envelope:
    """Decode one newline-delimited frame into an envelope.

    Raises MalformedJson / UnknownTag / MissingField / BadType; never
    returns a partially-filled envelope.
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"invalid UTF-8: {exc}") from None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from None
    if not isinstance(obj, dict):
        raise MalformedJson("expected a JSON object")
    version = _need_int(obj, "v")
    if version != WIRE_VERSION:
        raise BadType("v", f"unsupported version {version}")
    return Envelope(
        seq=_need_int(obj, "seq"),
        room_id=_need_str(obj, "room_id"),
        sender=_need_str(obj, "sender"),
        sent_at=_need_int(obj, "sent_at"),
        payload=_decode_payload(_need_dict(obj, "payload")),
    )
