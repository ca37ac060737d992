"""Deterministic room logic: one pure reducer drives everything.

``apply_event`` maps (RoomState, incoming envelope) to (new RoomState,
outgoing envelopes) and never touches a clock, socket or global. All
randomness flows through the room's seeded RNG, so equal seed + equal
input sequence = byte-identical output stream. The surrounding server
feeds one event at a time per room; replay feeds the same events back
from the log.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from . import minigames
from .errors import (
    BadInput,
    DuplicatePlayer,
    EmptyInput,
    GameError,
    MinigameAlreadyActive,
    NoMinigame,
    RepeatedLetter,
    RoomFull,
    UnknownPlayer,
    WrongMode,
    ZeroUsers,
)
from .model import (
    DANCES,
    PALETTE,
    ActionOutcome,
    AvatarState,
    Chaos,
    Dance,
    GameMode,
    GestureEvent,
    Player,
    Pose,
    RawTaps,
    SmallChaos,
    Swipe,
    TapBurst,
    outcome_to_wire,
)
from .narrative import NarrativeConfig
from .protocol import (
    ActionBroadcast,
    AvatarUpdate,
    Envelope,
    ErrorReply,
    Gesture,
    Join,
    Leave,
    Message,
    MinigameInput,
    MinigameUpdate,
    MissionComplete,
    ModeChanged,
    Notification,
    Ping,
    PlayerJoined,
    PlayerLeft,
    Pong,
    ScoreUpdate,
    SelectMode,
    SERVER_SENDER,
    StartMinigame,
    Welcome,
    avatar_update_for,
)

ROOM_CAPACITY = len(PALETTE)

# recipient markers for handler output
BROADCAST = "*"
REPLY = "!"


@dataclass(frozen=True)
class Outgoing:
    """One server message plus where it goes: the room or just the sender."""

    recipient: str  # BROADCAST or REPLY
    envelope: Envelope


@dataclass(eq=False)
class RoomState:
    room_id: str
    config: NarrativeConfig
    rng: "GameRng"
    players: dict[str, Player] = field(default_factory=dict)
    mode: GameMode = GameMode.TOQUES
    avatar: AvatarState = field(default_factory=AvatarState)
    score: int = 0
    mission_target: int = 20
    mission_complete: bool = False
    per_player_tap_gestures: dict[str, int] = field(default_factory=dict)
    minigame: Optional[minigames.Minigame] = None
    next_seq: int = 1
    next_player_ordinal: int = 1

    def clone(self) -> "RoomState":
        # config and minigame values are immutable, share them
        return RoomState(
            room_id=self.room_id,
            config=self.config,
            rng=copy.deepcopy(self.rng),
            players=dict(self.players),
            mode=self.mode,
            avatar=AvatarState(self.avatar.animation, self.avatar.facing),
            score=self.score,
            mission_target=self.mission_target,
            mission_complete=self.mission_complete,
            per_player_tap_gestures=dict(self.per_player_tap_gestures),
            minigame=self.minigame,
            next_seq=self.next_seq,
            next_player_ordinal=self.next_player_ordinal,
        )

    def snapshot(self) -> dict:
        """Canonical full-state dict; equal states produce equal JSON bytes."""
        return {
            "room_id": self.room_id,
            "mode": self.mode.value,
            "score": self.score,
            "mission_target": self.mission_target,
            "mission_complete": self.mission_complete,
            "next_seq": self.next_seq,
            "next_player_ordinal": self.next_player_ordinal,
            "players": [
                {
                    "id": p.id,
                    "color": p.color,
                    "joined_at_seq": p.joined_at_seq,
                    "display_name": p.display_name,
                }
                for p in self.players.values()
            ],
            "tap_gestures": dict(sorted(self.per_player_tap_gestures.items())),
            "avatar": {
                "animation": outcome_to_wire(self.avatar.animation),
                "facing": self.avatar.facing,
            },
            "minigame": None if self.minigame is None else minigames.snapshot(self.minigame),
            "rng": self.rng.state_digest(),
        }

    def snapshot_bytes(self) -> bytes:
        return (
            json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":")) + "\n"
        ).encode("utf-8")

    def __eq__(self, other) -> bool:
        if not isinstance(other, RoomState):
            return NotImplemented
        return self.snapshot() == other.snapshot() and self.rng == other.rng


from .rng import GameRng  # noqa: E402  (placed low to keep dataclass block readable)


def create_room(room_id: str, config: NarrativeConfig, seed: int) -> RoomState:
    if not room_id:
        raise ValueError("room_id must be non-empty")
    return RoomState(
        room_id=room_id,
        config=config,
        rng=GameRng(seed),
        mission_target=config.mission_target,
    )


# ---------------------------------------------------------------------------
# identity

def _first_free_color(state: RoomState) -> str:
    used = {p.color for p in state.players.values()}
    for color in PALETTE:
        if color not in used:
            return color
    raise RoomFull(f"room {state.room_id} is full ({ROOM_CAPACITY} players)")


def join_room(
    state: RoomState, player_id: str, display_name: str = ""
) -> tuple[RoomState, list[tuple[str, Message]]]:
    """Add a player; mutates `state` (callers clone first). Returns catch-up
    replies for the joiner followed by the room-wide announcement."""
    if player_id in state.players:
        raise DuplicatePlayer(f"{player_id!r} is already in the room")
    if len(state.players) >= ROOM_CAPACITY:
        raise RoomFull(f"room {state.room_id} is full ({ROOM_CAPACITY} players)")
    color = _first_free_color(state)
    player = Player(
        id=player_id,
        color=color,
        joined_at_seq=state.next_seq,
        display_name=display_name,
    )

    out: list[tuple[str, Message]] = [(REPLY, Welcome(player_id=player_id, color=color))]
    # catch the joiner up on everything it missed
    for existing in state.players.values():
        out.append((REPLY, PlayerJoined(player_id=existing.id, color=existing.color)))
    out.append((REPLY, ModeChanged(mode=state.mode, actor_color=None)))
    out.append((REPLY, ScoreUpdate(total=state.score)))
    out.append((REPLY, avatar_update_for(state.avatar)))
    if state.minigame is not None:
        out.append((REPLY, MinigameUpdate(snapshot=minigames.snapshot(state.minigame))))

    state.players[player_id] = player
    out.append((BROADCAST, PlayerJoined(player_id=player_id, color=color)))
    return state, out


# ---------------------------------------------------------------------------
# the short-action grammar

def classify_gesture(tap_timestamps_ms, burst_window_ms: int) -> GestureEvent:
    """Collapse raw tap timestamps into the final maximal burst.

    Earlier bursts are assumed flushed already; only taps within
    `burst_window_ms` of their successor at the tail still count.
    """
    stamps = list(tap_timestamps_ms)
    if not stamps:
        raise EmptyInput("no tap timestamps")
    if any(b < a for a, b in zip(stamps, stamps[1:])):
        raise BadInput("timestamps must be sorted ascending")
    count = 1
    for earlier, later in zip(reversed(stamps[:-1]), reversed(stamps)):
        if later - earlier > burst_window_ms:
            break
        count += 1
    return TapBurst(count)


def chaos_decision(
    individual_tap_gestures: int,
    num_users: int,
    threshold,
    rng: GameRng,
    chaos_track: str = "Axel F",
) -> ActionOutcome:
    """4-or-more taps resolve to room-wide Chaos or a random single dance.

    The ratio (actor's tap gestures so far / players in room) is compared
    exactly: Chaos iff ratio < threshold. Few taps or many users push the
    ratio down, so fuller rooms see chaos more often.
    """
    if num_users < 1:
        raise ZeroUsers("a room decision needs at least one player")
    if individual_tap_gestures < 0:
        raise BadInput("tap gesture count cannot be negative")
    if Fraction(individual_tap_gestures, num_users) < threshold:
        return Chaos(track=chaos_track)
    return SmallChaos(chosen=rng.choice(DANCES))


def resolve_short_action(
    state: RoomState, actor: str, gesture: GestureEvent
) -> tuple[RoomState, ActionOutcome]:
    """Map a gesture to its outcome and animate the shared avatar.

    Pure: works on a clone and returns it. Tap-gesture counters feed the
    chaos ratio and count bursts only, never swipes.
    """
    if actor not in state.players:
        raise UnknownPlayer(f"unknown player {actor!r}")
    state = state.clone()

    if isinstance(gesture, Swipe):
        outcome: ActionOutcome = Dance("twist")
    elif isinstance(gesture, TapBurst):
        if gesture.count == 1:
            outcome = Dance("macarena")
        elif gesture.count == 2:
            outcome = Dance("samba")
        elif gesture.count == 3:
            outcome = Dance("move_it")
        else:
            outcome = chaos_decision(
                state.per_player_tap_gestures.get(actor, 0),
                len(state.players),
                state.config.chaos_threshold,
                state.rng,
                state.config.chaos_track,
            )
        state.per_player_tap_gestures[actor] = (
            state.per_player_tap_gestures.get(actor, 0) + 1
        )
    else:
        raise BadInput(f"unresolvable gesture {gesture!r}")

    state.avatar.animation = outcome
    state.avatar.facing = actor
    return state, outcome


def score_action(mode: GameMode, outcome: ActionOutcome) -> int:
    """Short actions earn nothing in Toques; in story modes rarity pays."""
    if mode is GameMode.TOQUES:
        return 0
    if isinstance(outcome, Chaos):
        return 3
    if isinstance(outcome, SmallChaos):
        return 2
    return 1


# ---------------------------------------------------------------------------
# the reducer

def _award(state: RoomState, points: int, out: list[tuple[str, Message]]) -> int:
    """Add collaborative points, freezing the score once the mission is done.

    Returns the points actually awarded and appends ScoreUpdate /
    MissionComplete messages as applicable.
    """
    if points <= 0 or state.mission_complete:
        return 0
    state.score += points
    out.append((BROADCAST, ScoreUpdate(total=state.score)))
    if state.score >= state.mission_target:
        state.mission_complete = True
        out.append((BROADCAST, MissionComplete(final_total=state.score)))
    return points


def _require_player(state: RoomState, sender: str) -> Player:
    player = state.players.get(sender)
    if player is None:
        raise UnknownPlayer(f"unknown player {sender!r}")
    return player


def _handle_join(state: RoomState, env: Envelope) -> tuple[RoomState, list]:
    assert isinstance(env.payload, Join)
    state = state.clone()
    player_id = env.sender
    if not player_id:
        player_id = f"p{state.next_player_ordinal}"
        state.next_player_ordinal += 1
    return join_room(state, player_id, env.payload.display_name)


def _handle_leave(state: RoomState, env: Envelope) -> tuple[RoomState, list]:
    state = state.clone()
    player = _require_player(state, env.sender)
    del state.players[player.id]
    state.per_player_tap_gestures.pop(player.id, None)
    out: list[tuple[str, Message]] = [(BROADCAST, PlayerLeft(player_id=player.id))]
    if state.avatar.facing == player.id:
        state.avatar.facing = None
        out.append((BROADCAST, avatar_update_for(state.avatar)))
    return state, out


def _handle_select_mode(state: RoomState, env: Envelope) -> tuple[RoomState, list]:
    assert isinstance(env.payload, SelectMode)
    state = state.clone()
    player = _require_player(state, env.sender)
    state.mode = env.payload.mode
    if state.minigame is not None and state.mode is not GameMode.HISTORIA_SURPRESA:
        state.minigame = None  # abandoned, no points
    return state, [(BROADCAST, ModeChanged(mode=state.mode, actor_color=player.color))]


def _handle_gesture(state: RoomState, env: Envelope) -> tuple[RoomState, list]:
    assert isinstance(env.payload, Gesture)
    player = _require_player(state, env.sender)
    gesture = env.payload.gesture
    if isinstance(gesture, RawTaps):
        gesture = classify_gesture(gesture.timestamps_ms, state.config.burst_window_ms)
    state, outcome = resolve_short_action(state, env.sender, gesture)
    out: list[tuple[str, Message]] = []
    awarded = _pre_award(state, score_action(state.mode, outcome))
    out.append(
        (
            BROADCAST,
            ActionBroadcast(
                actor_color=player.color,
                outcome=outcome_to_wire(outcome),
                points=awarded,
            ),
        )
    )
    out.append((BROADCAST, avatar_update_for(state.avatar)))
    _award(state, awarded, out)
    return state, out


def _pre_award(state: RoomState, points: int) -> int:
    return 0 if state.mission_complete else points


def _handle_start_minigame(state: RoomState, env: Envelope) -> tuple[RoomState, list]:
    assert isinstance(env.payload, StartMinigame)
    _require_player(state, env.sender)
    if state.mode is not GameMode.HISTORIA_SURPRESA:
        raise WrongMode("minigames only run in the surprise story mode")
    if state.minigame is not None:
        raise MinigameAlreadyActive("finish the current minigame first")
    state = state.clone()
    kind = env.payload.kind
    if kind == "hidden_objects":
        state.minigame = minigames.new_hidden_objects(state.config.hidden_objects)
    elif kind == "quiz":
        state.minigame = minigames.new_quiz(state.config.quiz)
    else:
        state.minigame = minigames.new_word_game(state.rng.choice(state.config.words))
    return state, [
        (BROADCAST, MinigameUpdate(snapshot=minigames.snapshot(state.minigame)))
    ]


def _finish_minigame(
    state: RoomState, out: list[tuple[str, Message]], notice: str, actor_color: str
) -> None:
    """Award a finished minigame's points and clear the slot."""
    assert state.minigame is not None
    points = minigames.minigame_points(state.minigame)
    awarded = _pre_award(state, points)
    out.append((BROADCAST, Notification(actor_color=actor_color, text=f"{notice} (+{awarded})")))
    out.append((BROADCAST, MinigameUpdate(snapshot=minigames.snapshot(state.minigame))))
    state.minigame = None
    _award(state, awarded, out)


def _hidden_objects_input(
    state: RoomState, player: Player, game, payload: dict, out: list
) -> None:
    op = payload.get("op")
    if op == "place_marker":
        pose = _pose_from(payload)
        new_game = minigames.place_marker(game, pose)
        if new_game.phase == minigames.MARKER_PLACEMENT:
            out.append(
                (
                    BROADCAST,
                    Notification(
                        actor_color=player.color, text="image not aligned, try again"
                    ),
                )
            )
            return
        state.minigame = new_game
        out.append(
            (BROADCAST, Notification(actor_color=player.color, text="image placed"))
        )
        out.append(
            (BROADCAST, MinigameUpdate(snapshot=minigames.snapshot(new_game)))
        )
    elif op == "find_object":
        object_id = payload.get("object_id")
        if not isinstance(object_id, str):
            raise BadInput("find_object needs an object_id")
        new_game = minigames.find_object(game, object_id)
        if new_game is game:
            out.append(
                (
                    BROADCAST,
                    Notification(
                        actor_color=player.color, text=f"{object_id} was already found"
                    ),
                )
            )
            return
        state.minigame = new_game
        found = len(new_game.objects_found)
        text = f"found {object_id} ({found}/{new_game.objects_total})"
        if new_game.phase == minigames.KEY_FOUND:
            text += ", the key appeared"
        out.append((BROADCAST, Notification(actor_color=player.color, text=text)))
        out.append((BROADCAST, MinigameUpdate(snapshot=minigames.snapshot(new_game))))
    elif op == "use_key":
        state.minigame = minigames.use_key(game)
        _finish_minigame(state, out, "the chest is open", player.color)
    else:
        raise BadInput(f"unknown hidden objects op {op!r}")


def _pose_from(payload: dict) -> Pose:
    try:
        return Pose(
            x=float(payload["x"]),
            y=float(payload["y"]),
            rot_deg=float(payload["rot_deg"]),
        )
    except (KeyError, TypeError, ValueError):
        raise BadInput("place_marker needs numeric x, y, rot_deg") from None


def _quiz_input(state: RoomState, player: Player, game, payload: dict, out: list) -> None:
    if payload.get("op") != "answer":
        raise BadInput(f"unknown quiz op {payload.get('op')!r}")
    transcript = payload.get("transcript")
    if not isinstance(transcript, str):
        raise BadInput("answer needs a transcript string")
    new_game, correct = minigames.answer_question(game, transcript)
    state.minigame = new_game
    text = "correct answer" if correct else "wrong answer"
    out.append((BROADCAST, Notification(actor_color=player.color, text=text)))
    if new_game.finished:
        _finish_minigame(
            state,
            out,
            f"quiz done, {new_game.correct_count}/{len(new_game.questions)} right",
            player.color,
        )
    else:
        out.append((BROADCAST, MinigameUpdate(snapshot=minigames.snapshot(new_game))))


def _word_input(state: RoomState, player: Player, game, payload: dict, out: list) -> None:
    if payload.get("op") != "guess":
        raise BadInput(f"unknown word game op {payload.get('op')!r}")
    text = payload.get("text")
    if not isinstance(text, str):
        raise BadInput("guess needs a text string")
    try:
        new_game = minigames.guess(game, text)
    except RepeatedLetter as exc:
        out.append((BROADCAST, Notification(actor_color=player.color, text=str(exc))))
        return
    state.minigame = new_game
    guessed = text.strip().lower()
    if new_game.status == minigames.WON:
        _finish_minigame(
            state, out, f"word solved: {new_game.secret}", player.color
        )
    elif new_game.status == minigames.LOST:
        _finish_minigame(
            state, out, f"out of attempts, the word was {new_game.secret}", player.color
        )
    else:
        if len(guessed) == 1 and guessed in new_game.secret:
            text_out = f"letter {guessed} is in the word"
        elif len(guessed) == 1:
            text_out = f"no letter {guessed} ({new_game.wrong_attempts}/{minigames.MAX_WRONG_ATTEMPTS} misses)"
        else:
            text_out = f"not the word ({new_game.wrong_attempts}/{minigames.MAX_WRONG_ATTEMPTS} misses)"
        out.append((BROADCAST, Notification(actor_color=player.color, text=text_out)))
        out.append((BROADCAST, MinigameUpdate(snapshot=minigames.snapshot(new_game))))


def _handle_minigame_input(state: RoomState, env: Envelope) -> tuple[RoomState, list]:
    assert isinstance(env.payload, MinigameInput)
    _require_player(state, env.sender)
    if state.minigame is None:
        raise NoMinigame("no minigame is running")
    state = state.clone()
    player = state.players[env.sender]
    game = state.minigame
    out: list[tuple[str, Message]] = []
    if isinstance(game, minigames.HiddenObjectsState):
        _hidden_objects_input(state, player, game, env.payload.input, out)
    elif isinstance(game, minigames.QuizState):
        _quiz_input(state, player, game, env.payload.input, out)
    else:
        _word_input(state, player, game, env.payload.input, out)
    if state.avatar.facing != player.id:
        state.avatar.facing = player.id
        out.append((BROADCAST, avatar_update_for(state.avatar)))
    return state, out


_HANDLERS = {
    Join: _handle_join,
    Leave: _handle_leave,
    SelectMode: _handle_select_mode,
    Gesture: _handle_gesture,
    StartMinigame: _handle_start_minigame,
    MinigameInput: _handle_minigame_input,
}


def apply_event(state: RoomState, incoming: Envelope) -> tuple[RoomState, list[Outgoing]]:
    """The reducer. Never raises for game-rule violations; those become
    ErrorReply envelopes for the sender and leave the state untouched."""
    handler = _HANDLERS.get(type(incoming.payload))
    if handler is None:
        if isinstance(incoming.payload, (Ping, Pong)):
            return state, []  # keepalive noise, nothing to do
        reply = ErrorReply(code="bad_input", text="unexpected message from a client")
        return state, [_direct(state, incoming, reply)]
    try:
        new_state, messages = handler(state, incoming)
    except GameError as exc:
        reply = ErrorReply(code=exc.code, text=str(exc))
        return state, [_direct(state, incoming, reply)]

    outgoing: list[Outgoing] = []
    for recipient, message in messages:
        if recipient == BROADCAST:
            seq = new_state.next_seq
            new_state.next_seq += 1
        else:
            seq = 0
        outgoing.append(
            Outgoing(
                recipient=recipient,
                envelope=Envelope(
                    seq=seq,
                    room_id=state.room_id,
                    sender=SERVER_SENDER,
                    sent_at=incoming.sent_at,
                    payload=message,
                ),
            )
        )
    return new_state, outgoing


def _direct(state: RoomState, incoming: Envelope, message: Message) -> Outgoing:
    return Outgoing(
        recipient=REPLY,
        envelope=Envelope(
            seq=0,
            room_id=state.room_id,
            sender=SERVER_SENDER,
            sent_at=incoming.sent_at,
            payload=message,
        ),
    )
