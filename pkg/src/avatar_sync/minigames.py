"""The three long-action minigames, as pure immutable state machines.

Each machine is a frozen dataclass plus transition functions that return a
new state; the room reducer owns the only reference, so purity here keeps
replay deterministic. Each finished machine is worth up to 4 collaborative
points. Invalid inputs raise typed errors and never corrupt state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

from .errors import (
    BadInput,
    GameOver,
    NotFinished,
    QuizFinished,
    RepeatedLetter,
    UnknownObject,
    WrongPhase,
)
from .model import Pose
from .narrative import HiddenObjectsLayout, QuizQuestion

MAX_POINTS = 4
MAX_WRONG_ATTEMPTS = 7

# hidden objects phases, strictly forward
MARKER_PLACEMENT = "marker_placement"
OBJECT_HUNT = "object_hunt"
KEY_FOUND = "key_found"
CHEST_OPEN = "chest_open"

IN_PROGRESS = "in_progress"
WON = "won"
LOST = "lost"


# ---------------------------------------------------------------------------
# hidden objects: place the story image, find everything, use the key


@dataclass(frozen=True)
class HiddenObjectsState:
    layout: HiddenObjectsLayout
    phase: str = MARKER_PLACEMENT
    marker_pose: Optional[Pose] = None
    objects_found: frozenset[str] = frozenset()

    @property
    def objects_total(self) -> int:
        return len(self.layout.objects)


def new_hidden_objects(layout: HiddenObjectsLayout) -> HiddenObjectsState:
    return HiddenObjectsState(layout=layout)


def _angle_diff_deg(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def pose_within_tolerance(pose: Pose, target: Pose, distance: float, rot_deg: float) -> bool:
    # closed interval on both axes: exactly at the limit still counts
    off = math.hypot(pose.x - target.x, pose.y - target.y)
    return off <= distance and _angle_diff_deg(pose.rot_deg, target.rot_deg) <= rot_deg


def place_marker(hs: HiddenObjectsState, pose: Pose) -> HiddenObjectsState:
    """Try to place the story image; a miss leaves the state untouched."""
    if hs.phase != MARKER_PLACEMENT:
        raise WrongPhase(f"marker already placed (phase {hs.phase})")
    tol = hs.layout.tolerance
    if pose_within_tolerance(pose, hs.layout.target_pose, tol.distance, tol.rot_deg):
        return replace(hs, phase=OBJECT_HUNT, marker_pose=pose)
    return hs


def find_object(hs: HiddenObjectsState, object_id: str) -> HiddenObjectsState:
    if hs.phase != OBJECT_HUNT:
        raise WrongPhase(f"not hunting (phase {hs.phase})")
    if object_id not in {o.id for o in hs.layout.objects}:
        raise UnknownObject(f"no such object: {object_id!r}")
    if object_id in hs.objects_found:
        return hs  # finding it again is a harmless no-op
    found = hs.objects_found | {object_id}
    phase = KEY_FOUND if len(found) == hs.objects_total else OBJECT_HUNT
    return replace(hs, objects_found=found, phase=phase)


def use_key(hs: HiddenObjectsState) -> HiddenObjectsState:
    if hs.phase != KEY_FOUND:
        raise WrongPhase(f"no key in hand (phase {hs.phase})")
    return replace(hs, phase=CHEST_OPEN)


# ---------------------------------------------------------------------------
# quiz: strictly sequential, no retries


@dataclass(frozen=True)
class QuizState:
    questions: tuple[QuizQuestion, ...]
    question_index: int = 0
    correct_count: int = 0

    @property
    def finished(self) -> bool:
        return self.question_index >= len(self.questions)

    @property
    def current_question(self) -> Optional[QuizQuestion]:
        return None if self.finished else self.questions[self.question_index]


def new_quiz(questions: tuple[QuizQuestion, ...]) -> QuizState:
    return QuizState(questions=questions)


def answer_question(qs: QuizState, transcript: str) -> tuple[QuizState, bool]:
    """Consume the current question; the index advances whether right or wrong."""
    if qs.finished:
        raise QuizFinished("all questions already answered")
    correct = qs.questions[qs.question_index].accepts(transcript)
    return (
        replace(
            qs,
            question_index=qs.question_index + 1,
            correct_count=qs.correct_count + (1 if correct else 0),
        ),
        correct,
    )


# ---------------------------------------------------------------------------
# word game: guess letters or the whole word, 7 misses allowed


@dataclass(frozen=True)
class WordGameState:
    secret: str
    revealed: tuple[bool, ...]
    wrong_attempts: int = 0
    guessed_letters: frozenset[str] = frozenset()
    status: str = IN_PROGRESS

    def mask(self) -> str:
        return "".join(c if r else "_" for c, r in zip(self.secret, self.revealed))


def new_word_game(secret: str) -> WordGameState:
    if not (secret and secret.isascii() and secret.isalpha() and secret == secret.lower()):
        raise BadInput(f"secret must be a lowercase word, got {secret!r}")
    return WordGameState(secret=secret, revealed=(False,) * len(secret))


def _lose_or(ws: WordGameState, wrong: int) -> WordGameState:
    status = LOST if wrong >= MAX_WRONG_ATTEMPTS else IN_PROGRESS
    return replace(ws, wrong_attempts=wrong, status=status)


def guess(ws: WordGameState, raw: str) -> WordGameState:
    if ws.status != IN_PROGRESS:
        raise GameOver(f"word game already {ws.status}")
    text = raw.strip().lower()
    if not text or not (text.isascii() and text.isalpha()):
        raise BadInput(f"guess letters or a word, got {raw!r}")

    if len(text) == 1:
        if text in ws.guessed_letters:
            raise RepeatedLetter(f"{text!r} was already tried")
        ws = replace(ws, guessed_letters=ws.guessed_letters | {text})
        if text in ws.secret:
            revealed = tuple(r or c == text for c, r in zip(ws.secret, ws.revealed))
            status = WON if all(revealed) else IN_PROGRESS
            return replace(ws, revealed=revealed, status=status)
        return _lose_or(ws, ws.wrong_attempts + 1)

    if text == ws.secret:
        return replace(ws, revealed=(True,) * len(ws.secret), status=WON)
    return _lose_or(ws, ws.wrong_attempts + 1)


# ---------------------------------------------------------------------------
# scoring and wire snapshots

Minigame = Union[HiddenObjectsState, QuizState, WordGameState]


def is_finished(game: Minigame) -> bool:
    if isinstance(game, HiddenObjectsState):
        return game.phase == CHEST_OPEN
    if isinstance(game, QuizState):
        return game.finished
    if isinstance(game, WordGameState):
        return game.status != IN_PROGRESS
    raise TypeError(f"not a minigame: {game!r}")


def minigame_points(game: Minigame) -> int:
    """Collaborative points for a finished minigame, capped at 4."""
    if not is_finished(game):
        raise NotFinished("minigame still in progress")
    if isinstance(game, HiddenObjectsState):
        points = 0
        if game.phase != MARKER_PLACEMENT:
            points += 1  # image placed
        if len(game.objects_found) == game.objects_total:
            points += 2  # every hidden object found
        if game.phase == CHEST_OPEN:
            points += 1  # chest opened with the key
        return points
    if isinstance(game, QuizState):
        return min(MAX_POINTS, game.correct_count)
    if game.status == WON:
        return 4 if game.wrong_attempts <= 3 else 3
    return 0


def minigame_kind(game: Minigame) -> str:
    if isinstance(game, HiddenObjectsState):
        return "hidden_objects"
    if isinstance(game, QuizState):
        return "quiz"
    return "word"


def snapshot(game: Minigame) -> dict:
    """Wire form for MinigameUpdate broadcasts; stable key order via encoder."""
    if isinstance(game, HiddenObjectsState):
        return {
            "kind": "hidden_objects",
            "state": game.phase,
            "objects_found": sorted(game.objects_found),
            "objects_total": game.objects_total,
        }
    if isinstance(game, QuizState):
        current = game.current_question
        return {
            "kind": "quiz",
            "state": "finished" if game.finished else IN_PROGRESS,
            "question_index": game.question_index,
            "questions_total": len(game.questions),
            "question": None if current is None else current.question,
            "correct_count": game.correct_count,
        }
    snap = {
        "kind": "word",
        "state": game.status,
        "mask": game.mask(),
        "length": len(game.secret),
        "wrong_attempts": game.wrong_attempts,
        "guessed": sorted(game.guessed_letters),
    }
    if game.status != IN_PROGRESS:
        snap["secret"] = game.secret
    return snap
