"""Story configuration: one JSON file drives the whole experience.

Swapping the file swaps the narrative without touching code: intro text,
tutorial, quiz questions, secret words, hidden object layout, dance display
names, scoring target. ``load_config`` applies defaults and raises on the
first invalid field; ``validate_config`` reports every finding at once and
backs the ``config lint`` CLI. The machine-readable schema ships as
``narrative.schema.json`` next to the example ``story.json``.
"""

from __future__ import annotations

import json
import os
import unicodedata
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ParseError, ValidationError
from .model import DANCES, Pose

DEFAULT_MISSION_TARGET = 20
DEFAULT_BURST_WINDOW_MS = 400
DEFAULT_CHAOS_THRESHOLD = 1.0
DEFAULT_CHAOS_TRACK = "Axel F"
DEFAULT_TOLERANCE_DISTANCE = 10.0
DEFAULT_TOLERANCE_ROT_DEG = 15.0

DEFAULT_DANCE_NAMES = {
    "macarena": "Macarena",
    "samba": "Samba",
    "move_it": "I like to move it",
    "twist": "Twist",
}


def normalize_answer(text: str) -> str:
    """Case-, whitespace- and accent-insensitive comparison key.

    NFD-decompose and drop combining marks, so "Avó " == "avo".
    """
    decomposed = unicodedata.normalize("NFD", text.strip().lower())
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


@dataclass(frozen=True)
class QuizQuestion:
    question: str
    accepted_answers: tuple[str, ...]

    def accepts(self, transcript: str) -> bool:
        key = normalize_answer(transcript)
        return any(normalize_answer(a) == key for a in self.accepted_answers)


@dataclass(frozen=True)
class SceneObject:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class Tolerance:
    distance: float = DEFAULT_TOLERANCE_DISTANCE
    rot_deg: float = DEFAULT_TOLERANCE_ROT_DEG


@dataclass(frozen=True)
class HiddenObjectsLayout:
    target_pose: Pose
    objects: tuple[SceneObject, ...]
    tolerance: Tolerance = field(default_factory=Tolerance)


@dataclass(frozen=True)
class NarrativeConfig:
    words: tuple[str, ...]
    hidden_objects: HiddenObjectsLayout
    title: str = ""
    intro_text: str = ""
    tutorial_steps: tuple[str, ...] = ()
    mission_target: int = DEFAULT_MISSION_TARGET
    dances: tuple[tuple[str, str], ...] = tuple(sorted(DEFAULT_DANCE_NAMES.items()))
    chaos_track: str = DEFAULT_CHAOS_TRACK
    burst_window_ms: int = DEFAULT_BURST_WINDOW_MS
    chaos_threshold: float = DEFAULT_CHAOS_THRESHOLD
    quiz: tuple[QuizQuestion, ...] = ()

    def dance_display(self, token: str) -> str:
        return dict(self.dances)[token]

    def to_json_obj(self) -> dict:
        """Inverse of load_config up to defaults; load(save(cfg)) == cfg."""
        return {
            "title": self.title,
            "intro_text": self.intro_text,
            "tutorial_steps": list(self.tutorial_steps),
            "mission_target": self.mission_target,
            "dances": dict(self.dances),
            "chaos_track": self.chaos_track,
            "burst_window_ms": self.burst_window_ms,
            "chaos_threshold": self.chaos_threshold,
            "quiz": [
                {"question": q.question, "accepted_answers": list(q.accepted_answers)}
                for q in self.quiz
            ],
            "words": list(self.words),
            "hidden_objects": {
                "target_pose": {
                    "x": self.hidden_objects.target_pose.x,
                    "y": self.hidden_objects.target_pose.y,
                    "rot_deg": self.hidden_objects.target_pose.rot_deg,
                },
                "tolerance": {
                    "distance": self.hidden_objects.tolerance.distance,
                    "rot_deg": self.hidden_objects.tolerance.rot_deg,
                },
                "objects": [
                    {"id": o.id, "x": o.x, "y": o.y}
                    for o in self.hidden_objects.objects
                ],
            },
        }


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning"
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.field}: {self.reason}"


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_config(obj) -> list[Finding]:
    """Collect every problem in one pass, in document field order.

    Returns [] exactly when load_config would accept the input.
    """
    findings: list[Finding] = []

    def err(fld: str, reason: str):
        findings.append(Finding("error", fld, reason))

    if not isinstance(obj, dict):
        err("$", "top level must be a JSON object")
        return findings

    for fld in ("title", "intro_text", "chaos_track"):
        if fld in obj and not isinstance(obj[fld], str):
            err(fld, "must be a string")

    steps = obj.get("tutorial_steps", [])
    if not isinstance(steps, list) or not all(isinstance(s, str) for s in steps):
        err("tutorial_steps", "must be a list of strings")

    target = obj.get("mission_target", DEFAULT_MISSION_TARGET)
    if not isinstance(target, int) or isinstance(target, bool) or target < 1:
        err("mission_target", "must be a positive integer")

    dances = obj.get("dances", {})
    if not isinstance(dances, dict):
        err("dances", "must be an object mapping dance tokens to display names")
    else:
        for token in sorted(dances):
            if token not in DANCES:
                err(f"dances.{token}", f"unknown dance token (known: {', '.join(DANCES)})")
            elif not isinstance(dances[token], str) or not dances[token]:
                err(f"dances.{token}", "display name must be a non-empty string")

    window = obj.get("burst_window_ms", DEFAULT_BURST_WINDOW_MS)
    if not isinstance(window, int) or isinstance(window, bool) or window < 1:
        err("burst_window_ms", "must be a positive integer (milliseconds)")

    threshold = obj.get("chaos_threshold", DEFAULT_CHAOS_THRESHOLD)
    if not _is_number(threshold) or threshold <= 0:
        err("chaos_threshold", "must be a positive number")

    quiz = obj.get("quiz", [])
    if not isinstance(quiz, list):
        err("quiz", "must be a list of questions")
    else:
        for i, entry in enumerate(quiz):
            if not isinstance(entry, dict):
                err(f"quiz[{i}]", "must be an object")
                continue
            if not isinstance(entry.get("question"), str) or not entry["question"].strip():
                err(f"quiz[{i}].question", "must be a non-empty string")
            answers = entry.get("accepted_answers")
            if (
                not isinstance(answers, list)
                or not answers
                or not all(isinstance(a, str) and a.strip() for a in answers)
            ):
                err(f"quiz[{i}].accepted_answers", "must be a non-empty list of non-empty strings")

    words = obj.get("words")
    if words is None:
        err("words", "required field is missing")
    elif not isinstance(words, list) or not words:
        err("words", "must be a non-empty list")
    else:
        for i, word in enumerate(words):
            if not isinstance(word, str) or not word:
                err(f"words[{i}]", "must be a non-empty string")
            elif not (word.isascii() and word.isalpha() and word == word.lower()):
                err(f"words[{i}]", f"{word!r} must be lowercase ascii letters only")

    hidden = obj.get("hidden_objects")
    if hidden is None:
        err("hidden_objects", "required field is missing")
    elif not isinstance(hidden, dict):
        err("hidden_objects", "must be an object")
    else:
        pose = hidden.get("target_pose")
        if not isinstance(pose, dict):
            err("hidden_objects.target_pose", "required object with x, y, rot_deg")
        else:
            for axis in ("x", "y", "rot_deg"):
                if not _is_number(pose.get(axis)):
                    err(f"hidden_objects.target_pose.{axis}", "must be a number")
        tol = hidden.get("tolerance", {})
        if not isinstance(tol, dict):
            err("hidden_objects.tolerance", "must be an object")
        else:
            for axis in ("distance", "rot_deg"):
                if axis in tol and (not _is_number(tol[axis]) or tol[axis] < 0):
                    err(f"hidden_objects.tolerance.{axis}", "must be a non-negative number")
        objects = hidden.get("objects")
        if not isinstance(objects, list) or not objects:
            err("hidden_objects.objects", "must be a non-empty list")
        else:
            seen_ids = set()
            for i, entry in enumerate(objects):
                if not isinstance(entry, dict):
                    err(f"hidden_objects.objects[{i}]", "must be an object")
                    continue
                oid = entry.get("id")
                if not isinstance(oid, str) or not oid:
                    err(f"hidden_objects.objects[{i}].id", "must be a non-empty string")
                elif oid in seen_ids:
                    err("hidden_objects.objects", f"duplicate object id {oid!r}")
                else:
                    seen_ids.add(oid)
                for axis in ("x", "y"):
                    if not _is_number(entry.get(axis)):
                        err(f"hidden_objects.objects[{i}].{axis}", "must be a number")

    return findings


# ---------------------------------------------------------------------------
# loading

def _parse(source: Union[str, bytes]) -> dict:
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"config is not valid UTF-8: {exc}") from None
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc}") from None


def load_config(source: Union[str, bytes, os.PathLike]) -> NarrativeConfig:
    """Parse, validate and default-fill a story file.

    `source` is a filesystem path or raw JSON bytes. Raises ParseError for
    broken JSON and ValidationError (first failing field) for bad content.
    """
    if isinstance(source, os.PathLike):
        source = os.fspath(source)
    if isinstance(source, str) and not source.lstrip().startswith("{"):
        with open(source, "rb") as fh:
            source = fh.read()
    obj = _parse(source)

    findings = validate_config(obj)
    if findings:
        first = findings[0]
        raise ValidationError(first.field, first.reason)

    dance_names = dict(DEFAULT_DANCE_NAMES)
    dance_names.update(obj.get("dances", {}))

    hidden = obj["hidden_objects"]
    pose = hidden["target_pose"]
    tol = hidden.get("tolerance", {})
    layout = HiddenObjectsLayout(
        target_pose=Pose(
            x=float(pose["x"]), y=float(pose["y"]), rot_deg=float(pose["rot_deg"])
        ),
        tolerance=Tolerance(
            distance=float(tol.get("distance", DEFAULT_TOLERANCE_DISTANCE)),
            rot_deg=float(tol.get("rot_deg", DEFAULT_TOLERANCE_ROT_DEG)),
        ),
        objects=tuple(
            SceneObject(id=o["id"], x=float(o["x"]), y=float(o["y"]))
            for o in hidden["objects"]
        ),
    )

    return NarrativeConfig(
        title=obj.get("title", ""),
        intro_text=obj.get("intro_text", ""),
        tutorial_steps=tuple(obj.get("tutorial_steps", [])),
        mission_target=obj.get("mission_target", DEFAULT_MISSION_TARGET),
        dances=tuple(sorted(dance_names.items())),
        chaos_track=obj.get("chaos_track", DEFAULT_CHAOS_TRACK),
        burst_window_ms=obj.get("burst_window_ms", DEFAULT_BURST_WINDOW_MS),
        chaos_threshold=float(obj.get("chaos_threshold", DEFAULT_CHAOS_THRESHOLD)),
        quiz=tuple(
            QuizQuestion(
                question=q["question"],
                accepted_answers=tuple(q["accepted_answers"]),
            )
            for q in obj.get("quiz", [])
        ),
        words=tuple(obj["words"]),
        hidden_objects=layout,
    )
