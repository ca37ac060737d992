"""Error types shared across the wire protocol, reducer, and log replay.

Every error carries a stable ``code`` string; the server maps reducer
errors onto ``error_reply`` messages using that code, so tests and
clients can match on it instead of parsing text.
"""

from __future__ import annotations


class ProtocolError(Exception):
    """A wire line that could not be decoded."""

    code = "protocol_error"

    def __init__(self, text: str):
        super().__init__(text)
        self.text = text


class MalformedJson(ProtocolError):
    code = "malformed_json"


class UnknownTag(ProtocolError):
    code = "unknown_tag"

    def __init__(self, tag: str):
        super().__init__(f"unknown message tag: {tag!r}")
        self.tag = tag


class MissingField(ProtocolError):
    code = "missing_field"

    def __init__(self, name: str):
        super().__init__(f"missing field: {name}")
        self.name = name


class BadType(ProtocolError):
    code = "bad_type"

    def __init__(self, name: str, reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"bad value for field {name!r}{detail}")
        self.name = name


class GameError(Exception):
    """A rejected game action. Never fatal: surfaced as an error_reply."""

    code = "game_error"

    def __init__(self, text: str = ""):
        super().__init__(text or self.__class__.__name__)
        self.text = text or self.__class__.__name__


class DuplicatePlayer(GameError):
    code = "duplicate_player"


class RoomFull(GameError):
    code = "room_full"


class UnknownPlayer(GameError):
    code = "unknown_player"


class EmptyInput(GameError):
    code = "empty_input"


class ZeroUsers(GameError):
    code = "zero_users"


class WrongMode(GameError):
    code = "wrong_mode"


class MinigameAlreadyActive(GameError):
    code = "minigame_active"


class NoMinigame(GameError):
    code = "no_minigame"


class WrongPhase(GameError):
    code = "wrong_phase"


class UnknownObject(GameError):
    code = "unknown_object"


class QuizFinished(GameError):
    code = "quiz_finished"


class GameOver(GameError):
    code = "game_over"


class RepeatedLetter(GameError):
    code = "repeated_letter"


class BadInput(GameError):
    code = "bad_input"


class NotFinished(GameError):
    code = "not_finished"


class ConfigError(Exception):
    """Base for narrative config problems."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class LogError(Exception):
    """Base for event-log persistence and replay failures."""


class SeqGap(LogError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"sequence gap: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class ReplayMismatch(LogError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"replay diverged at line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail


class BindError(Exception):
    """The server could not claim its listen address."""
