"""Seeded RNG with value equality, so room states can be compared and replayed."""

from __future__ import annotations

import hashlib
import random


class GameRng:
    """Deterministic random source owned by one room.

    Thin wrapper over ``random.Random`` that adds equality on internal
    state and a short digest for snapshots. Two rooms created from the
    same seed draw identical sequences.
    """

    def __init__(self, seed: int):
        self._random = random.Random(seed)

    def choice(self, seq):
        return self._random.choice(seq)

    def randrange(self, stop: int) -> int:
        return self._random.randrange(stop)

    def getstate(self):
        return self._random.getstate()

    def setstate(self, state) -> None:
        self._random.setstate(state)

    def state_digest(self) -> str:
        raw = repr(self._random.getstate()).encode("ascii")
        return hashlib.sha256(raw).hexdigest()[:16]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameRng):
            return NotImplemented
        return self._random.getstate() == other._random.getstate()

    def __hash__(self):  # unhashable: state is mutable
        raise TypeError("GameRng is unhashable")

    def __deepcopy__(self, memo) -> "GameRng":
        clone = GameRng(0)
        clone._random.setstate(self._random.getstate())
        return clone

    def __repr__(self) -> str:
        return f"GameRng(digest={self.state_digest()})"
