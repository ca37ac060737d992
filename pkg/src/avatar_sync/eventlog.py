"""Append-only per-room session logs and deterministic replay.

The log holds every envelope the room processed: client inputs exactly as
routed (seq 0, sender = player id) and server outputs with their assigned
seq. Lines are canonical bytes, so a replay that re-reduces the inputs can
compare its regenerated outputs against the recorded ones byte for byte.
Write-ahead discipline: a line is flushed before the message it records is
broadcast, so a crash can truncate the log but never corrupt it.
"""

from __future__ import annotations

import hashlib
import io
import os
from typing import Optional, Union

from .errors import ReplayMismatch, SeqGap
from .narrative import NarrativeConfig
from .protocol import SERVER_SENDER, Envelope, decode_line, encode_envelope
from .session import RoomState, apply_event, create_room


def derive_room_seed(base_seed: int, room_id: str) -> int:
    """Stable per-room seed so one server seed covers any number of rooms."""
    digest = hashlib.sha256(f"{base_seed}:{room_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class EventLog:
    """One room's append-only log file."""

    def __init__(self, path: Union[str, os.PathLike], truncate: bool = True):
        self.path = os.fspath(path)
        parent = os.path.dirname(self.path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        self._fh: Optional[io.BufferedWriter] = open(
            self.path, "wb" if truncate else "ab"
        )

    def append(self, env: Envelope) -> None:
        if self._fh is None:
            raise ValueError(f"log {self.path} is closed")
        self._fh.write(encode_envelope(env))

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def room_id_for_log(log_path: Union[str, os.PathLike]) -> str:
    name = os.path.basename(os.fspath(log_path))
    return name[:-6] if name.endswith(".jsonl") else name


def replay_log(
    log_path: Union[str, os.PathLike],
    config: NarrativeConfig,
    seed: int,
    derive_seed: bool = True,
) -> tuple[RoomState, list[Envelope]]:
    """Re-reduce a session log and prove the recorded outputs right.

    `seed` is the server base seed when `derive_seed` is true (the normal
    case, matching `serve --seed`), or the room seed itself otherwise.
    Returns the final state and every regenerated output envelope. Raises
    SeqGap for a hole in the broadcast numbering and ReplayMismatch when a
    recorded server line differs from the regenerated one.
    """
    room_id = room_id_for_log(log_path)
    room_seed = derive_room_seed(seed, room_id) if derive_seed else seed
    state = create_room(room_id, config, room_seed)

    outputs: list[Envelope] = []
    pending: list[bytes] = []  # regenerated output lines not yet seen in the log
    expected_seq = 1

    with open(log_path, "rb") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            env = decode_line(raw)
            if env.sender == SERVER_SENDER:
                if env.seq > 0:
                    if env.seq != expected_seq:
                        raise SeqGap(expected_seq, env.seq)
                    expected_seq += 1
                if not pending:
                    raise ReplayMismatch(
                        line_no, "recorded server output has no regenerated match"
                    )
                regenerated = pending.pop(0)
                canonical = encode_envelope(env)
                if canonical != regenerated:
                    raise ReplayMismatch(
                        line_no,
                        f"recorded {canonical!r} != regenerated {regenerated!r}",
                    )
            else:
                if pending:
                    # an input arrived while recorded outputs were still owed
                    raise ReplayMismatch(
                        line_no, f"{len(pending)} recorded output line(s) missing"
                    )
                state, outs = apply_event(state, env)
                for out in outs:
                    outputs.append(out.envelope)
                    pending.append(encode_envelope(out.envelope))

    # a crash may truncate trailing outputs; that's a valid prefix, not a lie
    return state, outputs
