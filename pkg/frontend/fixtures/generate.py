"""Regenerate the webclient test fixtures from the reference engine.

Run from this directory (the engine package must be installed):

    python3 generate.py

Two files come out of it:

  gesture_cases.json      scripted pointer sequences plus the messages the
                          browser encoder must emit for them; tap grouping
                          is derived from the server-side classifier so the
                          two ends can never drift apart
  broadcast_stream.ndjson one player's complete receive stream for a short
                          two-player session, used by the view snapshots
"""

import json
import os
import sys

from avatar_sync.model import GameMode, RawTaps, Swipe, TapBurst
from avatar_sync.narrative import load_config
from avatar_sync.protocol import (
    Envelope,
    Gesture,
    Join,
    Leave,
    MinigameInput,
    SelectMode,
    StartMinigame,
    encode_envelope,
)
from avatar_sync.session import BROADCAST, REPLY, apply_event, classify_gesture, create_room

HERE = os.path.dirname(os.path.abspath(__file__))
STORY = os.path.join(HERE, "..", "..", "story.json")

BURST_WINDOW_MS = 400
SWIPE_MIN_TRAVEL_PX = 40
SWIPE_MAX_DURATION_MS = 300


# ---------------------------------------------------------------------------
# gesture encoder cases

def down(x, y, t):
    return {"kind": "down", "x": x, "y": y, "t": t}


def up(x, y, t):
    return {"kind": "up", "x": x, "y": y, "t": t}


def tap(t, x=100, y=100):
    """A quick press and release at one spot."""
    return [down(x, y, t), up(x, y, t + 60)]


def taps(*times):
    out = []
    for t in times:
        out.extend(tap(t))
    return out


SCRIPTS = [
    ("single_tap", taps(10)),
    ("double_tap", taps(0, 180)),
    ("triple_tap_within_window", taps(0, 150, 300)),
    ("five_tap_burst", taps(0, 120, 240, 360, 480)),
    ("out_of_window_taps", taps(0, 150, 900, 1000)),
    ("gap_exactly_window_stays_one_burst", taps(0, 400)),
    ("gap_just_over_window_splits", taps(0, 401)),
    ("swipe_right", [down(100, 100, 0), up(220, 104, 150)]),
    ("swipe_left", [down(220, 100, 0), up(90, 95, 140)]),
    ("swipe_up", [down(160, 200, 0), up(165, 80, 120)]),
    ("swipe_down", [down(160, 80, 0), up(150, 210, 180)]),
    ("slow_drag_is_a_tap", [down(100, 100, 0), up(200, 100, 350)]),
    ("short_drag_is_a_tap", [down(100, 100, 0), up(130, 100, 80)]),
    ("taps_then_swipe", taps(0, 100) + [down(100, 100, 150), up(220, 100, 260)]),
    ("swipe_splits_bursts", taps(0, 100) + [down(100, 100, 150), up(220, 100, 260)] + taps(300)),
    ("diagonal_swipe_dominant_axis", [down(0, 0, 0), up(80, 50, 100)]),
    ("travel_at_threshold_is_a_tap", [down(0, 0, 0), up(40, 0, 100)]),
    ("duration_at_threshold_is_a_swipe", [down(0, 0, 0), up(100, 0, 300)]),
]


def pair_samples(samples):
    """Match each press with its release, in order."""
    pairs = []
    press = None
    for s in samples:
        if s["kind"] == "down":
            press = s
        else:
            pairs.append((press, s))
            press = None
    assert press is None, "script left a pointer down"
    return pairs


def is_swipe(press, release):
    dx = release["x"] - press["x"]
    dy = release["y"] - press["y"]
    travel = (dx * dx + dy * dy) ** 0.5
    duration = release["t"] - press["t"]
    return travel > SWIPE_MIN_TRAVEL_PX and duration <= SWIPE_MAX_DURATION_MS


def swipe_direction(press, release):
    dx = release["x"] - press["x"]
    dy = release["y"] - press["y"]
    if abs(dx) >= abs(dy):
        return "right" if dx > 0 else "left"
    return "down" if dy > 0 else "up"


def oracle_groups(press_times):
    """Split tap timestamps into bursts using the engine's classifier.

    classify_gesture reports the size of the final burst; peeling that off
    the tail repeatedly recovers the whole grouping without restating the
    window rule here.
    """
    groups = []
    remaining = list(press_times)
    while remaining:
        event = classify_gesture(remaining, BURST_WINDOW_MS)
        assert isinstance(event, TapBurst)
        k = event.count
        groups.insert(0, remaining[-k:])
        remaining = remaining[:-k]
    return groups


def expected_messages(samples):
    """What the browser encoder must emit for a script, in order."""
    events = []  # (anchor time, wire message)
    segment = []  # press times between swipes

    def close_segment():
        for group in oracle_groups(segment):
            check = classify_gesture(group, BURST_WINDOW_MS)
            assert check.count == len(group), "grouping disagrees with classifier"
            events.append((group[-1], {"kind": "tap_burst", "taps": check.count}))
        segment.clear()

    for press, release in pair_samples(samples):
        if is_swipe(press, release):
            close_segment()
            events.append((release["t"], {"kind": "swipe", "direction": swipe_direction(press, release)}))
        else:
            segment.append(press["t"])
    close_segment()
    events.sort(key=lambda e: e[0])
    return [msg for _, msg in events]


def build_gesture_cases():
    cases = []
    for name, samples in SCRIPTS:
        expected = expected_messages(samples)
        # the classifier only ever sees taps, so the direct cross-check runs
        # on the presses after the last swipe boundary
        press_times = []
        for press, release in pair_samples(samples):
            if is_swipe(press, release):
                press_times = []
            else:
                press_times.append(press["t"])
        oracle_final = None
        if press_times:
            event = classify_gesture(press_times, BURST_WINDOW_MS)
            oracle_final = {"kind": "tap_burst", "taps": event.count}
        cases.append(
            {
                "name": name,
                "samples": samples,
                "expected": expected,
                "oracle_final": oracle_final,
            }
        )
    return {"burst_window_ms": BURST_WINDOW_MS, "cases": cases}


# ---------------------------------------------------------------------------
# a recorded receive stream for the view tests

def build_stream():
    config = load_config(open(STORY, "rb").read())
    clock = [1000]
    lines = []
    box = [create_room("lobby", config, seed=5)]

    def step(sender, payload, include_replies=False):
        clock[0] += 250
        env = Envelope(seq=0, room_id="lobby", sender=sender, sent_at=clock[0], payload=payload)
        box[0], outs = apply_event(box[0], env)
        for o in outs:
            if o.recipient == BROADCAST or (o.recipient == REPLY and include_replies):
                lines.append(encode_envelope(o.envelope))
        return outs

    def raw_taps(count, gap=150):
        base = clock[0]
        return RawTaps(timestamps_ms=tuple(base + i * gap for i in range(count)))

    step("", Join(), include_replies=True)  # p1, the recorded player
    step("", Join())  # p2
    step("p1", SelectMode(mode=GameMode.HISTORIA_AVATAR))
    step("p1", Gesture(gesture=raw_taps(3)))  # move it, +1
    step("p2", Gesture(gesture=Swipe(direction="right")))  # twist, +1
    step("p2", Gesture(gesture=raw_taps(5)))  # first big burst: chaos, +3

    step("p1", SelectMode(mode=GameMode.HISTORIA_SURPRESA))
    step("p1", StartMinigame(kind="quiz"))
    step("p1", MinigameInput(input={"op": "answer", "transcript": "nem ideia"}))
    step("p1", MinigameInput(input={"op": "answer", "transcript": "a chave"}))
    step("p1", MinigameInput(input={"op": "answer", "transcript": "vinte"}))  # 2/3, +2

    step("p1", StartMinigame(kind="word"))
    secret = box[0].minigame.secret
    hit = secret[0]
    miss = next(ch for ch in "zxwkq" if ch not in secret)
    step("p1", MinigameInput(input={"op": "guess", "text": hit}))
    step("p1", MinigameInput(input={"op": "guess", "text": miss}))

    step("p1", SelectMode(mode=GameMode.TOQUES))  # abandons the word game
    step("p2", Gesture(gesture=raw_taps(1)))  # no points in toques

    step("p1", SelectMode(mode=GameMode.HISTORIA_AVATAR))
    sender = "p1"
    for _ in range(40):
        if box[0].mission_complete:
            break
        step(sender, Gesture(gesture=raw_taps(1)))
        sender = "p2" if sender == "p1" else "p1"
    assert box[0].mission_complete, "session script never reached the target"

    step("p2", Leave())
    return b"".join(lines)


def main():
    cases = build_gesture_cases()
    with open(os.path.join(HERE, "gesture_cases.json"), "w") as fh:
        json.dump(cases, fh, indent=1, sort_keys=True)
        fh.write("\n")
    stream = build_stream()
    with open(os.path.join(HERE, "broadcast_stream.ndjson"), "wb") as fh:
        fh.write(stream)
    print(f"wrote {len(cases['cases'])} gesture cases and {stream.count(10)} stream lines")
    return 0


if __name__ == "__main__":
    sys.exit(main())
