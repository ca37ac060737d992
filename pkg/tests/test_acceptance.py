"""Acceptance suite: one test per shipped guarantee, each with its time budget.

Each test re-derives its expectations independently (tables, brute-force
oracles, exhaustive enumerations) instead of trusting the implementation's
own constants, and asserts it finished inside the stated budget.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from avatar_sync import minigames
from avatar_sync.errors import RepeatedLetter
from avatar_sync.eventlog import replay_log
from avatar_sync.harness import LatencySpec, load_scenario, run_scenario, run_scenario_inproc
from avatar_sync.model import Chaos, GameMode, SmallChaos, Swipe, TapBurst
from avatar_sync.narrative import HiddenObjectsLayout, QuizQuestion, SceneObject, Tolerance
from avatar_sync.model import Pose
from avatar_sync.protocol import (
    ActionBroadcast,
    Gesture,
    Join,
    Leave,
    MissionComplete,
    ScoreUpdate,
)
from avatar_sync.rng import GameRng
from avatar_sync.session import chaos_decision, create_room, resolve_short_action

from conftest import REPO_ROOT, broadcasts, drive, payloads, room_in_mode, room_with_players

SCENARIO_DIR = REPO_ROOT / "scenarios"


class Budget:
    """Wall-clock guard: the criterion has to hold inside its stated budget."""

    def __init__(self, seconds: float):
        self.limit = seconds
        self.t0 = time.monotonic()

    def check(self, label: str) -> float:
        elapsed = time.monotonic() - self.t0
        assert elapsed < self.limit, f"{label} took {elapsed:.2f}s, budget {self.limit}s"
        return elapsed


# ---------------------------------------------------------------------------
# 1. the gesture grammar maps exactly as published


def test_acceptance_gesture_mapping_suite(small_config):
    budget = Budget(1.0)
    # independent restatement of the published table
    table = {
        TapBurst(1): {"kind": "dance", "name": "macarena"},
        TapBurst(2): {"kind": "dance", "name": "samba"},
        TapBurst(3): {"kind": "dance", "name": "move_it"},
        Swipe("up"): {"kind": "dance", "name": "twist"},
        Swipe("down"): {"kind": "dance", "name": "twist"},
        Swipe("left"): {"kind": "dance", "name": "twist"},
        Swipe("right"): {"kind": "dance", "name": "twist"},
    }
    for gesture, expected in table.items():
        state = room_with_players(small_config, 2)
        state, outs = drive(state, "p1", Gesture(gesture=gesture))
        action = payloads(broadcasts(outs))[0]
        assert isinstance(action, ActionBroadcast)
        assert action.outcome == expected, f"{gesture} mapped to {action.outcome}"
    # and 4+ taps leave the basic table for the chaos path, exhaustively 4..10
    for taps in range(4, 11):
        state = room_with_players(small_config, 2)
        state, outs = drive(state, "p1", Gesture(gesture=TapBurst(taps)))
        action = payloads(broadcasts(outs))[0]
        assert action.outcome["kind"] in ("chaos", "small_chaos")
        assert action.outcome["kind"] == "chaos"  # first burst, ratio 0/2
    budget.check("gesture mapping suite")


# ---------------------------------------------------------------------------
# 2. point rules + mission-once over 10,000 random action sequences


def _points_rule(mode: str, outcome_kind: str) -> int:
    if mode == "toques":
        return 0
    return {"dance": 1, "small_chaos": 2, "chaos": 3}[outcome_kind]


def test_acceptance_point_rules_property(small_config):
    budget = Budget(10.0)
    modes = [GameMode.TOQUES, GameMode.HISTORIA_AVATAR, GameMode.HISTORIA_SURPRESA]
    for case in range(10_000):
        chooser = random.Random(case)
        players = chooser.randint(1, 2)
        mode = chooser.choice(modes)
        state = room_in_mode(small_config, players, mode, seed=case)
        stream = []
        for _ in range(chooser.randint(1, 8)):
            actor = f"p{chooser.randint(1, players)}"
            if chooser.random() < 0.2:
                gesture = Swipe(chooser.choice(("up", "down", "left", "right")))
            else:
                gesture = TapBurst(chooser.randint(1, 6))
            state, outs = drive(state, actor, Gesture(gesture=gesture))
            stream.extend(payloads(broadcasts(outs)))

        running, mission_done, completions = 0, False, 0
        last_score_update = 0
        for msg in stream:
            if isinstance(msg, ActionBroadcast):
                expected = 0 if mission_done else _points_rule(mode.value, msg.outcome["kind"])
                assert msg.points == expected, f"case {case}: {msg}"
                running += msg.points
            elif isinstance(msg, ScoreUpdate):
                assert msg.total == running
                assert msg.total >= last_score_update  # never resets
                last_score_update = msg.total
            elif isinstance(msg, MissionComplete):
                completions += 1
                assert not mission_done, f"case {case}: second completion"
                mission_done = True
                assert msg.final_total == running >= 20
        assert state.score == running
        assert completions == (1 if running >= 20 else 0)
        assert mission_done == state.mission_complete
    budget.check("10,000 random action sequences")


# ---------------------------------------------------------------------------
# 3. the chaos ratio, full grid, exact arithmetic


def test_acceptance_chaos_ratio_grid():
    budget = Budget(1.0)
    rng = GameRng(0)
    for taps in range(0, 51):
        for users in range(1, 9):
            for threshold in (0.5, 1.0, 2.0):
                outcome = chaos_decision(taps, users, threshold, rng)
                expect_chaos = Fraction(taps, users) < Fraction(threshold)
                assert isinstance(outcome, Chaos) == expect_chaos, (
                    f"taps={taps} users={users} t={threshold}"
                )
                assert isinstance(outcome, (Chaos, SmallChaos))
                # equal scaling of both sides never changes the call
                for k in (2, 3, 5):
                    scaled = chaos_decision(taps * k, users * k, threshold, rng)
                    assert type(scaled) is type(outcome)
    budget.check("chaos ratio grid")


# ---------------------------------------------------------------------------
# 4. the word game versus a brute-force oracle, all guess sequences


class OracleHangman:
    """Independent 7-miss hangman, shaped only by the published rules."""

    __slots__ = ("word", "guessed", "wrong", "status")

    def __init__(self, word, guessed=frozenset(), wrong=0, status="in_progress"):
        self.word, self.guessed, self.wrong, self.status = word, guessed, wrong, status

    def mask(self):
        return "".join(c if c in self.guessed else "_" for c in self.word)

    def after_letter(self, letter):
        guessed = self.guessed | {letter}
        if letter in self.word:
            status = "won" if all(c in guessed for c in self.word) else "in_progress"
            return OracleHangman(self.word, guessed, self.wrong, status)
        wrong = self.wrong + 1
        return OracleHangman(self.word, guessed, wrong, "lost" if wrong >= 7 else "in_progress")

    def after_word(self, text):
        if text == self.word:
            return OracleHangman(self.word, self.guessed | set(self.word), self.wrong, "won")
        wrong = self.wrong + 1
        return OracleHangman(self.word, self.guessed, wrong, "lost" if wrong >= 7 else "in_progress")

    def points(self):
        if self.status == "won":
            return 4 if self.wrong <= 3 else 3
        return 0


def _explore_word(word: str, wrong_pool: str) -> int:
    """Walk every reachable state in lockstep with the oracle; returns states seen."""
    start = (minigames.new_word_game(word), OracleHangman(word))
    seen = set()
    stack = [start]
    wrong_word = word + "x"
    while stack:
        game, oracle = stack.pop()
        key = (game.guessed_letters, game.wrong_attempts, game.status)
        if key in seen:
            continue
        seen.add(key)

        # observable equivalence at every node
        assert game.mask() == oracle.mask()
        assert game.wrong_attempts == oracle.wrong
        assert game.status == oracle.status
        assert game.wrong_attempts <= 7
        if game.status != minigames.IN_PROGRESS:
            assert (game.status == minigames.LOST) == (game.wrong_attempts == 7) or (
                game.status == minigames.WON and game.wrong_attempts < 7
            )
            if game.wrong_attempts == 7:
                assert game.status == minigames.LOST  # Won at 7 wrongs is impossible
            points = minigames.minigame_points(game)
            assert points == oracle.points()
            assert 0 <= points <= 4
            continue

        moves = [letter for letter in set(word) | set(wrong_pool) if letter not in game.guessed_letters]
        for letter in moves:
            stack.append((minigames.guess(game, letter), oracle.after_letter(letter)))
        for letter in game.guessed_letters:  # repeats are refused, cost nothing
            with pytest.raises(RepeatedLetter):
                minigames.guess(game, letter)
        stack.append((minigames.guess(game, word), oracle.after_word(word)))
        stack.append((minigames.guess(game, wrong_word), oracle.after_word(wrong_word)))
    return len(seen)


def test_acceptance_word_game_oracle():
    budget = Budget(30.0)
    words = [
        "".join(combo)
        for length in range(1, 5)
        for combo in itertools.product("ab", repeat=length)
    ]
    words += [
        "".join(combo)
        for length in range(1, 4)
        for combo in itertools.product("abc", repeat=length)
    ]
    words += ["abcd", "mapa", "anel", "dado"]  # four distinct letters + real words
    total_states = 0
    for word in words:
        pool = "".join(c for c in "zyxwvutsr" if c not in word)[:7]
        total_states += _explore_word(word, pool)
    assert total_states > 10_000  # the search actually went everywhere
    budget.check(f"word game oracle over {len(words)} words")


# ---------------------------------------------------------------------------
# 5. consistency under latency


def test_acceptance_latency_consistency(story_config, tmp_path):
    scn = load_scenario(str(SCENARIO_DIR / "duo_avatar.json"))
    logs, scores = [], []
    for jitter in (0, 100, 500, 1000):
        budget = Budget(10.0)
        shaken = dataclasses.replace(
            scn, latency=LatencySpec(base_ms=20, jitter_ms=jitter, seed=5)
        )
        log_dir = tmp_path / f"jitter_{jitter}"
        report = run_scenario(shaken, story_config, 7, str(log_dir), transport="tcp")
        budget.check(f"tcp run at jitter {jitter}ms")
        failed = [c for c in report["checks"] if not c["ok"]]
        assert not failed, f"jitter {jitter}: {failed}"
        assert all(b["broadcasts"] > 0 for b in report["bots"])
        logs.append((log_dir / "a1.jsonl").read_bytes())
        scores.append(report["final_score"])
    assert scores == [8, 8, 8, 8]
    assert len({log for log in logs}) == 1, "jitter changed the recorded room history"


# ---------------------------------------------------------------------------
# 6. deterministic replay of every shipped scenario


def test_acceptance_replay_all_scenarios(story_config, tmp_path):
    budget = Budget(30.0)
    paths = sorted(SCENARIO_DIR.glob("*.json"))
    assert len(paths) == 8
    for path in paths:
        scn = load_scenario(str(path))
        log_dir = tmp_path / path.stem
        report = run_scenario_inproc(scn, story_config, 7, str(log_dir))
        assert report["passed"], report["checks"]
        state, _ = replay_log(log_dir / f"{scn.room}.jsonl", story_config, 7)
        sidecar = (log_dir / f"{scn.room}.snapshot.json").read_bytes()
        assert state.snapshot_bytes() == sidecar, f"{path.stem}: replay diverged"
    budget.check("replay of all shipped scenarios")


# ---------------------------------------------------------------------------
# 7. colors: uniqueness, capacity, recycling


def test_acceptance_color_rules(small_config):
    budget = Budget(1.0)
    state = create_room("c", small_config, 1)
    colors = []
    for _ in range(8):
        state, outs = drive(state, "", Join())
        colors.append(payloads(broadcasts(outs))[0].color)
    assert len(set(colors)) == 8, "eight joins, eight distinct colors"
    # the ninth is turned away
    state, outs = drive(state, "", Join())
    assert len(state.players) == 8
    refusal = outs[0].envelope.payload
    assert refusal.code == "room_full"
    # a departure frees exactly that color for the next joiner
    state, _ = drive(state, "p5", Leave())
    state, outs = drive(state, "", Join())
    recycled = payloads(broadcasts(outs))[0].color
    assert recycled == colors[4]
    assert len({p.color for p in state.players.values()}) == 8
    budget.check("color uniqueness, capacity, recycling")


# ---------------------------------------------------------------------------
# 8. no minigame outcome exceeds 4 points, exhaustively


def _layout_with(n_objects: int) -> HiddenObjectsLayout:
    return HiddenObjectsLayout(
        target_pose=Pose(0.0, 0.0, 0.0),
        objects=tuple(SceneObject(f"o{i}", float(i), 0.0) for i in range(n_objects)),
        tolerance=Tolerance(),
    )


def test_acceptance_minigame_point_cap(small_config):
    budget = Budget(10.0)
    hit = Pose(0.0, 0.0, 0.0)
    miss = Pose(999.0, 0.0, 0.0)

    # hidden objects: walk every reachable state for 1..3 objects
    for n in range(1, 4):
        seen = set()
        stack = [minigames.new_hidden_objects(_layout_with(n))]
        terminals = 0
        while stack:
            hs = stack.pop()
            key = (hs.phase, hs.objects_found)
            if key in seen:
                continue
            seen.add(key)
            if hs.phase == minigames.MARKER_PLACEMENT:
                assert minigames.place_marker(hs, miss) is hs
                stack.append(minigames.place_marker(hs, hit))
            elif hs.phase == minigames.OBJECT_HUNT:
                for obj in hs.layout.objects:
                    stack.append(minigames.find_object(hs, obj.id))
            elif hs.phase == minigames.KEY_FOUND:
                stack.append(minigames.use_key(hs))
            else:
                terminals += 1
                assert minigames.minigame_points(hs) <= 4
        assert terminals == 1  # the only terminal is the open chest

    # quiz: every right/wrong pattern for 0..5 questions
    for n in range(0, 6):
        questions = tuple(QuizQuestion(f"q{i}?", ("certo",)) for i in range(n))
        for pattern in itertools.product((True, False), repeat=n):
            qs = minigames.new_quiz(questions)
            for right in pattern:
                qs, was_right = minigames.answer_question(qs, "certo" if right else "errado")
                assert was_right is right
            assert qs.finished
            points = minigames.minigame_points(qs)
            assert points == min(4, sum(pattern))
            assert points <= 4

    # word game: terminal points for every reachable state of short words
    for word in ("a", "ab", "abc", "abcd", "bob"):
        pool = "".join(c for c in "zyxwvutsr" if c not in word)[:7]
        _explore_word(word, pool)  # asserts points <= 4 at every terminal

    budget.check("minigame point cap enumeration")
