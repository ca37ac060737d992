"""Deterministic multi-client simulator.

Scenarios script a handful of bots (or give them a seeded random policy),
optionally smear their receive path with seeded latency, and state what
must hold at the end. Two lanes run the same scenario: "tcp" drives real
sockets against a real server; "inproc" pumps the reducer directly on a
virtual clock, which makes logs and reports exactly reproducible. Bots
send virtual timestamps in both lanes, so a staggered script produces
byte-identical room logs either way.
"""

from __future__ import annotations

import asyncio
import json
import os
import re
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ValidationError
from .eventlog import EventLog, derive_room_seed
from .model import SWIPE_DIRECTIONS, GameMode, RawTaps, Swipe, TapBurst
from .narrative import NarrativeConfig
from .protocol import (
    SERVER_SENDER,
    ActionBroadcast,
    Envelope,
    Gesture,
    Join,
    Leave,
    MinigameInput,
    MissionComplete,
    ModeChanged,
    Notification,
    PlayerJoined,
    PlayerLeft,
    ScoreUpdate,
    SelectMode,
    StartMinigame,
    Welcome,
    decode_line,
    encode_envelope,
)
from .rng import GameRng
from .server import AvatarServer
from .session import BROADCAST, apply_event, create_room

MAX_BOTS = 8
_AWARD_RE = re.compile(r"\(\+(\d+)\)$")


# ---------------------------------------------------------------------------
# scenario model

@dataclass(frozen=True)
class Step:
    at_ms: int
    do: str
    args: dict


@dataclass(frozen=True)
class BotSpec:
    name: str
    steps: tuple[Step, ...]


@dataclass(frozen=True)
class LatencySpec:
    base_ms: int = 0
    jitter_ms: int = 0
    seed: int = 0


@dataclass(frozen=True)
class Scenario:
    name: str
    room: str
    bots: tuple[BotSpec, ...]
    latency: LatencySpec
    expect: dict


_KNOWN_OPS = {
    "join",
    "leave",
    "select_mode",
    "tap",
    "swipe",
    "raw_taps",
    "start_minigame",
    "minigame",
}


def _random_script(policy: dict) -> tuple[Step, ...]:
    """Seeded gesture spam: join, N short actions, leave. Stays in Toques."""
    steps_n = policy.get("steps", 8)
    rng = GameRng(policy.get("seed", 0))
    steps = [Step(0, "join", {})]
    for i in range(steps_n):
        at = 100 * (i + 1)
        roll = rng.choice(["tap", "tap", "tap", "swipe"])
        if roll == "tap":
            steps.append(Step(at, "tap", {"taps": rng.choice([1, 2, 3, 5])}))
        else:
            steps.append(Step(at, "swipe", {"direction": rng.choice(list(SWIPE_DIRECTIONS))}))
    steps.append(Step(100 * (steps_n + 1), "leave", {}))
    return tuple(steps)


def load_scenario(source: Union[str, dict]) -> Scenario:
    if isinstance(source, str):
        with open(source, "rb") as fh:
            obj = json.load(fh)
    else:
        obj = source
    name = obj.get("name")
    room = obj.get("room")
    if not isinstance(name, str) or not name:
        raise ValidationError("name", "must be a non-empty string")
    if not isinstance(room, str) or not room:
        raise ValidationError("room", "must be a non-empty string")
    raw_bots = obj.get("bots")
    if not isinstance(raw_bots, list) or not 1 <= len(raw_bots) <= MAX_BOTS:
        raise ValidationError("bots", f"need 1..{MAX_BOTS} bots")
    bots = []
    for i, raw in enumerate(raw_bots):
        bot_name = raw.get("name", f"bot{i}")
        if "random" in raw:
            steps = _random_script(raw["random"])
        else:
            raw_steps = raw.get("script")
            if not isinstance(raw_steps, list):
                raise ValidationError(f"bots[{i}].script", "must be a list of steps")
            steps = []
            last_at = -1
            for j, s in enumerate(raw_steps):
                at = s.get("at_ms")
                do = s.get("do")
                if not isinstance(at, int) or at < 0:
                    raise ValidationError(f"bots[{i}].script[{j}].at_ms", "must be a non-negative integer")
                if at < last_at:
                    raise ValidationError(f"bots[{i}].script[{j}].at_ms", "times must be non-decreasing")
                last_at = at
                if do not in _KNOWN_OPS:
                    raise ValidationError(f"bots[{i}].script[{j}].do", f"unknown op {do!r}")
                args = {k: v for k, v in s.items() if k not in ("at_ms", "do")}
                steps.append(Step(at, do, args))
            steps = tuple(steps)
        bots.append(BotSpec(name=bot_name, steps=tuple(steps)))
    lat = obj.get("latency", {})
    latency = LatencySpec(
        base_ms=lat.get("base_ms", 0),
        jitter_ms=lat.get("jitter_ms", 0),
        seed=lat.get("seed", 0),
    )
    return Scenario(
        name=name,
        room=room,
        bots=tuple(bots),
        latency=latency,
        expect=obj.get("assert", {}),
    )


def step_payload(step: Step):
    if step.do == "join":
        return Join(display_name=step.args.get("display_name", ""))
    if step.do == "leave":
        return Leave()
    if step.do == "select_mode":
        return SelectMode(mode=GameMode(step.args["mode"]))
    if step.do == "tap":
        return Gesture(gesture=TapBurst(step.args["taps"]))
    if step.do == "swipe":
        return Gesture(gesture=Swipe(step.args["direction"]))
    if step.do == "raw_taps":
        offsets = step.args["offsets_ms"]
        return Gesture(
            gesture=RawTaps(tuple(step.at_ms + off for off in offsets))
        )
    if step.do == "start_minigame":
        return StartMinigame(kind=step.args["kind"])
    if step.do == "minigame":
        return MinigameInput(input=step.args["input"])
    raise ValueError(f"unknown step {step.do!r}")


# ---------------------------------------------------------------------------
# latency injection

class LatencyModel:
    """base + uniform(0..jitter) per delivery, drawn from a seeded stream."""

    def __init__(self, base_ms: int, jitter_ms: int, seed: int):
        self.base_ms = base_ms
        self.jitter_ms = jitter_ms
        self.rng = GameRng(seed)

    def delay_ms(self) -> int:
        if self.jitter_ms <= 0:
            return self.base_ms
        return self.base_ms + self.rng.randrange(self.jitter_ms + 1)


def inject_latency(model: LatencyModel, arrivals):
    """Delay (t_ms, item) pairs; FIFO preserved like a TCP stream would."""
    prev = float("-inf")
    for t_ms, item in arrivals:
        delivery = max(prev, t_ms + model.delay_ms())
        prev = delivery
        yield delivery, item


def _bot_latency(scenario: Scenario, bot_index: int) -> LatencyModel:
    lat = scenario.latency
    return LatencyModel(lat.base_ms, lat.jitter_ms, lat.seed + bot_index)


# ---------------------------------------------------------------------------
# what every bot records

class BotTrace:
    def __init__(self, name: str):
        self.name = name
        self.player_id: Optional[str] = None
        self.color: Optional[str] = None
        self.broadcast_lines: list[bytes] = []
        self.directs: list[Envelope] = []
        self._prev_delivery = float("-inf")

    def observe(self, env: Envelope, raw: bytes) -> None:
        if env.seq > 0:
            self.broadcast_lines.append(raw)
        else:
            self.directs.append(env)
            if isinstance(env.payload, Welcome) and self.player_id is None:
                self.player_id = env.payload.player_id
                self.color = env.payload.color


# ---------------------------------------------------------------------------
# checks and report

def _stream_envelopes(lines: list[bytes]) -> list[Envelope]:
    return [decode_line(line) for line in lines]


def _run_checks(scenario: Scenario, traces: list[BotTrace]) -> tuple[list[dict], dict]:
    checks: list[dict] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        checks.append({"check": name, "ok": bool(ok), "detail": detail})

    # Each bot is only present for a window of the room's life, so its
    # stream must be a gapless slice of one shared sequence, agreeing
    # byte-for-byte with every other bot wherever the windows overlap.
    authority: dict[int, bytes] = {}
    windows_ok = True
    agree = True
    for t in traces:
        seqs = [decode_line(line).seq for line in t.broadcast_lines]
        if seqs and seqs != list(range(seqs[0], seqs[0] + len(seqs))):
            windows_ok = False
        for seq, line in zip(seqs, t.broadcast_lines):
            if authority.setdefault(seq, line) != line:
                agree = False
    check("per_bot_window_gapless", windows_ok)
    check("broadcast_streams_consistent", agree, "overlapping observations agree")

    top = max(authority) if authority else 0
    total_order = sorted(authority) == list(range(1, top + 1))
    check("seq_total_order", total_order, f"{len(authority)} broadcasts")
    stream = _stream_envelopes([authority[s] for s in sorted(authority)])

    totals = [e.payload.total for e in stream if isinstance(e.payload, ScoreUpdate)]
    check("score_monotone", all(a <= b for a, b in zip(totals, totals[1:])), str(totals))
    final_score = totals[-1] if totals else 0

    missions = sum(isinstance(e.payload, MissionComplete) for e in stream)
    check("mission_complete_at_most_once", missions <= 1, f"{missions} seen")

    # colors of co-present players must never collide
    colors: dict[str, str] = {}
    color_ok = True
    for e in stream:
        if isinstance(e.payload, PlayerJoined):
            if e.payload.color in colors.values():
                color_ok = False
            colors[e.payload.player_id] = e.payload.color
        elif isinstance(e.payload, PlayerLeft):
            colors.pop(e.payload.player_id, None)
    check("color_uniqueness", color_ok)

    # independent score recomputation from the stream itself
    recomputed = sum(
        e.payload.points for e in stream if isinstance(e.payload, ActionBroadcast)
    )
    for e in stream:
        if isinstance(e.payload, Notification):
            m = _AWARD_RE.search(e.payload.text)
            if m:
                recomputed += int(m.group(1))
    check(
        "score_oracle",
        recomputed == final_score,
        f"stream says {recomputed}, server says {final_score}",
    )

    expect = scenario.expect
    if "final_score" in expect:
        check(
            "expected_final_score",
            final_score == expect["final_score"],
            f"got {final_score}, want {expect['final_score']}",
        )
    if "mission_complete" in expect:
        check(
            "expected_mission_complete",
            (missions == 1) == bool(expect["mission_complete"]),
            f"mission_complete={missions == 1}",
        )
    if "min_broadcasts" in expect:
        check(
            "min_broadcasts",
            len(stream) >= expect["min_broadcasts"],
            f"got {len(stream)}",
        )
    if "max_broadcasts" in expect:
        check(
            "max_broadcasts",
            len(stream) <= expect["max_broadcasts"],
            f"got {len(stream)}",
        )

    summary = {"final_score": final_score, "mission_complete": missions == 1}
    return checks, summary


def _report(
    scenario: Scenario, seed: int, transport: str, traces: list[BotTrace]
) -> dict:
    checks, summary = _run_checks(scenario, traces)
    return {
        "scenario": scenario.name,
        "transport": transport,
        "seed": seed,
        "bots": [
            {
                "name": t.name,
                "player_id": t.player_id,
                "color": t.color,
                "broadcasts": len(t.broadcast_lines),
            }
            for t in traces
        ],
        "final_score": summary["final_score"],
        "mission_complete": summary["mission_complete"],
        "checks": checks,
        "passed": all(c["ok"] for c in checks),
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# in-process lane: virtual clock, exact determinism

def run_scenario_inproc(
    scenario: Scenario, config: NarrativeConfig, seed: int, log_dir: str
) -> dict:
    room_seed = derive_room_seed(seed, scenario.room)
    state = create_room(scenario.room, config, room_seed)
    os.makedirs(log_dir, exist_ok=True)
    log = EventLog(os.path.join(log_dir, f"{scenario.room}.jsonl"))

    traces = [BotTrace(b.name) for b in scenario.bots]
    models = [_bot_latency(scenario, i) for i in range(len(scenario.bots))]
    members: set[int] = set()
    ever_joined = False

    timeline = sorted(
        (
            (step.at_ms, bot_idx, step_idx, step)
            for bot_idx, bot in enumerate(scenario.bots)
            for step_idx, step in enumerate(bot.steps)
        ),
        key=lambda item: (item[0], item[1], item[2]),
    )

    def deliver(bot_idx: int, env: Envelope, at_ms: int) -> None:
        trace = traces[bot_idx]
        delivery = max(trace._prev_delivery, at_ms + models[bot_idx].delay_ms())
        trace._prev_delivery = delivery
        trace.observe(env, encode_envelope(env))

    for at_ms, bot_idx, _step_idx, step in timeline:
        trace = traces[bot_idx]
        env = Envelope(
            seq=0,
            room_id=scenario.room,
            sender=trace.player_id or "",
            sent_at=at_ms,
            payload=step_payload(step),
        )
        log.append(env)
        state, outs = apply_event(state, env)
        for out in outs:
            log.append(out.envelope)
        log.flush()
        for out in outs:
            if out.recipient == BROADCAST:
                for idx in sorted(members):
                    deliver(idx, out.envelope, at_ms)
            else:
                if isinstance(out.envelope.payload, Welcome):
                    trace.observe(out.envelope, encode_envelope(out.envelope))
                    members.add(bot_idx)
                    ever_joined = True
                else:
                    deliver(bot_idx, out.envelope, at_ms)
        present = state.players.keys()
        for idx in list(members):
            if traces[idx].player_id not in present:
                members.discard(idx)

    snapshot_path = os.path.join(log_dir, f"{scenario.room}.snapshot.json")
    if ever_joined and not state.players:
        with open(snapshot_path, "wb") as fh:
            fh.write(state.snapshot_bytes())
    log.close()
    return _report(scenario, seed, "inproc", traces)


# ---------------------------------------------------------------------------
# tcp lane: real server, real sockets

async def _tcp_bot(
    scenario: Scenario,
    bot_idx: int,
    host: str,
    port: int,
    trace: BotTrace,
    start_monotonic: float,
) -> None:
    bot = scenario.bots[bot_idx]
    model = _bot_latency(scenario, bot_idx)
    reader, writer = await asyncio.open_connection(host, port)
    prev_delivery = 0.0
    drain_s = (scenario.latency.base_ms + scenario.latency.jitter_ms) / 1000 + 0.5

    # reads and simulated deliveries are decoupled: arrivals are stamped the
    # moment bytes leave the socket, so per-message delays overlap instead of
    # stacking while a previous delivery sleep is still running
    inbox: asyncio.Queue = asyncio.Queue()

    async def pump_reads(deadline_steps_done: asyncio.Event) -> None:
        while True:
            timeout = drain_s if deadline_steps_done.is_set() else 30.0
            try:
                raw = await asyncio.wait_for(reader.readline(), timeout)
            except asyncio.TimeoutError:
                if deadline_steps_done.is_set():
                    inbox.put_nowait(None)
                    return
                continue
            if not raw:
                inbox.put_nowait(None)
                return
            inbox.put_nowait((time.monotonic(), raw))

    async def deliver_reads() -> None:
        nonlocal prev_delivery
        while True:
            item = await inbox.get()
            if item is None:
                return
            arrival, raw = item
            delivery = max(prev_delivery, arrival + model.delay_ms() / 1000)
            prev_delivery = delivery
            pause = delivery - time.monotonic()
            if pause > 0:
                await asyncio.sleep(pause)
            env = decode_line(raw)
            trace.observe(env, raw)

    done = asyncio.Event()
    reader_task = asyncio.create_task(pump_reads(done))
    consumer_task = asyncio.create_task(deliver_reads())
    try:
        for step in bot.steps:
            target = start_monotonic + step.at_ms / 1000
            pause = target - time.monotonic()
            if pause > 0:
                await asyncio.sleep(pause)
            env = Envelope(
                seq=0,
                room_id=scenario.room,
                sender="",
                sent_at=step.at_ms,  # virtual time keeps logs reproducible
                payload=step_payload(step),
            )
            writer.write(encode_envelope(env))
            await writer.drain()
        done.set()
        await reader_task
        await consumer_task
    finally:
        for task in (reader_task, consumer_task):
            if not task.done():
                task.cancel()
        writer.close()


async def _run_tcp(
    scenario: Scenario, config: NarrativeConfig, seed: int, log_dir: str
) -> list[BotTrace]:
    server = AvatarServer(config, seed, log_dir)
    host, port = await server.start("127.0.0.1", 0)
    traces = [BotTrace(b.name) for b in scenario.bots]
    start = time.monotonic() + 0.05
    try:
        await asyncio.gather(
            *(
                _tcp_bot(scenario, i, host, port, traces[i], start)
                for i in range(len(scenario.bots))
            )
        )
        # let the room retire (writes the snapshot) before stopping
        for _ in range(100):
            if not server.rooms:
                break
            await asyncio.sleep(0.05)
    finally:
        await server.stop()
    return traces


def run_scenario_tcp(
    scenario: Scenario, config: NarrativeConfig, seed: int, log_dir: str
) -> dict:
    traces = asyncio.run(_run_tcp(scenario, config, seed, log_dir))
    return _report(scenario, seed, "tcp", traces)


def run_scenario(
    scenario: Scenario,
    config: NarrativeConfig,
    seed: int,
    log_dir: str,
    transport: str = "tcp",
) -> dict:
    if transport == "inproc":
        return run_scenario_inproc(scenario, config, seed, log_dir)
    if transport == "tcp":
        return run_scenario_tcp(scenario, config, seed, log_dir)
    raise ValueError(f"unknown transport {transport!r}")
