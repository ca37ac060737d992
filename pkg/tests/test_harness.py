"""Scenario harness: latency model, scenario loading, lane determinism."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from avatar_sync.errors import ValidationError
from avatar_sync.harness import (
    LatencyModel,
    LatencySpec,
    Scenario,
    inject_latency,
    load_scenario,
    report_json,
    run_scenario,
    run_scenario_inproc,
)

from conftest import REPO_ROOT

SCENARIO_DIR = REPO_ROOT / "scenarios"


def scenario_named(name: str) -> Scenario:
    return load_scenario(str(SCENARIO_DIR / f"{name}.json"))


# ---------------------------------------------------------------------------
# latency model


def test_zero_jitter_is_a_pure_shift():
    model = LatencyModel(base_ms=25, jitter_ms=0, seed=1)
    arrivals = [(0, "a"), (10, "b"), (40, "c")]
    out = list(inject_latency(model, arrivals))
    assert out == [(25, "a"), (35, "b"), (65, "c")]


def test_jitter_preserves_fifo_order():
    model = LatencyModel(base_ms=5, jitter_ms=500, seed=42)
    arrivals = [(t, t) for t in range(0, 200, 10)]
    out = list(inject_latency(model, arrivals))
    assert [item for _, item in out] == [item for _, item in arrivals]
    deliveries = [d for d, _ in out]
    assert deliveries == sorted(deliveries)
    assert all(d >= t + 5 for d, (t, _) in zip(deliveries, arrivals))


def test_latency_is_seeded():
    arrivals = [(t, t) for t in range(0, 100, 7)]
    one = list(inject_latency(LatencyModel(10, 300, seed=9), arrivals))
    two = list(inject_latency(LatencyModel(10, 300, seed=9), arrivals))
    other = list(inject_latency(LatencyModel(10, 300, seed=10), arrivals))
    assert one == two
    assert one != other


def test_delay_stays_in_band():
    model = LatencyModel(base_ms=20, jitter_ms=30, seed=3)
    for _ in range(200):
        assert 20 <= model.delay_ms() <= 50


# ---------------------------------------------------------------------------
# scenario files


def test_all_shipped_scenarios_load():
    names = sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))
    assert len(names) == 8
    for name in names:
        scn = scenario_named(name)
        assert 1 <= len(scn.bots) <= 8
        for bot in scn.bots:
            times = [s.at_ms for s in bot.steps]
            assert times == sorted(times)


def test_scenario_validation():
    base = json.loads((SCENARIO_DIR / "solo_toques.json").read_text())
    too_many = dict(base, bots=[dict(base["bots"][0], name=f"b{i}") for i in range(9)])
    with pytest.raises(ValidationError):
        load_scenario(too_many)
    decreasing = json.loads(json.dumps(base))
    decreasing["bots"][0]["script"][0]["at_ms"] = 10**9
    with pytest.raises(ValidationError):
        load_scenario(decreasing)
    alien = json.loads(json.dumps(base))
    alien["bots"][0]["script"][0] = {"at_ms": 0, "do": "teleport"}
    with pytest.raises(ValidationError):
        load_scenario(alien)
    with pytest.raises(ValidationError):
        load_scenario(dict(base, bots=[]))


def test_random_bots_expand_deterministically():
    scn_a = scenario_named("random_toques")
    scn_b = scenario_named("random_toques")
    assert scn_a == scn_b
    assert all(bot.steps for bot in scn_a.bots)


# ---------------------------------------------------------------------------
# lanes


def test_inproc_run_is_deterministic(tmp_path, story_config):
    scn = scenario_named("duo_avatar")
    r1 = run_scenario_inproc(scn, story_config, 7, str(tmp_path / "a"))
    r2 = run_scenario_inproc(scn, story_config, 7, str(tmp_path / "b"))
    assert report_json(r1) == report_json(r2)
    log_a = (tmp_path / "a" / "a1.jsonl").read_bytes()
    log_b = (tmp_path / "b" / "a1.jsonl").read_bytes()
    assert log_a == log_b
    snap_a = (tmp_path / "a" / "a1.snapshot.json").read_bytes()
    assert snap_a == (tmp_path / "b" / "a1.snapshot.json").read_bytes()


def test_inproc_checks_pass_for_all_scenarios(tmp_path, story_config):
    for path in sorted(SCENARIO_DIR.glob("*.json")):
        scn = load_scenario(str(path))
        report = run_scenario_inproc(scn, story_config, 7, str(tmp_path / path.stem))
        failed = [c for c in report["checks"] if not c["ok"]]
        assert not failed, f"{path.stem}: {failed}"
        assert report["passed"]


def test_report_shape(tmp_path, story_config):
    report = run_scenario_inproc(
        scenario_named("solo_toques"), story_config, 7, str(tmp_path)
    )
    assert report["scenario"] == "solo_toques"
    assert report["transport"] == "inproc"
    assert report["seed"] == 7
    assert report["final_score"] == 0
    assert report["mission_complete"] is False
    assert [b["player_id"] for b in report["bots"]] == ["p1"]
    names = {c["check"] for c in report["checks"]}
    assert {
        "per_bot_window_gapless",
        "broadcast_streams_consistent",
        "seq_total_order",
        "score_monotone",
        "mission_complete_at_most_once",
        "color_uniqueness",
        "score_oracle",
    } <= names
    # the wire report is valid minified-ish JSON, round-trips losslessly
    assert json.loads(report_json(report)) == report


def test_tcp_and_inproc_logs_are_byte_identical(tmp_path, story_config):
    """The twin-lane guarantee: same scenario, same seed, same log bytes."""
    scn = scenario_named("duo_avatar")
    tcp = run_scenario(scn, story_config, 7, str(tmp_path / "tcp"), transport="tcp")
    assert tcp["passed"], tcp["checks"]
    inproc = run_scenario(scn, story_config, 7, str(tmp_path / "in"), transport="inproc")
    assert inproc["passed"]
    assert tcp["final_score"] == inproc["final_score"] == 8
    log_tcp = (tmp_path / "tcp" / "a1.jsonl").read_bytes()
    log_in = (tmp_path / "in" / "a1.jsonl").read_bytes()
    assert log_tcp == log_in
    assert (tmp_path / "tcp" / "a1.snapshot.json").read_bytes() == (
        tmp_path / "in" / "a1.snapshot.json"
    ).read_bytes()


def test_unknown_transport_refused(story_config, tmp_path):
    with pytest.raises(ValueError):
        run_scenario(scenario_named("solo_toques"), story_config, 7, str(tmp_path), transport="carrier_pigeon")
