"""CLI: argument wiring, exit codes, report output."""

from __future__ import annotations

import json

import pytest

from avatar_sync.cli import build_parser, main

from conftest import REPO_ROOT

STORY = str(REPO_ROOT / "story.json")
SCENARIO = str(REPO_ROOT / "scenarios" / "solo_toques.json")


def test_parser_covers_all_commands():
    parser = build_parser()
    args = parser.parse_args(["serve", "--bind", "127.0.0.1:9000"])
    assert args.bind == ("127.0.0.1", 9000)
    args = parser.parse_args(["sim", "run", "--scenario", SCENARIO, "--transport", "inproc"])
    assert args.transport == "inproc"
    args = parser.parse_args(["replay", "verify", "--log", "x.jsonl"])
    assert args.log == "x.jsonl"
    args = parser.parse_args(["config", "lint", STORY])
    assert args.file == STORY


def test_bind_rejects_garbage():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["serve", "--bind", "nocolon"])


def test_config_lint_ok(capsys):
    assert main(["config", "lint", STORY]) == 0
    assert "ok" in capsys.readouterr().out


def test_config_lint_findings(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"words": ["UP"], "mission_target": 0}))
    assert main(["config", "lint", str(bad)]) == 1
    out = capsys.readouterr().out
    assert "mission_target" in out and "words[0]" in out and "hidden_objects" in out


def test_config_lint_bad_json(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{")
    assert main(["config", "lint", str(bad)]) == 1


def test_sim_run_then_replay_verify(tmp_path, capsys):
    log_dir = tmp_path / "logs"
    code = main(
        [
            "sim", "run",
            "--scenario", SCENARIO,
            "--config", STORY,
            "--seed", "7",
            "--log-dir", str(log_dir),
            "--transport", "inproc",
        ]
    )
    report = json.loads(capsys.readouterr().out)
    assert code == 0
    assert report["passed"] is True
    assert report["final_score"] == 0

    code = main(
        [
            "replay", "verify",
            "--log", str(log_dir / "t1.jsonl"),
            "--config", STORY,
            "--seed", "7",
        ]
    )
    result = json.loads(capsys.readouterr().out)
    assert code == 0
    assert result["snapshot_match"] is True
    assert result["players_remaining"] == 0


def test_replay_verify_wrong_seed_fails(tmp_path, capsys):
    log_dir = tmp_path / "logs"
    main(
        [
            "sim", "run",
            "--scenario", str(REPO_ROOT / "scenarios" / "duo_surpresa_word.json"),
            "--config", STORY,
            "--seed", "7",
            "--log-dir", str(log_dir),
            "--transport", "inproc",
        ]
    )
    capsys.readouterr()
    code = main(
        ["replay", "verify", "--log", str(log_dir / "w1.jsonl"), "--config", STORY, "--seed", "8"]
    )
    assert code == 1


def test_sim_run_missing_scenario(tmp_path, capsys):
    assert main(["sim", "run", "--scenario", str(tmp_path / "nope.json"), "--config", STORY]) == 2
