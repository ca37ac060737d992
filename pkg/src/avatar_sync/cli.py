"""Command line front door.

    avatar-sync serve --bind 0.0.0.0:8765 --config story.json --seed 42 --log-dir logs/
    avatar-sync sim run --scenario scenarios/duo_avatar.json --seed 7
    avatar-sync replay verify --log logs/r1.jsonl --config story.json --seed 7
    avatar-sync config lint story.json

AVATAR_SYNC_LOG_DIR overrides the default log directory.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from typing import Optional

from .errors import BindError, ConfigError, LogError
from .eventlog import replay_log, room_id_for_log
from .harness import load_scenario, report_json, run_scenario
from .narrative import load_config, validate_config
from .server import AvatarServer


def _default_log_dir() -> str:
    return os.environ.get("AVATAR_SYNC_LOG_DIR", "logs")


def _parse_bind(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected <addr:port>")
    try:
        return host or "0.0.0.0", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avatar-sync",
        description="Authoritative session server, simulator and log tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the real-time server")
    serve.add_argument("--bind", type=_parse_bind, default=("0.0.0.0", 8765),
                       metavar="ADDR:PORT")
    serve.add_argument("--config", default="story.json")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--log-dir", default=None)
    serve.add_argument("--web-root", default=None,
                       help="directory with the built webclient to serve over HTTP")

    sim = sub.add_parser("sim", help="scenario simulator")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    sim_run = sim_sub.add_parser("run", help="run one scenario and report")
    sim_run.add_argument("--scenario", required=True)
    sim_run.add_argument("--seed", type=int, default=0)
    sim_run.add_argument("--config", default="story.json")
    sim_run.add_argument("--log-dir", default=None)
    sim_run.add_argument("--transport", choices=("tcp", "inproc"), default="tcp")

    replay = sub.add_parser("replay", help="event log tools")
    replay_sub = replay.add_subparsers(dest="replay_command", required=True)
    verify = replay_sub.add_parser("verify", help="re-reduce a log and compare")
    verify.add_argument("--log", required=True)
    verify.add_argument("--config", default="story.json")
    verify.add_argument("--seed", type=int, default=0)

    config = sub.add_parser("config", help="narrative config tools")
    config_sub = config.add_subparsers(dest="config_command", required=True)
    lint = config_sub.add_parser("lint", help="report every problem in a story file")
    lint.add_argument("file")

    return parser


def _cmd_serve(args) -> int:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    host, port = args.bind
    server = AvatarServer(
        config,
        args.seed,
        args.log_dir or _default_log_dir(),
        web_root=args.web_root,
    )

    async def run() -> None:
        bound_host, bound_port = await server.start(host, port)
        print(f"listening on {bound_host}:{bound_port} (tcp ndjson + websocket + http)")
        try:
            await server.serve_forever()
        except asyncio.CancelledError:
            pass
        finally:
            await server.stop()

    try:
        asyncio.run(run())
    except BindError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        print("shutting down")
    return 0


def _cmd_sim_run(args) -> int:
    try:
        config = load_config(args.config)
        scenario = load_scenario(args.scenario)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_scenario(
        scenario,
        config,
        args.seed,
        args.log_dir or _default_log_dir(),
        transport=args.transport,
    )
    sys.stdout.write(report_json(report))
    return 0 if report["passed"] else 1


def _cmd_replay_verify(args) -> int:
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        state, outputs = replay_log(args.log, config, args.seed)
    except (LogError, OSError) as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 1

    room_id = room_id_for_log(args.log)
    result = {
        "log": args.log,
        "room": room_id,
        "outputs": len(outputs),
        "final_score": state.score,
        "mission_complete": state.mission_complete,
        "players_remaining": len(state.players),
    }
    snapshot_path = os.path.join(
        os.path.dirname(args.log) or ".", f"{room_id}.snapshot.json"
    )
    if os.path.exists(snapshot_path):
        with open(snapshot_path, "rb") as fh:
            recorded = fh.read()
        result["snapshot_match"] = recorded == state.snapshot_bytes()
    print(json.dumps(result, sort_keys=True, indent=2))
    if result.get("snapshot_match") is False:
        return 1
    return 0


def _cmd_config_lint(args) -> int:
    try:
        with open(args.file, "rb") as fh:
            obj = json.loads(fh.read().decode("utf-8"))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        print(f"error: {args.file}: not valid UTF-8 JSON: {exc}", file=sys.stderr)
        return 1
    findings = validate_config(obj)
    for finding in findings:
        print(str(finding))
    if findings:
        return 1
    print(f"{args.file}: ok")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "sim":
        return _cmd_sim_run(args)
    if args.command == "replay":
        return _cmd_replay_verify(args)
    if args.command == "config":
        return _cmd_config_lint(args)
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
