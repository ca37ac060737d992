"""Network front-end: transports in, total order out.

One listening port speaks three dialects, sniffed from the first byte: a
line starting with "{" is a raw newline-delimited JSON client; anything
else is HTTP, which either upgrades to a WebSocket (same envelopes, one
per text frame) or serves the static webclient.

Every room runs a single worker task that owns its state: envelopes are
queued per room and applied strictly in arrival order, which is what makes
the server's seq assignment a total order. The worker logs the input and
all outputs (write-ahead, flushed) before any byte reaches a client.
Identity is connection-bound: whatever sender a client claims is replaced
by the id the room assigned when it welcomed that connection.
"""

from __future__ import annotations

import asyncio
import itertools
import os
import time
from dataclasses import replace
from typing import Optional

from .errors import BindError, ProtocolError
from .eventlog import EventLog, derive_room_seed
from .narrative import NarrativeConfig
from .protocol import (
    SERVER_SENDER,
    Envelope,
    ErrorReply,
    Join,
    Leave,
    Ping,
    Pong,
    Welcome,
    decode_line,
    encode_envelope,
)
from .session import BROADCAST, RoomState, apply_event, create_room
from .websocket import WebSocketConn, WsError, handshake_response

HEARTBEAT_S = 10.0
IDLE_TIMEOUT_S = 30.0

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript",
    ".mjs": "application/javascript",
    ".css": "text/css",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def now_ms() -> int:
    return int(time.time() * 1000)


class ClientConn:
    """Transport-agnostic handle for one connected client."""

    _ids = itertools.count(1)

    def __init__(self, server: "AvatarServer", kind: str):
        self.id = next(self._ids)
        self.server = server
        self.kind = kind  # "tcp" | "ws"
        self.player_id: Optional[str] = None
        self.room_id: Optional[str] = None
        self.last_seen = time.monotonic()
        self.dropped = False
        self.outbox: asyncio.Queue[Optional[bytes]] = asyncio.Queue()
        self._tcp_writer: Optional[asyncio.StreamWriter] = None
        self._ws: Optional[WebSocketConn] = None

    def send(self, line: bytes) -> None:
        if not self.dropped:
            self.outbox.put_nowait(line)

    async def _send_loop(self) -> None:
        while True:
            line = await self.outbox.get()
            if line is None:
                return
            try:
                if self._ws is not None:
                    await self._ws.send_text(line.decode("utf-8").rstrip("\n"))
                elif self._tcp_writer is not None:
                    self._tcp_writer.write(line)
                    await self._tcp_writer.drain()
            except (ConnectionError, OSError):
                await self.server.drop_conn(self)
                return


class RoomHost:
    """One room: its state, its log, its queue, its single worker."""

    def __init__(self, server: "AvatarServer", room_id: str):
        self.server = server
        self.room_id = room_id
        seed = derive_room_seed(server.base_seed, room_id)
        self.state: RoomState = create_room(room_id, server.config, seed)
        self.log = EventLog(os.path.join(server.log_dir, f"{room_id}.jsonl"))
        self.queue: asyncio.Queue[Optional[tuple[Optional[ClientConn], Envelope]]] = (
            asyncio.Queue()
        )
        self.members: dict[int, ClientConn] = {}
        self.ever_joined = False
        self.worker = asyncio.create_task(self._run())

    async def _run(self) -> None:
        while True:
            item = await self.queue.get()
            if item is None:
                return
            conn, env = item
            self._process(conn, env)
            if self.ever_joined and not self.state.players:
                self.server.retire_room(self)
                return

    def _process(self, conn: Optional[ClientConn], env: Envelope) -> None:
        self.log.append(env)
        self.state, outs = apply_event(self.state, env)
        for out in outs:
            self.log.append(out.envelope)
        self.log.flush()  # write-ahead: durable before anyone hears about it

        for out in outs:
            payload = out.envelope.payload
            if out.recipient == BROADCAST:
                for member in self.members.values():
                    member.send(encode_envelope(out.envelope))
            elif conn is not None:
                if isinstance(payload, Welcome):
                    conn.player_id = payload.player_id
                    conn.room_id = self.room_id
                    self.members[conn.id] = conn
                    self.ever_joined = True
                conn.send(encode_envelope(out.envelope))

        # a voluntary leave unbinds the connection after delivery
        present = self.state.players.keys()
        for member in list(self.members.values()):
            if member.player_id is not None and member.player_id not in present:
                member.player_id = None
                member.room_id = None
                del self.members[member.id]

    def close(self) -> None:
        snapshot_path = os.path.join(self.server.log_dir, f"{self.room_id}.snapshot.json")
        with open(snapshot_path, "wb") as fh:
            fh.write(self.state.snapshot_bytes())
        self.log.close()


class AvatarServer:
    def __init__(
        self,
        config: NarrativeConfig,
        base_seed: int,
        log_dir: str,
        web_root: Optional[str] = None,
        heartbeat_s: float = HEARTBEAT_S,
        idle_timeout_s: float = IDLE_TIMEOUT_S,
    ):
        self.config = config
        self.base_seed = base_seed
        self.log_dir = log_dir
        self.web_root = os.path.realpath(web_root) if web_root else None
        self.heartbeat_s = heartbeat_s
        self.idle_timeout_s = idle_timeout_s
        self.rooms: dict[str, RoomHost] = {}
        self.conns: dict[int, ClientConn] = {}
        self._server: Optional[asyncio.base_events.Server] = None
        self._heartbeat_task: Optional[asyncio.Task] = None
        os.makedirs(log_dir, exist_ok=True)

    # -- lifecycle ----------------------------------------------------------

    async def start(self, host: str, port: int) -> tuple[str, int]:
        try:
            self._server = await asyncio.start_server(self._handle_conn, host, port)
        except OSError as exc:
            raise BindError(f"cannot bind {host}:{port}: {exc}") from None
        self._heartbeat_task = asyncio.create_task(self._heartbeat())
        sock = self._server.sockets[0].getsockname()
        return sock[0], sock[1]

    async def serve_forever(self) -> None:
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    async def stop(self) -> None:
        if self._heartbeat_task is not None:
            self._heartbeat_task.cancel()
        for room in list(self.rooms.values()):
            room.queue.put_nowait(None)
            await asyncio.wait_for(room.worker, timeout=5)
            room.close()
        self.rooms.clear()
        for conn in list(self.conns.values()):
            await self.drop_conn(conn, synthesize_leave=False)
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    def retire_room(self, room: RoomHost) -> None:
        room.close()
        self.rooms.pop(room.room_id, None)

    # -- connection plumbing -------------------------------------------------

    async def _handle_conn(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            first = await reader.read(1)
        except (ConnectionError, OSError):
            writer.close()
            return
        if not first:
            writer.close()
            return
        if first == b"{":
            await self._ndjson_conn(first, reader, writer)
        else:
            await self._http_conn(first, reader, writer)

    async def _ndjson_conn(
        self, first: bytes, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        conn = ClientConn(self, "tcp")
        conn._tcp_writer = writer
        self.conns[conn.id] = conn
        sender = asyncio.create_task(conn._send_loop())
        prefix = first
        try:
            while True:
                try:
                    line = prefix + await reader.readline()
                except (ValueError, ConnectionError, OSError):
                    break
                prefix = b""
                if not line:
                    break
                if not line.strip():
                    continue
                conn.last_seen = time.monotonic()
                await self._handle_line(conn, line)
        finally:
            sender.cancel()
            await self.drop_conn(conn)
            writer.close()

    async def _http_conn(
        self, first: bytes, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        try:
            head = first + await asyncio.wait_for(
                reader.readuntil(b"\r\n\r\n"), timeout=10
            )
        except (asyncio.IncompleteReadError, asyncio.TimeoutError, ConnectionError, OSError):
            writer.close()
            return
        request_line, _, rest = head.partition(b"\r\n")
        parts = request_line.decode("latin-1").split()
        if len(parts) != 3:
            writer.close()
            return
        method, path, _version = parts
        headers: dict[str, str] = {}
        for raw in rest.decode("latin-1").split("\r\n"):
            name, sep, value = raw.partition(":")
            if sep:
                headers[name.strip().lower()] = value.strip()

        if headers.get("upgrade", "").lower() == "websocket":
            key = headers.get("sec-websocket-key")
            if not key:
                writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
                writer.close()
                return
            writer.write(handshake_response(key))
            await writer.drain()
            await self._ws_conn(reader, writer)
            return

        self._serve_static(method, path, writer)
        try:
            await writer.drain()
        except (ConnectionError, OSError):
            pass
        writer.close()

    async def _ws_conn(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        ws = WebSocketConn(reader, writer)
        conn = ClientConn(self, "ws")
        conn._ws = ws
        self.conns[conn.id] = conn
        sender = asyncio.create_task(conn._send_loop())
        try:
            while True:
                try:
                    text = await ws.recv_text()
                except WsError:
                    break
                if text is None:
                    break
                conn.last_seen = time.monotonic()
                for piece in text.splitlines():
                    if piece.strip():
                        await self._handle_line(conn, piece.encode("utf-8"))
        finally:
            sender.cancel()
            await self.drop_conn(conn)
            writer.close()

    def _serve_static(self, method: str, path: str, writer: asyncio.StreamWriter) -> None:
        if method not in ("GET", "HEAD"):
            writer.write(b"HTTP/1.1 405 Method Not Allowed\r\n\r\n")
            return
        path = path.split("?", 1)[0]
        if self.web_root is None:
            if path == "/":
                body = b"avatar-sync server\n"
                writer.write(
                    b"HTTP/1.1 200 OK\r\nContent-Type: text/plain\r\n"
                    + f"Content-Length: {len(body)}\r\n\r\n".encode()
                    + (body if method == "GET" else b"")
                )
            else:
                writer.write(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.web_root, rel))
        if not full.startswith(self.web_root + os.sep) and full != self.web_root:
            writer.write(b"HTTP/1.1 403 Forbidden\r\nContent-Length: 0\r\n\r\n")
            return
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            writer.write(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
            return
        with open(full, "rb") as fh:
            body = fh.read()
        ctype = _CONTENT_TYPES.get(os.path.splitext(full)[1], "application/octet-stream")
        writer.write(
            b"HTTP/1.1 200 OK\r\n"
            + f"Content-Type: {ctype}\r\nContent-Length: {len(body)}\r\n"
            "Connection: close\r\n\r\n".encode()
            + (body if method == "GET" else b"")
        )

    # -- envelope routing ----------------------------------------------------

    async def _handle_line(self, conn: ClientConn, line: bytes) -> None:
        try:
            env = decode_line(line)
        except ProtocolError as exc:
            self._direct(conn, "", ErrorReply(code=exc.code, text=str(exc)))
            return
        await self._route(conn, env)

    async def _route(self, conn: ClientConn, env: Envelope) -> None:
        payload = env.payload
        if isinstance(payload, Pong):
            return  # liveness already noted
        if isinstance(payload, Ping):
            self._direct(conn, env.room_id, Pong())
            return

        env = replace(env, sender=conn.player_id or "")

        if conn.room_id is not None and env.room_id != conn.room_id:
            self._direct(
                conn,
                env.room_id,
                ErrorReply(code="bad_input", text="this connection is in another room"),
            )
            return

        room = self.rooms.get(env.room_id)
        if room is None:
            if not isinstance(payload, Join):
                self._direct(
                    conn,
                    env.room_id,
                    ErrorReply(code="bad_input", text="no such room; join first"),
                )
                return
            if not env.room_id:
                self._direct(
                    conn,
                    env.room_id,
                    ErrorReply(code="bad_input", text="room_id must be non-empty"),
                )
                return
            room = RoomHost(self, env.room_id)
            self.rooms[env.room_id] = room
        await room.queue.put((conn, env))

    def _direct(self, conn: ClientConn, room_id: str, payload) -> None:
        env = Envelope(
            seq=0,
            room_id=room_id,
            sender=SERVER_SENDER,
            sent_at=now_ms(),
            payload=payload,
        )
        conn.send(encode_envelope(env))

    async def drop_conn(self, conn: ClientConn, synthesize_leave: bool = True) -> None:
        if conn.dropped:
            return
        conn.dropped = True
        self.conns.pop(conn.id, None)
        if synthesize_leave and conn.player_id and conn.room_id in self.rooms:
            room = self.rooms[conn.room_id]
            room.members.pop(conn.id, None)
            env = Envelope(
                seq=0,
                room_id=conn.room_id,
                sender=conn.player_id,
                sent_at=now_ms(),
                payload=Leave(),
            )
            await room.queue.put((None, env))
        conn.outbox.put_nowait(None)
        if conn._ws is not None:
            await conn._ws.send_close()

    async def _heartbeat(self) -> None:
        while True:
            await asyncio.sleep(self.heartbeat_s)
            cutoff = time.monotonic() - self.idle_timeout_s
            for conn in list(self.conns.values()):
                if conn.last_seen < cutoff:
                    await self.drop_conn(conn)  # silent too long: treat as gone
                else:
                    self._direct(conn, conn.room_id or "", Ping())
