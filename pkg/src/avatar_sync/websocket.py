"""Minimal server-side WebSocket support over asyncio streams.

Just enough of RFC 6455 for the browser client: the HTTP upgrade
handshake, masked client frames, fragmentation, ping/pong and close. No
extensions, no compression, no client-side role. Kept dependency-free on
purpose; the environment ships no websocket package.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import struct
from typing import Optional

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_FRAME = 1 << 20  # nobody's gesture is a megabyte


class WsError(Exception):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def handshake_response(client_key: str) -> bytes:
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(client_key)}\r\n"
        "\r\n"
    ).encode("ascii")


def build_frame(opcode: int, payload: bytes, fin: bool = True) -> bytes:
    """Server frames are never masked."""
    head = bytearray([(0x80 if fin else 0) | opcode])
    n = len(payload)
    if n < 126:
        head.append(n)
    elif n < (1 << 16):
        head.append(126)
        head += struct.pack(">H", n)
    else:
        head.append(127)
        head += struct.pack(">Q", n)
    return bytes(head) + payload


async def read_frame(reader: asyncio.StreamReader) -> tuple[int, bool, bytes]:
    """Read one raw frame; returns (opcode, fin, unmasked payload)."""
    b1, b2 = await reader.readexactly(2)
    fin = bool(b1 & 0x80)
    if b1 & 0x70:
        raise WsError("reserved bits set (no extensions negotiated)")
    opcode = b1 & 0x0F
    masked = bool(b2 & 0x80)
    length = b2 & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", await reader.readexactly(2))
    elif length == 127:
        (length,) = struct.unpack(">Q", await reader.readexactly(8))
    if length > MAX_FRAME:
        raise WsError(f"frame too large: {length}")
    if not masked:
        # clients MUST mask; a bare frame means a broken peer
        raise WsError("client frame not masked")
    mask = await reader.readexactly(4)
    payload = bytearray(await reader.readexactly(length))
    for i in range(len(payload)):
        payload[i] ^= mask[i & 3]
    return opcode, fin, bytes(payload)


class WebSocketConn:
    """One upgraded connection. `recv_text` hides continuation frames and
    answers pings; `send_text` writes a single unfragmented frame."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self.closed = False

    async def send_text(self, text: str) -> None:
        if self.closed:
            return
        self.writer.write(build_frame(OP_TEXT, text.encode("utf-8")))
        await self.writer.drain()

    async def send_close(self, code: int = 1000) -> None:
        if self.closed:
            return
        self.closed = True
        try:
            self.writer.write(build_frame(OP_CLOSE, struct.pack(">H", code)))
            await self.writer.drain()
        except (ConnectionError, OSError):
            pass

    async def recv_text(self) -> Optional[str]:
        """Next complete text message, or None once the peer closes."""
        buffer = bytearray()
        message_opcode: Optional[int] = None
        while True:
            try:
                opcode, fin, payload = await read_frame(self.reader)
            except (asyncio.IncompleteReadError, ConnectionError, OSError):
                self.closed = True
                return None

            if opcode == OP_CLOSE:
                await self.send_close()
                return None
            if opcode == OP_PING:
                self.writer.write(build_frame(OP_PONG, payload))
                await self.writer.drain()
                continue
            if opcode == OP_PONG:
                continue

            if opcode in (OP_TEXT, OP_BINARY):
                if message_opcode is not None:
                    raise WsError("new message before previous one finished")
                message_opcode = opcode
                buffer += payload
            elif opcode == OP_CONT:
                if message_opcode is None:
                    raise WsError("continuation with nothing to continue")
                buffer += payload
            else:
                raise WsError(f"unsupported opcode {opcode}")

            if len(buffer) > MAX_FRAME:
                raise WsError("message too large")
            if fin:
                text = bytes(buffer).decode("utf-8")
                return text
