"""Framed request/reply protocol between the web server and the backend.

Frame layout (integers big-endian / network order):

    "AESR" | u8 version=1 | u8 kind | u64 request_id | u32 payload_len | payload

Kinds: 0 request (payload = PPM bytes), 1 reply (payload = UTF-8 JSON
``{"score": x, "model_id": s}``), 2 error (payload = UTF-8 JSON
``{"code": s, "message": s}``).
"""

from __future__ import annotations

import json
import socket
import struct
from dataclasses import dataclass

MAGIC = b"AESR"
VERSION = 1

KIND_REQUEST = 0
KIND_REPLY = 1
KIND_ERROR = 2

HEADER = struct.Struct(">4sBBQI")
DEFAULT_MAX_PAYLOAD = 16 * 1024 * 1024


class FrameError(ValueError):
    """Malformed frame; `code` names the failure for error replies."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Frame:
    kind: int
    request_id: int
    payload: bytes


def pack_frame(kind: int, request_id: int, payload: bytes) -> bytes:
    if kind not in (KIND_REQUEST, KIND_REPLY, KIND_ERROR):
        raise ValueError(f"invalid frame kind {kind}")
    return HEADER.pack(MAGIC, VERSION, kind, request_id, len(payload)) + payload


def parse_header(raw: bytes) -> tuple[int, int, int]:
    """Validate an 18-byte header; returns (kind, request_id, payload_len)."""
    magic, version, kind, request_id, payload_len = HEADER.unpack(raw)
    if magic != MAGIC:
        raise FrameError("bad_magic", f"bad magic {magic!r}")
    if version != VERSION:
        raise FrameError("bad_version", f"unsupported protocol version {version}")
    if kind not in (KIND_REQUEST, KIND_REPLY, KIND_ERROR):
        raise FrameError("bad_kind", f"unknown frame kind {kind}")
    return kind, request_id, payload_len


def recv_exact(sock: socket.socket, n: int) -> bytes | None:
    """Read exactly n bytes; None on clean EOF at a frame boundary."""
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            if remaining == n:
                return None
            raise FrameError("truncated", f"connection closed mid-frame ({remaining} bytes short)")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket,
               max_payload: int = DEFAULT_MAX_PAYLOAD) -> Frame | None:
    """Read one well-formed frame; None on EOF before a new frame starts."""
    raw = recv_exact(sock, HEADER.size)
    if raw is None:
        return None
    kind, request_id, payload_len = parse_header(raw)
    if payload_len > max_payload:
        raise FrameError("oversize", f"payload {payload_len} exceeds cap {max_payload}")
    payload = recv_exact(sock, payload_len) if payload_len else b""
    if payload is None:
        raise FrameError("truncated", "connection closed before payload")
    return Frame(kind, request_id, payload)


def encode_reply(score: float, model_id: str) -> bytes:
    return json.dumps({"score": score, "model_id": model_id}).encode("utf-8")


def decode_reply(payload: bytes) -> tuple[float, str]:
    data = json.loads(payload.decode("utf-8"))
    return float(data["score"]), str(data["model_id"])


def encode_error(code: str, message: str) -> bytes:
    return json.dumps({"code": code, "message": message}).encode("utf-8")


def decode_error(payload: bytes) -> tuple[str, str]:
    data = json.loads(payload.decode("utf-8"))
    return str(data["code"]), str(data["message"])
