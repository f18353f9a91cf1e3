"""Inference backend: loads weights once, scores PPM payloads over TCP.

Model state is immutable for the process lifetime; per-connection handler
threads share it read-only, so concurrent requests are safe and identical
inputs always score identically. A malformed frame earns an error frame and
the connection stays open: the reader re-synchronizes by scanning the byte
stream for the next frame magic.
"""

from __future__ import annotations

import socket
import socketserver
from pathlib import Path

from .. import nn
from ..imaging import PpmError, decode_ppm, resize_bilinear, to_tensor
from . import protocol as P


class BackendUnavailable(ConnectionError):
    """Backend not reachable (connect, send, or receive failed)."""


class ScoreRejected(ValueError):
    """Backend answered with an error frame."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class ScoringModel:
    """Loaded network plus its preprocessing; a pure function of image bytes."""

    def __init__(self, net: nn.NetworkSpec, params: nn.Parameters):
        self.net = net
        self.params = params
        self.model_id = net.name

    @classmethod
    def from_file(cls, weights_path: str | Path) -> "ScoringModel":
        net, params = nn.load_weights(weights_path)
        return cls(net, params)

    def score_ppm(self, image_bytes: bytes) -> float:
        """decode -> resize to net input -> mean-subtract -> forward -> p1."""
        image = decode_ppm(image_bytes)
        _, h, w = self.net.input_shape
        if (image.width, image.height) != (w, h):
            image = resize_bilinear(image, w, h)
        tensor = to_tensor(image, self.net.channel_mean)
        logits, _ = nn.forward(self.net, self.params, tensor, mode=nn.INFER)
        return nn.softmax_prob(logits)[1]


def score_image(model: ScoringModel, image_bytes: bytes, request_id: int = 0) -> dict:
    """In-process scoring; the exact pipeline the protocol path runs."""
    return {
        "request_id": request_id,
        "score": model.score_ppm(image_bytes),
        "model_id": model.model_id,
    }


class _FrameStream:
    """Buffered frame reader that can re-sync after malformed input."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buf = bytearray()

    def _fill(self, n: int) -> bool:
        while len(self.buf) < n:
            chunk = self.sock.recv(65536)
            if not chunk:
                return False
            self.buf += chunk
        return True

    def read_frame(self, max_payload: int) -> P.Frame | None:
        """One frame, None on EOF at a boundary; FrameError on malformed data."""
        if not self._fill(P.HEADER.size):
            if self.buf:
                raise P.FrameError("truncated", "connection closed mid-header")
            return None
        kind, request_id, payload_len = P.parse_header(bytes(self.buf[:P.HEADER.size]))
        if payload_len > max_payload:
            raise P.FrameError("oversize",
                               f"payload {payload_len} exceeds cap {max_payload}")
        if not self._fill(P.HEADER.size + payload_len):
            raise P.FrameError("truncated", "connection closed mid-payload")
        payload = bytes(self.buf[P.HEADER.size:P.HEADER.size + payload_len])
        del self.buf[:P.HEADER.size + payload_len]
        return P.Frame(kind, request_id, payload)

    def resync(self, skip: int) -> bool:
        """Drop `skip` bytes, then scan forward to the next frame magic."""
        del self.buf[:skip]
        while True:
            idx = self.buf.find(P.MAGIC)
            if idx >= 0:
                del self.buf[:idx]
                return True
            if len(self.buf) > 3:
                del self.buf[: len(self.buf) - 3]  # a magic may straddle reads
            chunk = self.sock.recv(65536)
            if not chunk:
                return False
            self.buf += chunk


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        stream = _FrameStream(self.request)
        model: ScoringModel = self.server.model
        while True:
            try:
                frame = stream.read_frame(self.server.max_payload)
            except P.FrameError as exc:
                try:
                    self.request.sendall(
                        P.pack_frame(P.KIND_ERROR, 0, P.encode_error(exc.code, str(exc))))
                except OSError:
                    return
                if exc.code == "truncated":
                    return
                # skip 1 byte on a bad magic, otherwise the whole bad header
                if not stream.resync(1 if exc.code == "bad_magic" else P.HEADER.size):
                    return
                continue
            except OSError:
                return
            if frame is None:
                return
            try:
                self.request.sendall(self._respond(model, frame))
            except OSError:
                return

    @staticmethod
    def _respond(model: ScoringModel, frame: P.Frame) -> bytes:
        if frame.kind != P.KIND_REQUEST:
            return P.pack_frame(P.KIND_ERROR, frame.request_id,
                                P.encode_error("bad_kind", "expected a request frame"))
        try:
            score = model.score_ppm(frame.payload)
        except PpmError as exc:
            return P.pack_frame(P.KIND_ERROR, frame.request_id,
                                P.encode_error("bad_image", str(exc)))
        return P.pack_frame(P.KIND_REPLY, frame.request_id,
                            P.encode_reply(score, model.model_id))


class BackendServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, model: ScoringModel, bind_address: tuple[str, int],
                 max_payload: int = P.DEFAULT_MAX_PAYLOAD):
        super().__init__(bind_address, _Handler)
        self.model = model
        self.max_payload = max_payload

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[0], self.server_address[1]


def create_backend_server(weights_path: str | Path, bind_address: tuple[str, int],
                          max_payload: int = P.DEFAULT_MAX_PAYLOAD) -> BackendServer:
    return BackendServer(ScoringModel.from_file(weights_path), bind_address, max_payload)


def backend_serve(weights_path: str | Path, bind_address: tuple[str, int]) -> None:
    """Load weights and serve scoring requests until interrupted."""
    server = create_backend_server(weights_path, bind_address)
    with server:
        server.serve_forever()


def request_score(address: tuple[str, int], image_bytes: bytes,
                  request_id: int = 0, timeout: float = 2.0) -> tuple[float, str]:
    """Client side of the protocol: one request, exactly one reply.

    Raises BackendUnavailable when the backend cannot be reached and
    ScoreRejected when it answers with an error frame.
    """
    try:
        with socket.create_connection(address, timeout=timeout) as sock:
            sock.sendall(P.pack_frame(P.KIND_REQUEST, request_id, image_bytes))
            reply = P.read_frame(sock)
    except (OSError, P.FrameError) as exc:
        raise BackendUnavailable(f"backend at {address[0]}:{address[1]}: {exc}") from exc
    if reply is None:
        raise BackendUnavailable(f"backend at {address[0]}:{address[1]} closed the connection")
    if reply.kind == P.KIND_ERROR:
        code, message = P.decode_error(reply.payload)
        raise ScoreRejected(code, message)
    if reply.kind != P.KIND_REPLY or reply.request_id != request_id:
        raise BackendUnavailable(
            f"protocol violation: kind {reply.kind}, id {reply.request_id} != {request_id}")
    score, model_id = P.decode_reply(reply.payload)
    return score, model_id


def probe_backend(address: tuple[str, int], timeout: float = 2.0) -> bool:
    """Health probe: can we open a TCP connection to the backend?"""
    try:
        with socket.create_connection(address, timeout=timeout):
            return True
    except OSError:
        return False
