"""HTTP front: static frontend files plus the /api/score upload endpoint.

POST /api/score forwards the uploaded PPM to the inference backend over the
framed TCP protocol (2 s timeout, no retries) and returns
``{"score": x, "model_id": s}``. GET /api/health reports liveness; GET /
and /assets/* serve the frontend from static_dir.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from ..imaging import PpmError, decode_ppm
from .backend import BackendUnavailable, ScoreRejected, probe_backend, request_score

log = logging.getLogger(__name__)

DEFAULT_MAX_UPLOAD = 8 * 1024 * 1024
BACKEND_TIMEOUT = 2.0

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # route through logging, not stderr
        log.debug("%s %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/api/health":
            self._send_json(200, {"status": "ok"})
            return
        if self.path == "/":
            self._send_file("index.html")
            return
        if self.path.startswith("/assets/"):
            self._send_file(self.path.lstrip("/"))
            return
        self._send_json(404, {"error": f"no such path: {self.path}"})

    def _send_file(self, relative: str) -> None:
        static_dir: Path | None = self.server.static_dir
        if static_dir is None:
            self._send_json(404, {"error": "no static directory configured"})
            return
        target = (static_dir / relative).resolve()
        if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": f"not found: /{relative}"})
            return
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type",
                         _CONTENT_TYPES.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path != "/api/score":
            self._send_json(404, {"error": f"no such path: {self.path}"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length > self.server.max_upload:
            self._send_json(413, {"error": f"payload {length} exceeds cap {self.server.max_upload}"})
            return
        body = self.rfile.read(length) if length else b""
        if not body:
            self._send_json(400, {"error": "empty upload"})
            return

        if not body.startswith(b"P6"):
            if self.server.convert_hook is None:
                self._send_json(400, {"error": "expected a binary PPM (P6) upload"})
                return
            try:
                body = self.server.convert_hook(body)
            except ValueError as exc:
                self._send_json(400, {"error": f"conversion failed: {exc}"})
                return
        try:
            decode_ppm(body)  # reject junk before it travels to the backend
        except PpmError as exc:
            self._send_json(400, {"error": str(exc)})
            return

        try:
            score, model_id = request_score(self.server.backend_address, body,
                                            request_id=self.server.next_request_id(),
                                            timeout=BACKEND_TIMEOUT)
        except ScoreRejected as exc:
            self._send_json(400, {"error": str(exc)})
            return
        except BackendUnavailable as exc:
            self._send_json(503, {"error": str(exc)})
            return
        self._send_json(200, {"score": score, "model_id": model_id})


class WebServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, backend_address: tuple[str, int], bind_address: tuple[str, int],
                 static_dir: str | Path | None = None,
                 max_upload: int = DEFAULT_MAX_UPLOAD,
                 convert_hook=None):
        super().__init__(bind_address, _Handler)
        self.backend_address = backend_address
        self.static_dir = Path(static_dir) if static_dir else None
        self.max_upload = max_upload
        self.convert_hook = convert_hook
        self._request_counter = 0

    def next_request_id(self) -> int:
        self._request_counter += 1
        return self._request_counter

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[0], self.server_address[1]


def create_web_server(backend_address: tuple[str, int], bind_address: tuple[str, int],
                      static_dir: str | Path | None = None,
                      max_upload: int = DEFAULT_MAX_UPLOAD,
                      convert_hook=None) -> WebServer:
    return WebServer(backend_address, bind_address, static_dir, max_upload, convert_hook)


def http_serve(backend_address: tuple[str, int], bind_address: tuple[str, int],
               static_dir: str | Path | None = None,
               max_upload: int = DEFAULT_MAX_UPLOAD) -> None:
    """Serve the frontend and scoring API until interrupted.

    Probes the backend at startup; an unreachable backend is reported but the
    server still starts (requests then answer 503 until it comes up).
    """
    if not probe_backend(backend_address, timeout=BACKEND_TIMEOUT):
        log.warning("backend %s:%d unreachable at startup; /api/score will answer 503",
                    backend_address[0], backend_address[1])
    server = create_web_server(backend_address, bind_address, static_dir, max_upload)
    with server:
        server.serve_forever()
