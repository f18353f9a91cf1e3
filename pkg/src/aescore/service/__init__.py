"""Networked scoring: framed TCP inference backend and the HTTP web layer."""

from .backend import (
    BackendServer,
    BackendUnavailable,
    ScoreRejected,
    ScoringModel,
    backend_serve,
    create_backend_server,
    probe_backend,
    request_score,
    score_image,
)
from .protocol import (
    Frame,
    FrameError,
    KIND_ERROR,
    KIND_REPLY,
    KIND_REQUEST,
    pack_frame,
    read_frame,
)
from .web import WebServer, create_web_server, http_serve

__all__ = [
    "BackendServer", "BackendUnavailable", "Frame", "FrameError", "KIND_ERROR",
    "KIND_REPLY", "KIND_REQUEST", "ScoreRejected", "ScoringModel", "WebServer",
    "backend_serve", "create_backend_server", "create_web_server", "http_serve",
    "pack_frame", "probe_backend", "read_frame", "request_score", "score_image",
]
