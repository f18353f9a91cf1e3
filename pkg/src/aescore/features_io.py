"""Feature matrix sidecar file: magic AESF, u32 rows, u32 cols, raw <f4 data."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"AESF"


class FeatureFileError(ValueError):
    """Malformed feature sidecar file."""


def write_features(features: np.ndarray, path: str | Path) -> None:
    arr = np.ascontiguousarray(features, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_features(path: str | Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 12:
        raise FeatureFileError(f"file too short ({len(blob)} bytes)")
    if blob[:4] != MAGIC:
        raise FeatureFileError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    rows, cols = struct.unpack_from("<II", blob, 4)
    expected = 12 + rows * cols * 4
    if len(blob) != expected:
        raise FeatureFileError(f"size {len(blob)} != expected {expected} for {rows}x{cols}")
    data = np.frombuffer(blob, dtype="<f4", count=rows * cols, offset=12)
    return data.reshape(rows, cols).astype(np.float32)
