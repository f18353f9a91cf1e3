"""Binary weights file: magic AESW, version, spec header, float32 arrays, CRC32.

Layout (integers little-endian):

    "AESW" | u16 version=1 | u32 header_len | header JSON (NetworkSpec)
    | per parametric layer in index order: weight then bias, raw <f4
    | u32 CRC32 over header_len + header + arrays
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .network import Parameters, _param_shapes
from .spec import NetworkSpec

MAGIC = b"AESW"
VERSION = 1


class WeightsError(ValueError):
    """Unreadable, corrupt, or wrong-format weights file."""


def save_weights(params: Parameters, net: NetworkSpec, path: str | Path) -> None:
    """Serialize net spec and parameters; load_weights restores them bit-exactly."""
    shapes = _param_shapes(net)
    if set(shapes) != set(params.weights):
        raise WeightsError("parameters do not match the network's parametric layers")
    header = json.dumps(net.to_dict(), sort_keys=True).encode("utf-8")
    payload = bytearray()
    payload += struct.pack("<I", len(header))
    payload += header
    for i in sorted(shapes):
        payload += np.ascontiguousarray(params.weights[i], dtype="<f4").tobytes()
        payload += np.ascontiguousarray(params.biases[i], dtype="<f4").tobytes()
    blob = MAGIC + struct.pack("<H", VERSION) + bytes(payload)
    blob += struct.pack("<I", zlib.crc32(bytes(payload)))
    Path(path).write_bytes(blob)


def load_weights(path: str | Path) -> tuple[NetworkSpec, Parameters]:
    """Read a weights file back; raises WeightsError on any corruption."""
    blob = Path(path).read_bytes()
    if len(blob) < 14:
        raise WeightsError(f"file too short ({len(blob)} bytes)")
    if blob[:4] != MAGIC:
        raise WeightsError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != VERSION:
        raise WeightsError(f"unsupported version {version}")
    payload, crc_bytes = blob[6:-4], blob[-4:]
    (stored_crc,) = struct.unpack("<I", crc_bytes)
    if zlib.crc32(payload) != stored_crc:
        raise WeightsError("checksum mismatch, file is corrupt")

    if len(payload) < 4:
        raise WeightsError("truncated header length")
    (header_len,) = struct.unpack_from("<I", payload, 0)
    if len(payload) < 4 + header_len:
        raise WeightsError("truncated header")
    try:
        net = NetworkSpec.from_dict(json.loads(payload[4:4 + header_len].decode("utf-8")))
    except (ValueError, KeyError, TypeError) as exc:
        raise WeightsError(f"invalid network header: {exc}") from None

    offset = 4 + header_len
    weights, biases = {}, {}
    for i, (w_shape, _) in sorted(_param_shapes(net).items()):
        for target, shape in ((weights, w_shape), (biases, (w_shape[0],))):
            count = int(np.prod(shape))
            nbytes = count * 4
            if offset + nbytes > len(payload):
                raise WeightsError(f"truncated arrays at layer {i}")
            arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
            target[i] = arr.reshape(shape).astype(np.float32)
            offset += nbytes
    if offset != len(payload):
        raise WeightsError(f"{len(payload) - offset} trailing bytes after arrays")
    return net, Parameters(weights, biases)
