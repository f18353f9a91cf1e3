"""PPM decoding/encoding, bilinear resize, tensor conversion, and mosaics.

Binary PPM (P6, maxval 255) is the canonical image format: bit-exact in
tests and decodable without external codecs. Bilinear resampling uses
half-pixel centers and rounds half away from zero, so resizing to the same
dimensions reproduces the input exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class PpmError(ValueError):
    """Invalid or truncated PPM payload."""


@dataclass(frozen=True)
class Image:
    """8-bit RGB image, row-major interleaved samples."""

    width: int
    height: int
    data: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dims must be >= 1, got {self.width}x{self.height}")
        expected = self.width * self.height * 3
        if len(self.data) != expected:
            raise ValueError(
                f"data length {len(self.data)} != width*height*3 = {expected}"
            )

    def to_array(self) -> np.ndarray:
        """Pixels as uint8 array of shape (height, width, 3)."""
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width, 3)


def image_from_array(arr: np.ndarray) -> Image:
    """Build an Image from an (H, W, 3) uint8 array."""
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected shape (H, W, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 samples, got {arr.dtype}")
    return Image(arr.shape[1], arr.shape[0], arr.tobytes())


_WHITESPACE = b" \t\r\n\v\f"


def _read_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # Skip whitespace and '#' comments (to end of line).
    n = len(data)
    while pos < n:
        ch = data[pos:pos + 1]
        if ch in (b"#",):
            while pos < n and data[pos:pos + 1] != b"\n":
                pos += 1
        elif ch in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PpmError("truncated header")
    return data[start:pos], pos


def decode_ppm(data: bytes) -> Image:
    """Decode a binary PPM (P6, maxval 255) into an Image."""
    if data[:2] != b"P6":
        raise PpmError(f"wrong magic {data[:2]!r}, expected b'P6'")
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_header_token(data, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise PpmError(f"non-numeric header field {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PpmError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise PpmError(f"unsupported maxval {maxval}, expected 255")
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PpmError("missing whitespace after maxval")
    pos += 1
    payload = data[pos:]
    expected = width * height * 3
    if len(payload) < expected:
        raise PpmError(f"truncated payload: {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise PpmError(f"trailing bytes after payload: {len(payload) - expected}")
    return Image(width, height, payload)


def encode_ppm(image: Image) -> bytes:
    """Encode an Image to canonical P6 bytes: ``P6\\n<w> <h>\\n255\\n`` + samples."""
    return b"P6\n%d %d\n255\n" % (image.width, image.height) + image.data


def resize_bilinear(image: Image, out_w: int, out_h: int) -> Image:
    """Bilinear resample with half-pixel centers; half values round away from zero."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output dims must be >= 1, got {out_w}x{out_h}")
    src = image.to_array().astype(np.float64)

    sx = (np.arange(out_w) + 0.5) * (image.width / out_w) - 0.5
    sy = (np.arange(out_h) + 0.5) * (image.height / out_h) - 0.5
    sx = np.clip(sx, 0.0, image.width - 1)
    sy = np.clip(sy, 0.0, image.height - 1)

    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, image.width - 1)
    y1 = np.minimum(y0 + 1, image.height - 1)
    fx = (sx - x0)[None, :, None]
    fy = (sy - y0)[:, None, None]

    top = src[y0[:, None], x0[None, :]] * (1 - fx) + src[y0[:, None], x1[None, :]] * fx
    bot = src[y1[:, None], x0[None, :]] * (1 - fx) + src[y1[:, None], x1[None, :]] * fx
    values = top * (1 - fy) + bot * fy

    # Samples are non-negative, so floor(v + 0.5) is round-half-away-from-zero.
    out = np.floor(values + 0.5).astype(np.uint8)
    return image_from_array(out)


def to_tensor(image: Image, mean: tuple[float, float, float]) -> np.ndarray:
    """Convert to a float32 (3, H, W) tensor of sample/255 - mean[channel]."""
    if len(mean) != 3:
        raise ValueError(f"mean must have 3 entries, got {len(mean)}")
    arr = image.to_array().astype(np.float32) / np.float32(255.0)
    arr -= np.asarray(mean, dtype=np.float32)
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def mosaic(images: list[Image], columns: int, cell: int) -> Image:
    """Tile images into a grid of cell x cell thumbnails, row-major.

    The grid has ceil(N / columns) rows; trailing empty cells are black.
    """
    if not images:
        raise ValueError("cannot build a mosaic from an empty list")
    if columns < 1 or cell < 1:
        raise ValueError("columns and cell must be >= 1")
    columns = min(columns, len(images))
    rows = math.ceil(len(images) / columns)
    canvas = np.zeros((rows * cell, columns * cell, 3), dtype=np.uint8)
    for idx, img in enumerate(images):
        r, c = divmod(idx, columns)
        thumb = resize_bilinear(img, cell, cell).to_array()
        canvas[r * cell:(r + 1) * cell, c * cell:(c + 1) * cell] = thumb
    return image_from_array(canvas)
