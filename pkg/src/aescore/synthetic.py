"""Procedural stand-in corpus with a controllable visual-quality knob.

Each photo gets a latent quality q in [0, 1]. High-q renders are saturated
color gradients with a sharp high-contrast disc; low-q renders collapse
toward flat gray noise. View counts are synthesized so the popularity score
tracks q (correlation well above 0.8), which makes percentile labeling
recover a visually learnable split.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .dataset import PhotoRecord, export_manifest
from .imaging import Image, encode_ppm, image_from_array
from .seeding import derive_seed

DEFAULT_REFERENCE_DATE = date(2017, 6, 1)


@dataclass(frozen=True)
class SyntheticPhoto:
    record: PhotoRecord
    quality: float


def _vivid_color(rng: np.random.Generator, saturation: float) -> np.ndarray:
    h = rng.uniform()
    v = rng.uniform(0.75, 1.0)
    return np.array(colorsys.hsv_to_rgb(h, saturation, v)) * 255.0


def render_photo(quality: float, size: int, rng: np.random.Generator) -> Image:
    """Render one synthetic photo; appeal scales continuously with quality."""
    saturation = 0.3 + 0.7 * quality
    c1 = _vivid_color(rng, saturation)
    c2 = _vivid_color(rng, saturation)

    gx = np.linspace(0.0, 1.0, size)[None, :, None]
    gy = np.linspace(0.0, 1.0, size)[:, None, None]
    mix = (gx + gy) / 2.0
    img = c1 * (1.0 - mix) + c2 * mix

    # sharp subject disc with a contrasting color
    cx, cy = rng.uniform(0.3, 0.7, 2) * size
    radius = rng.uniform(0.15, 0.3) * size
    yy, xx = np.mgrid[0:size, 0:size]
    inside = ((xx - cx) ** 2 + (yy - cy) ** 2) < radius ** 2
    disc_color = 255.0 - (c1 + c2) / 2.0
    img[inside] = img[inside] * (1.0 - quality) + disc_color * quality

    # low quality flattens contrast toward mid-gray and adds noise
    contrast = 0.15 + 0.85 * quality
    img = 128.0 + (img - 128.0) * contrast
    img += rng.normal(0.0, 28.0 * (1.0 - quality), img.shape)

    return image_from_array(np.clip(img, 0, 255).astype(np.uint8))


def synthesize_views(quality: float, n_days: int, rng: np.random.Generator) -> int:
    """Draw a view count whose popularity score tracks quality."""
    target_score = -3.0 + 7.0 * quality + rng.normal(0.0, 0.45)
    views = round((n_days + 1) * 2.0 ** target_score - 1.0)
    return max(0, views)


def generate_corpus(n: int, seed: int, out_dir: str | Path, size: int = 48,
                    reference_date: date = DEFAULT_REFERENCE_DATE) -> list[SyntheticPhoto]:
    """Write n PPM images plus manifest.csv under out_dir; fully seeded."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    photos: list[SyntheticPhoto] = []
    for i in range(n):
        rng = np.random.default_rng(derive_seed(seed, i))
        quality = float(rng.uniform())
        photo_id = f"syn{i:05d}"
        image_path = f"images/{photo_id}.ppm"
        (out_dir / image_path).write_bytes(encode_ppm(render_photo(quality, size, rng)))

        n_days = int(rng.integers(30, 400))
        record = PhotoRecord(
            photo_id=photo_id,
            n_views=synthesize_views(quality, n_days, rng),
            upload_date=reference_date - timedelta(days=n_days),
            image_path=image_path,
        )
        photos.append(SyntheticPhoto(record, quality))

    export_manifest([p.record for p in photos], out_dir / "manifest.csv")
    return photos


def quality_score_correlation(photos: list[SyntheticPhoto],
                              reference_date: date = DEFAULT_REFERENCE_DATE) -> float:
    """Pearson correlation between latent quality and the realized score."""
    from .dataset import score_photo

    qualities = np.array([p.quality for p in photos])
    scores = np.array([score_photo(p.record, reference_date).score for p in photos])
    return float(np.corrcoef(qualities, scores)[0, 1])
