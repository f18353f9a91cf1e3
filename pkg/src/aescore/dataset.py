"""Photo metadata ingestion, popularity scoring, percentile labeling, and splits.

The aesthetics score of a photo is ``log2((n_views + 1) / (n_days + 1))``:
an age-normalized view count on a log scale. The ``+ 1`` offsets keep the
ratio finite for photos with zero views or uploaded today. A dataset is
built by sorting on this score and labeling the top fraction positive and
the bottom fraction negative; the middle is discarded.

Manifests are UTF-8 CSV files with LF line endings and the fixed header
``photo_id,n_views,upload_date,image_path``. Labeled manifests append
``score,label`` columns (label 1 = aesthetically pleasing).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from random import Random

MANIFEST_FIELDS = ("photo_id", "n_views", "upload_date", "image_path")
LABELED_FIELDS = MANIFEST_FIELDS + ("score", "label")

# Train share from the published corpus counts: 513382 / (513382 + 85562).
DEFAULT_TRAIN_FRACTION = 0.8572
DEFAULT_LABEL_FRACTION = 0.2


class ManifestError(ValueError):
    """Malformed or inconsistent manifest content, with the offending line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class PhotoRecord:
    """One photo's raw metadata as read from a manifest."""

    photo_id: str
    n_views: int
    upload_date: date
    image_path: str

    def __post_init__(self):
        if not self.photo_id:
            raise ValueError("photo_id must be non-empty")
        if self.n_views < 0:
            raise ValueError(f"n_views must be >= 0, got {self.n_views}")


@dataclass(frozen=True)
class ScoredPhoto:
    """A photo with its derived age in days and aesthetics score."""

    record: PhotoRecord
    n_days: int
    score: float


@dataclass(frozen=True)
class LabeledDataset:
    """Scored photos split into positive/negative classes after labeling."""

    positives: tuple[ScoredPhoto, ...]
    negatives: tuple[ScoredPhoto, ...]
    discarded_count: int
    split_tag: str | None = None

    def __len__(self) -> int:
        return len(self.positives) + len(self.negatives)

    def photos(self) -> list[tuple[ScoredPhoto, int]]:
        """All photos with their labels, positives first."""
        return [(p, 1) for p in self.positives] + [(p, 0) for p in self.negatives]

    def photo_ids(self) -> set[str]:
        return {p.record.photo_id for p, _ in self.photos()}


def compute_score(n_views: int, n_days: int) -> float:
    """Aesthetics score log2((n_views + 1) / (n_days + 1))."""
    if n_views < 0:
        raise ValueError(f"n_views must be >= 0, got {n_views}")
    if n_days < 0:
        raise ValueError(f"n_days must be >= 0, got {n_days}")
    return math.log2((n_views + 1) / (n_days + 1))


def days_since_upload(upload_date: date, reference_date: date) -> int:
    """Whole days between upload and the scoring reference date."""
    if reference_date < upload_date:
        raise ValueError(
            f"reference_date {reference_date} precedes upload_date {upload_date}"
        )
    return (reference_date - upload_date).days


def score_photo(record: PhotoRecord, reference_date: date) -> ScoredPhoto:
    n_days = days_since_upload(record.upload_date, reference_date)
    return ScoredPhoto(record, n_days, compute_score(record.n_views, n_days))


def score_records(records: list[PhotoRecord], reference_date: date) -> list[ScoredPhoto]:
    return [score_photo(r, reference_date) for r in records]


def parse_manifest(path: str | Path) -> list[PhotoRecord]:
    """Read a manifest CSV into records, preserving row order."""
    records: list[PhotoRecord] = []
    seen: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != MANIFEST_FIELDS:
            raise ManifestError(
                f"expected header {','.join(MANIFEST_FIELDS)}, got {header}", line=1
            )
        for row in reader:
            line = reader.line_num
            records.append(_parse_row(row, line, seen))
    return records


def _parse_row(row: list[str], line: int, seen: dict[str, int]) -> PhotoRecord:
    if len(row) != len(MANIFEST_FIELDS):
        raise ManifestError(f"expected {len(MANIFEST_FIELDS)} fields, got {len(row)}", line)
    photo_id, views_text, date_text, image_path = row
    if photo_id in seen:
        raise ManifestError(
            f"duplicate photo_id {photo_id!r} (first seen on line {seen[photo_id]})", line
        )
    seen[photo_id] = line
    try:
        n_views = int(views_text)
    except ValueError:
        raise ManifestError(f"n_views is not an integer: {views_text!r}", line) from None
    try:
        upload = date.fromisoformat(date_text)
    except ValueError:
        raise ManifestError(f"upload_date is not an ISO date: {date_text!r}", line) from None
    try:
        return PhotoRecord(photo_id, n_views, upload, image_path)
    except ValueError as exc:
        raise ManifestError(str(exc), line) from None


def export_manifest(records: list[PhotoRecord], path: str | Path) -> None:
    """Write records to the canonical manifest CSV (LF endings)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for r in records:
            writer.writerow([r.photo_id, r.n_views, r.upload_date.isoformat(), r.image_path])


def export_labeled_manifest(dataset: LabeledDataset, path: str | Path) -> None:
    """Write a labeled manifest with score,label columns appended."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LABELED_FIELDS)
        for photo, label in dataset.photos():
            r = photo.record
            writer.writerow(
                [r.photo_id, r.n_views, r.upload_date.isoformat(), r.image_path,
                 repr(photo.score), label]
            )


def parse_labeled_manifest(path: str | Path, split_tag: str | None = None) -> LabeledDataset:
    """Read a labeled manifest back into a LabeledDataset.

    n_days is not stored (it is derived); it is recovered from the score and
    re-verified against compute_score so the ScoredPhoto invariant holds.
    """
    positives: list[ScoredPhoto] = []
    negatives: list[ScoredPhoto] = []
    seen: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != LABELED_FIELDS:
            raise ManifestError(
                f"expected header {','.join(LABELED_FIELDS)}, got {header}", line=1
            )
        for row in reader:
            line = reader.line_num
            if len(row) != len(LABELED_FIELDS):
                raise ManifestError(
                    f"expected {len(LABELED_FIELDS)} fields, got {len(row)}", line
                )
            record = _parse_row(row[:4], line, seen)
            try:
                score = float(row[4])
            except ValueError:
                raise ManifestError(f"score is not a number: {row[4]!r}", line) from None
            if row[5] not in ("0", "1"):
                raise ManifestError(f"label must be 0 or 1, got {row[5]!r}", line)
            n_days = round((record.n_views + 1) / 2.0 ** score) - 1
            if n_days < 0 or compute_score(record.n_views, n_days) != score:
                raise ManifestError(
                    f"score {score!r} inconsistent with n_views {record.n_views}", line
                )
            photo = ScoredPhoto(record, n_days, score)
            (positives if row[5] == "1" else negatives).append(photo)
    return LabeledDataset(tuple(positives), tuple(negatives), 0, split_tag)


def label_by_percentile(photos: list[ScoredPhoto], fraction: float) -> LabeledDataset:
    """Label the top fraction positive and the bottom fraction negative.

    Photos are ordered by (score descending, photo_id ascending); the first
    floor(fraction*N) become positives, the last floor(fraction*N) negatives,
    and the middle is discarded.
    """
    if not photos:
        raise ValueError("cannot label an empty photo list")
    if not 0.0 < fraction <= 0.5:
        raise ValueError(f"fraction must be in (0, 0.5], got {fraction}")
    ordered = sorted(photos, key=lambda p: (-p.score, p.record.photo_id))
    k = math.floor(fraction * len(ordered))
    positives = tuple(ordered[:k])
    negatives = tuple(ordered[len(ordered) - k:]) if k else ()
    return LabeledDataset(positives, negatives, len(ordered) - 2 * k)


def split_train_test(
    labeled: LabeledDataset, train_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Seeded stratified split of a labeled pool into train and test sets.

    The train set holds floor(train_fraction * N) photos; per-class counts are
    apportioned by largest remainder (ties favor positives) so each split stays
    class-balanced within one photo.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n_total = len(labeled)
    if n_total == 0:
        raise ValueError("cannot split an empty pool")

    total_train = math.floor(train_fraction * n_total)
    shares = [train_fraction * len(labeled.positives), train_fraction * len(labeled.negatives)]
    counts = [math.floor(s) for s in shares]
    remainder = total_train - sum(counts)
    order = sorted(range(2), key=lambda i: (-(shares[i] - counts[i]), i))
    for i in range(remainder):
        counts[order[i]] += 1

    rng = Random(seed)
    pos = list(labeled.positives)
    neg = list(labeled.negatives)
    rng.shuffle(pos)
    rng.shuffle(neg)

    train = LabeledDataset(
        tuple(pos[: counts[0]]), tuple(neg[: counts[1]]), 0, "train"
    )
    test = LabeledDataset(
        tuple(pos[counts[0]:]), tuple(neg[counts[1]:]), 0, "test"
    )
    return train, test


def score_histogram(
    photos: list[ScoredPhoto], n_bins: int
) -> list[tuple[float, float, int]]:
    """Equal-width histogram of scores over [min, max]; counts sum to N."""
    if not photos:
        raise ValueError("cannot histogram an empty photo list")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    scores = [p.score for p in photos]
    lo, hi = min(scores), max(scores)
    span = hi - lo
    counts = [0] * n_bins
    for s in scores:
        idx = 0 if span == 0.0 else min(int((s - lo) / span * n_bins), n_bins - 1)
        counts[idx] += 1
    edges = [lo + span * i / n_bins for i in range(n_bins)] + [hi]
    return [(edges[i], edges[i + 1], counts[i]) for i in range(n_bins)]
