"""Binary classification metrics with positive class = 1."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    accuracy: float
    zero_division: bool = False  # set when precision or recall had a 0 denominator


def compute_metrics(predicted, actual) -> Metrics:
    """Precision/recall/F1/accuracy; zero-denominator terms yield 0 with a flag."""
    predicted = list(predicted)
    actual = list(actual)
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} predictions, {len(actual)} labels")
    if not predicted:
        raise ValueError("cannot score an empty prediction list")
    for v in predicted + actual:
        if v not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {v!r}")

    tp = sum(1 for p, a in zip(predicted, actual) if p == 1 and a == 1)
    fp = sum(1 for p, a in zip(predicted, actual) if p == 1 and a == 0)
    fn = sum(1 for p, a in zip(predicted, actual) if p == 0 and a == 1)
    tn = len(actual) - tp - fp - fn

    zero_division = (tp + fp == 0) or (tp + fn == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(actual)
    return Metrics(precision, recall, f1, accuracy, zero_division)
