"""Precision/recall/F1 counting and the slot decision-threshold grid.

Everything here works on plain counts so independent reimplementation is
cheap: micro averaging sums TP/FP/FN across a scope before computing F1,
macro averaging means per-scope F1 values, and an empty scope (no gold, no
predictions) is excluded from macro means.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

THRESHOLD_GRID = tuple(round(0.1 * i, 1) for i in range(1, 10))


@dataclass(frozen=True)
class Counts:
    """True-positive / false-positive / false-negative tallies."""

    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValidationError("counts must be non-negative")

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def empty(self) -> bool:
        return self.tp == self.fp == self.fn == 0

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


def micro(counts) -> Counts:
    """Pool counts across a scope; F1 of the result is the micro F1."""
    total = Counts()
    for c in counts:
        total = total + c
    return total


def macro_f1(counts) -> float:
    """Unweighted mean of per-scope F1, skipping empty scopes."""
    scores = [c.f1 for c in counts if not c.empty]
    return sum(scores) / len(scores) if scores else 0.0


def binary_counts(probabilities, labels, threshold: float) -> Counts:
    """Tally a thresholded binary decision against 0/1 gold labels."""
    if len(probabilities) != len(labels):
        raise ValidationError("probabilities and labels must align")
    tp = fp = fn = 0
    for prob, gold in zip(probabilities, labels):
        predicted = prob >= threshold
        if predicted and gold == 1:
            tp += 1
        elif predicted and gold == 0:
            fp += 1
        elif not predicted and gold == 1:
            fn += 1
    return Counts(tp, fp, fn)


def best_threshold(probabilities, labels, grid=THRESHOLD_GRID) -> float:
    """Grid value maximizing F1; ties break toward the smallest threshold."""
    if not probabilities:
        raise ValidationError("cannot tune a threshold without examples")
    best_t, best_f1 = None, -1.0
    for t in grid:
        f1 = binary_counts(probabilities, labels, t).f1
        if f1 > best_f1:
            best_t, best_f1 = t, f1
    return best_t
