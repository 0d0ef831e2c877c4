"""Confusion-count segmentation metrics: Dice, Jaccard, precision, recall."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .field import as_field, check_same_shape


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class Scores:
    dice: float
    jaccard: float
    precision: float
    recall: float

    def to_json_dict(self) -> dict:
        return {
            "dice": self.dice,
            "jaccard": self.jaccard,
            "precision": self.precision,
            "recall": self.recall,
        }


def confusion(pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5) -> Confusion:
    """Pixel counts after binarizing pred at the threshold (ties -> foreground)."""
    pred = as_field(pred, "pred")
    gt = as_field(gt, "gt")
    check_same_shape(pred, gt)
    if not np.all((gt == 0.0) | (gt == 1.0)):
        raise InvalidInputError("ground truth must be binary (exactly 0 or 1)")
    p = pred >= threshold
    g = gt == 1.0
    return Confusion(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
        tn=int(np.count_nonzero(~p & ~g)),
    )


def scores(c: Confusion) -> Scores:
    """Overlap scores; conventions for empty masks:

    both masks empty (tp + fp + fn = 0) -> all four scores are 1 (perfect
    agreement on emptiness); exactly one mask empty -> the affected 0/0
    ratios are 0.
    """
    if c.tp + c.fp + c.fn == 0:
        return Scores(dice=1.0, jaccard=1.0, precision=1.0, recall=1.0)
    dice = 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn)
    jaccard = c.tp / (c.tp + c.fp + c.fn)
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp > 0 else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn > 0 else 0.0
    return Scores(dice=dice, jaccard=jaccard, precision=precision, recall=recall)


def dice_score(pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5) -> float:
    """Convenience: Dice of pred vs gt at the given threshold."""
    return scores(confusion(pred, gt, threshold)).dice
