"""Mask-versus-ground-truth evaluation: overlap, recall-weighted score,
misclassification rate, and distance-tolerant boundary agreement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import DimensionMismatchError, EmptyGroundTruthError
from .imagecore import BinaryMask

DEFAULT_BOUNDARY_TOL = 2.0


@dataclass(frozen=True)
class SegmentationScores:
    iou: float
    f2: float
    error_rate: float
    boundary_precision: float
    boundary_recall: float

    def as_dict(self) -> dict[str, float]:
        return {
            "iou": self.iou,
            "f2": self.f2,
            "error_rate": self.error_rate,
            "boundary_precision": self.boundary_precision,
            "boundary_recall": self.boundary_recall,
        }

    FIELDS = ("iou", "f2", "error_rate", "boundary_precision", "boundary_recall")


def boundary_pixels(mask: BinaryMask) -> np.ndarray:
    """Pixels with at least one 4-neighbor of the opposite label; anything
    outside the image counts as background."""
    padded = np.pad(mask.values, 1, mode="constant", constant_values=False)
    center = padded[1:-1, 1:-1]
    out = np.zeros_like(center)
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        nb = padded[1 + dy : padded.shape[0] - 1 + dy, 1 + dx : padded.shape[1] - 1 + dx]
        out |= nb != center
    return out


def score(
    pred: BinaryMask,
    gt: BinaryMask,
    boundary_tol: float = DEFAULT_BOUNDARY_TOL,
    ignore: np.ndarray | None = None,
) -> SegmentationScores:
    """Score a predicted mask against ground truth.

    Confusion counts run over all pixels (minus the optional ignore mask);
    iou = TP/(TP+FP+FN), f2 = 5PR/(4P+R), error_rate = (FP+FN)/total.
    A boundary pixel of one mask matches if some boundary pixel of the other
    lies within Euclidean distance boundary_tol.
    """
    if pred.values.shape != gt.values.shape:
        raise DimensionMismatchError(
            f"prediction is {pred.values.shape}, ground truth {gt.values.shape}"
        )
    if not gt.values.any():
        raise EmptyGroundTruthError("ground truth has no foreground pixels")

    p = pred.values
    g = gt.values
    keep = np.ones_like(p) if ignore is None else ~np.asarray(ignore, dtype=bool)
    tp = float(np.sum(p & g & keep))
    fp = float(np.sum(p & ~g & keep))
    fn = float(np.sum(~p & g & keep))
    total = float(keep.sum())

    denom = tp + fp + fn
    iou = tp / denom if denom > 0 else 0.0
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f2_denom = 4.0 * precision + recall
    f2 = 5.0 * precision * recall / f2_denom if f2_denom > 0 else 0.0
    error_rate = (fp + fn) / total if total > 0 else 0.0

    pred_b = boundary_pixels(pred)
    gt_b = boundary_pixels(gt)
    bp = _boundary_match_fraction(pred_b, gt_b, boundary_tol)
    br = _boundary_match_fraction(gt_b, pred_b, boundary_tol)

    return SegmentationScores(
        iou=iou,
        f2=f2,
        error_rate=error_rate,
        boundary_precision=bp,
        boundary_recall=br,
    )


def _boundary_match_fraction(
    from_b: np.ndarray, to_b: np.ndarray, tol: float
) -> float:
    """Fraction of from_b pixels within distance tol of some to_b pixel."""
    n_from = int(from_b.sum())
    if n_from == 0:
        return 0.0
    if not to_b.any():
        return 0.0
    dist = distance_transform_edt(~to_b)
    return float(np.sum(dist[from_b] <= tol)) / n_from
