"""Ground-truth evaluation oracles.

Sort-based average precision, a desk-scale COCO-style AP over a ladder of
IoU thresholds, and the three rank-correlation coefficients (Pearson,
Spearman, Kendall tau-b). These are the independent yardsticks the loss
modules are measured against, so they share no code with them.

AP here is all-point (mean precision at each positive's rank), not the
101-point interpolated variant: exactness against the ranking-loss identity
matters more at this scale than bit-compatibility with the COCO tooling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import UndefinedMetricError
from .geometry import iou_matrix

#: COCO-style threshold ladder 0.50:0.05:0.95.
DEFAULT_IOU_THRESHOLDS = tuple(np.round(np.linspace(0.5, 0.95, 10), 2))

#: Detections with matched IoU at or below this are dropped from the
#: score/IoU correlation analysis.
DEFAULT_CORRELATION_IOU_FLOOR = 0.5


@dataclass
class EvalReport:
    """Evaluation summary: AP, per-threshold AP, and score/IoU correlations."""

    ap: float
    ap_by_iou: dict[float, float] = field(default_factory=dict)
    pcc: float = 0.0
    scc: float = 0.0
    kcc: float = 0.0

    def __post_init__(self):
        values = [self.ap, self.pcc, self.scc, self.kcc, *self.ap_by_iou.values()]
        if not all(np.isfinite(v) for v in values):
            raise UndefinedMetricError(f"EvalReport fields must be finite, got {self}")

    def to_dict(self) -> dict:
        return {
            "ap": self.ap,
            "ap_by_iou": {f"{t:.2f}": v for t, v in self.ap_by_iou.items()},
            "pcc": self.pcc,
            "scc": self.scc,
            "kcc": self.kcc,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def average_precision(scores, labels) -> float:
    """All-point average precision of a scored binary ranking.

    Samples are sorted by descending score (ties broken by ascending index);
    AP is the mean over positives of ``#positives so far / rank``.

    Raises UndefinedMetricError when there is no positive label.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must be aligned")
    if not labels.any():
        raise UndefinedMetricError("average precision needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    cum = np.cumsum(hits)
    ranks = np.nonzero(hits)[0] + 1
    return float(np.mean(cum[ranks - 1] / ranks))


def match_predictions(pred_boxes, pred_scores, gt_boxes, iou_threshold: float) -> np.ndarray:
    """Greedy score-descending matching of predictions to ground truths.

    Each ground truth is matched at most once; a prediction matches the
    still-unmatched ground truth of highest IoU at or above the threshold
    (ties broken by lower ground-truth index). Returns a boolean TP flag
    per prediction, aligned with the input order.
    """
    ious = iou_matrix(pred_boxes, gt_boxes)
    scores = np.asarray(pred_scores, dtype=np.float64).reshape(-1)
    tp = np.zeros(len(scores), dtype=bool)
    taken = np.zeros(ious.shape[1], dtype=bool)
    for i in np.argsort(-scores, kind="stable"):
        row = np.where(taken, -1.0, ious[i])
        g = int(np.argmax(row))
        if row[g] >= iou_threshold:
            tp[i] = True
            taken[g] = True
    return tp


def coco_style_ap(pred_boxes, pred_scores, gt_boxes, iou_thresholds=None) -> tuple[float, dict[float, float]]:
    """AP averaged over an IoU-threshold ladder (default 0.50:0.05:0.95).

    Per threshold, predictions are greedily matched (see
    :func:`match_predictions`) and the resulting TP/FP sequence is scored
    with :func:`average_precision`; a threshold at which nothing matches
    scores 0. Returns ``(mean_ap, {threshold: ap})``.

    Raises UndefinedMetricError when there are no ground truths.
    """
    gt_boxes = np.asarray(gt_boxes, dtype=np.float64).reshape(-1, 4)
    if gt_boxes.shape[0] == 0:
        raise UndefinedMetricError("AP is undefined with no ground-truth boxes")
    if iou_thresholds is None:
        iou_thresholds = DEFAULT_IOU_THRESHOLDS
    thresholds = [float(t) for t in iou_thresholds]
    if any(t <= 0.0 or t > 1.0 for t in thresholds):
        raise ValueError(f"IoU thresholds must lie in (0, 1], got {thresholds}")
    scores = np.asarray(pred_scores, dtype=np.float64).reshape(-1)
    by_iou: dict[float, float] = {}
    for t in thresholds:
        tp = match_predictions(pred_boxes, scores, gt_boxes, t)
        by_iou[t] = average_precision(scores, tp) if tp.any() else 0.0
    return float(np.mean(list(by_iou.values()))), by_iou


def correlations(x, y) -> tuple[float, float, float]:
    """Pearson, Spearman, and Kendall tau-b correlation of two arrays.

    Spearman is Pearson on average fractional ranks; Kendall is the
    tie-corrected tau-b. Raises UndefinedMetricError for arrays shorter
    than 2 or with zero variance.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError("correlation inputs must be aligned")
    if x.size < 2:
        raise UndefinedMetricError("correlations need at least two samples")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise UndefinedMetricError("correlations are undefined for constant input")
    pcc = float(stats.pearsonr(x, y).statistic)
    scc = float(stats.spearmanr(x, y).statistic)
    kcc = float(stats.kendalltau(x, y, variant="b").statistic)
    if not all(np.isfinite(v) for v in (pcc, scc, kcc)):
        raise UndefinedMetricError("correlation evaluated to a non-finite value")
    return pcc, scc, kcc


def detection_report(
    pred_boxes,
    pred_scores,
    gt_boxes,
    iou_thresholds=None,
    correlation_iou_floor: float = DEFAULT_CORRELATION_IOU_FLOOR,
) -> EvalReport:
    """Full report for one detection set: threshold-ladder AP plus the
    score/IoU correlations over predictions whose best ground-truth IoU
    exceeds ``correlation_iou_floor``."""
    mean_ap, by_iou = coco_style_ap(pred_boxes, pred_scores, gt_boxes, iou_thresholds)
    best_iou = iou_matrix(pred_boxes, gt_boxes).max(axis=1)
    scores = np.asarray(pred_scores, dtype=np.float64).reshape(-1)
    keep = best_iou > correlation_iou_floor
    pcc, scc, kcc = correlations(scores[keep], best_iou[keep])
    return EvalReport(ap=mean_ap, ap_by_iou=by_iou, pcc=pcc, scc=scc, kcc=kcc)
