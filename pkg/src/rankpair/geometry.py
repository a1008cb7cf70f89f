"""Axis-aligned box arithmetic: IoU, generalized IoU loss, and greedy NMS.

Boxes are corner-form ``[x1, y1, x2, y2]`` arrays of continuous reals
(no pixel +1 convention), with ``x2 >= x1`` and ``y2 >= y1``. Zero-area
boxes are legal inputs to :func:`iou` (they score 0 against everything)
but are rejected by the gradient path of the generalized IoU loss.
"""

from __future__ import annotations

import numpy as np

#: Default NMS thresholds: minimum ranking score kept, and the overlap above
#: which a lower-scored box is suppressed.
NMS_SCORE_THRESH = 0.15
NMS_IOU_THRESH = 0.6


def as_box(b) -> np.ndarray:
    """Validate and return ``b`` as a float64 ``[x1, y1, x2, y2]`` array."""
    arr = np.asarray(b, dtype=np.float64)
    if arr.shape != (4,):
        raise ValueError(f"box must have shape (4,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"box coordinates must be finite, got {arr}")
    if arr[2] < arr[0] or arr[3] < arr[1]:
        raise ValueError(f"box must satisfy x2 >= x1 and y2 >= y1, got {arr}")
    return arr


def _area(b: np.ndarray) -> float:
    return float((b[2] - b[0]) * (b[3] - b[1]))


def iou(a, b) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Returns 0 for disjoint boxes and whenever the union has zero area.
    """
    a = as_box(a)
    b = as_box(b)
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = _area(a) + _area(b) - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


def iou_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise IoU between two box arrays, shape ``(len(a), len(b))``."""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def giou(pred, gt) -> float:
    """Generalized IoU in [-1, 1]: IoU minus the empty fraction of the hull."""
    p = as_box(pred)
    g = as_box(gt)
    iw = min(p[2], g[2]) - max(p[0], g[0])
    ih = min(p[3], g[3]) - max(p[1], g[1])
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = _area(p) + _area(g) - inter
    if union <= 0.0:
        raise ValueError("generalized IoU is undefined for two zero-area boxes")
    hull = (max(p[2], g[2]) - min(p[0], g[0])) * (max(p[3], g[3]) - min(p[1], g[1]))
    return float(inter / union - (hull - union) / hull)


def giou_loss(pred, gt) -> float:
    """Localization loss ``1 - GIoU``, in [0, 2]."""
    return 1.0 - giou(pred, gt)


def giou_loss_with_grad(pred, gt) -> tuple[float, np.ndarray]:
    """Loss ``1 - GIoU`` and its closed-form gradient w.r.t. ``pred``.

    The gradient is piecewise smooth; at the measure-zero configurations
    where a min/max switches sides, the one-sided derivative with the
    ``>=`` convention is returned. Zero-area boxes are rejected.
    """
    p = as_box(pred)
    g = as_box(gt)
    if _area(p) <= 0.0 or _area(g) <= 0.0:
        raise ValueError("gradient evaluation requires boxes with positive area")

    pw, ph = p[2] - p[0], p[3] - p[1]
    # d(pred area)/d pred = [-ph, -pw, +ph, +pw]
    d_ap = np.array([-ph, -pw, ph, pw])

    iw = min(p[2], g[2]) - max(p[0], g[0])
    ih = min(p[3], g[3]) - max(p[1], g[1])
    inter = max(iw, 0.0) * max(ih, 0.0)
    d_inter = np.zeros(4)
    if iw > 0.0 and ih > 0.0:
        if p[0] >= g[0]:
            d_inter[0] = -ih
        if p[2] <= g[2]:
            d_inter[2] = ih
        if p[1] >= g[1]:
            d_inter[1] = -iw
        if p[3] <= g[3]:
            d_inter[3] = iw

    union = _area(p) + _area(g) - inter
    d_union = d_ap - d_inter

    hull = (max(p[2], g[2]) - min(p[0], g[0])) * (max(p[3], g[3]) - min(p[1], g[1]))
    hw = max(p[2], g[2]) - min(p[0], g[0])
    hh = max(p[3], g[3]) - min(p[1], g[1])
    d_hull = np.zeros(4)
    if p[0] <= g[0]:
        d_hull[0] = -hh
    if p[2] >= g[2]:
        d_hull[2] = hh
    if p[1] <= g[1]:
        d_hull[1] = -hw
    if p[3] >= g[3]:
        d_hull[3] = hw

    # GIoU = inter/union + union/hull - 1
    d_giou = (
        (d_inter * union - inter * d_union) / union**2
        + (d_union * hull - union * d_hull) / hull**2
    )
    loss = 1.0 - float(inter / union - (hull - union) / hull)
    return loss, -d_giou


def nms(
    boxes,
    scores,
    score_thresh: float = NMS_SCORE_THRESH,
    iou_thresh: float = NMS_IOU_THRESH,
) -> list[int]:
    """Greedy non-maximum suppression; returns kept indices in score order.

    Boxes scoring below ``score_thresh`` are discarded up front. The
    highest-scoring survivor is kept and every remaining box with IoU
    strictly above ``iou_thresh`` against it is suppressed; ties in score
    are broken by lower index.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if boxes.shape[0] != scores.shape[0]:
        raise ValueError("boxes and scores must be aligned")
    if boxes.shape[0] == 0:
        return []
    candidates = [i for i in np.argsort(-scores, kind="stable") if scores[i] >= score_thresh]
    kept: list[int] = []
    ious = iou_matrix(boxes, boxes)
    suppressed = np.zeros(len(scores), dtype=bool)
    for i in candidates:
        if suppressed[i]:
            continue
        kept.append(int(i))
        suppressed |= ious[i] > iou_thresh
    return kept
