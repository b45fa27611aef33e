"""Box IoU and the closed-form IoU of a fixed-size prediction under center jitter.

A G x G ground truth and an S x S prediction whose centers differ by (dx, dy)
overlap on each axis by ``min(G, S, (G + S) / 2 - |d|)`` clamped at zero. For
S >= G the ``S`` cap never binds and this is the familiar buffer formula: the
overlap stays at G while ``|d| <= (S - G) / 2``.
"""

import numpy as np

from app.geometry.schemas import BBox, CenterPoint, FixedSizeSpec


def iou(a: BBox, b: BBox) -> float:
    iw = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    ih = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def box_centered_at(center: CenterPoint, width: float, height: float | None = None) -> BBox:
    height = width if height is None else height
    return BBox(
        x_min=center.x - width / 2,
        y_min=center.y - height / 2,
        width=width,
        height=height,
    )


def _overlap(gt_side: float, pred_side: float, delta: float) -> float:
    return min(gt_side, pred_side, max(0.0, (gt_side + pred_side) / 2 - delta))


def jittered_intersection(spec: FixedSizeSpec, delta_x: float, delta_y: float) -> tuple[float, float]:
    if delta_x < 0 or delta_y < 0:
        raise ValueError("jitter magnitudes must be non-negative")
    return (
        _overlap(spec.gt_side, spec.pred_side, delta_x),
        _overlap(spec.gt_side, spec.pred_side, delta_y),
    )


def jittered_iou(spec: FixedSizeSpec, delta_x: float, delta_y: float) -> float:
    w_int, h_int = jittered_intersection(spec, delta_x, delta_y)
    inter = w_int * h_int
    return inter / (spec.gt_side ** 2 + spec.pred_side ** 2 - inter)


def jittered_iou_array(gt_side: float, pred_side: float, abs_dx: np.ndarray, abs_dy: np.ndarray) -> np.ndarray:
    """Vectorized jittered_iou over magnitude arrays (broadcasting allowed)."""
    half_sum = (gt_side + pred_side) / 2
    cap = min(gt_side, pred_side)
    w_int = np.minimum(cap, np.maximum(0.0, half_sum - np.asarray(abs_dx, dtype=float)))
    h_int = np.minimum(cap, np.maximum(0.0, half_sum - np.asarray(abs_dy, dtype=float)))
    inter = w_int * h_int
    return inter / (gt_side ** 2 + pred_side ** 2 - inter)


def iou_matrix(a_xywh: np.ndarray, b_xywh: np.ndarray) -> np.ndarray:
    """Pairwise IoU between rows of two (n, 4) / (m, 4) [x, y, w, h] arrays."""
    a = np.asarray(a_xywh, dtype=float).reshape(-1, 4)
    b = np.asarray(b_xywh, dtype=float).reshape(-1, 4)
    ax2, ay2 = a[:, 0] + a[:, 2], a[:, 1] + a[:, 3]
    bx2, by2 = b[:, 0] + b[:, 2], b[:, 1] + b[:, 3]
    iw = np.maximum(0.0, np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, None, 0], b[None, :, 0]))
    ih = np.maximum(0.0, np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, None, 1], b[None, :, 1]))
    inter = iw * ih
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    return inter / union
