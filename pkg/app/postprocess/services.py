"""Rewrite detections as fixed-size S x S boxes around their predicted centers.

This is also the one place where a 9-way class-probability vector is reduced
to a (category, score) pair: the label is the argmax over the 8 foreground
classes, and detections whose overall argmax is background are dropped.
"""

from typing import Optional

import numpy as np

from app.core.config import LOGGER
from app.core.errors import InputContractError
from app.dataset.schemas import BACKGROUND_INDEX, Detection
from app.geometry.schemas import BBox, CenterPoint
from app.geometry.services import box_centered_at


def center_of(det: Detection) -> CenterPoint:
    if det.center is not None:
        return det.center
    if det.bbox is not None:
        return det.bbox.midpoint
    raise InputContractError(f"detection on image {det.image_id} has neither bbox nor center")


def reduce_class_probabilities(det: Detection) -> Optional[Detection]:
    """Label and score from ``class_probs``; None when background wins."""
    if det.class_probs is None or det.category_id is not None:
        return det
    probs = np.asarray(det.class_probs, dtype=float)
    if int(np.argmax(probs)) == BACKGROUND_INDEX:
        return None
    label = int(np.argmax(probs[:BACKGROUND_INDEX]))
    return det.model_copy(update={"category_id": label + 1, "score": float(probs[label])})


def _clip(box: BBox, extent: tuple[float, float]) -> Optional[BBox]:
    width, height = extent
    x_min, y_min = max(box.x_min, 0.0), max(box.y_min, 0.0)
    x_max, y_max = min(box.x_max, width), min(box.y_max, height)
    if x_max <= x_min or y_max <= y_min:
        return None
    return BBox(x_min=x_min, y_min=y_min, width=x_max - x_min, height=y_max - y_min)


def apply_fixed_size(
        dets: list[Detection],
        size: float,
        clip_to: Optional[tuple[float, float]] = None) -> list[Detection]:
    """S x S box per detection, order and scores kept.

    A box that already is S x S is kept as-is (not recomputed from its center),
    so the rewrite is an exact no-op for detections of the target size. With
    ``clip_to`` the box is intersected with the image and the original center
    is retained on the detection; a box entirely outside the image stays
    unclipped so no detection is lost.
    """
    if size <= 0:
        raise InputContractError(f"box size must be positive, got {size}")

    out: list[Detection] = []
    dropped_background = unclipped = 0
    for det in dets:
        reduced = reduce_class_probabilities(det)
        if reduced is None:
            dropped_background += 1
            continue
        center = center_of(reduced)
        if reduced.bbox is not None and reduced.bbox.width == size and reduced.bbox.height == size \
                and reduced.center is None:
            box = reduced.bbox
        else:
            box = box_centered_at(center, size)

        update: dict = {"bbox": box}
        if clip_to is not None:
            clipped = _clip(box, clip_to)
            if clipped is None:
                unclipped += 1
                clipped = box
            update = {"bbox": clipped, "center": center}
        out.append(reduced.model_copy(update=update))

    if dropped_background:
        LOGGER.warning(f"dropped {dropped_background} detections whose argmax is background")
    if unclipped:
        LOGGER.warning(f"{unclipped} detections lie outside the image and were kept unclipped")
    return out
