"""Evaluator configuration and report."""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


def coco_iou_thresholds() -> list[float]:
    return [float(t) for t in np.linspace(.5, 0.95, int(np.round((0.95 - .5) / .05)) + 1, endpoint=True)]


class EvalConfig(BaseModel):
    """``recall_points = 0`` selects all-point (area under the envelope) AP."""
    model_config = ConfigDict(frozen=True)

    iou_thresholds: list[float] = Field(default_factory=coco_iou_thresholds, min_length=1)
    class_agnostic: bool = False
    max_dets_per_image: int = Field(100, ge=1)
    recall_points: int = Field(101, ge=0)

    @field_validator("iou_thresholds")
    @classmethod
    def _increasing(cls, values: list[float]) -> list[float]:
        if any(not 0 < t <= 1 for t in values):
            raise ValueError("IoU thresholds must lie in (0, 1]")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("IoU thresholds must be strictly increasing")
        return values


class EvalCounts(BaseModel):
    n_gt: int
    n_det: int
    n_tp_50: int


class EvalReport(BaseModel):
    map: float
    ap50: Optional[float] = None
    ap75: Optional[float] = None
    per_class_ap: dict[int, float]
    per_threshold_ap: dict[str, float]
    counts: EvalCounts
    class_agnostic: bool
    recall_points: int


class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: float
    map: float
