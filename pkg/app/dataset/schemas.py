"""Shared detection data model: ground truth, detections and the GT dataset."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import DEFAULT_GT_SIDE
from app.geometry.schemas import BBox, CenterPoint
from app.geometry.services import box_centered_at

# Index of the background entry in a class-probability vector.
BACKGROUND_INDEX = 8
N_FOREGROUND_CLASSES = 8

BETHESDA_CATEGORIES = ["NILM", "ENDO", "INFL", "ASCUS", "LSIL", "HSIL", "ASCH", "SCC"]


class Category(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    name: str
    supercategory: str = "cell"


def default_categories() -> list[Category]:
    return [Category(id=i + 1, name=name) for i, name in enumerate(BETHESDA_CATEGORIES)]


class ImageInfo(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int
    width: float = Field(..., gt=0)
    height: float = Field(..., gt=0)
    file_name: str = ""


class GroundTruth(BaseModel):
    """One annotated object. ``bbox`` is only set when the box is not the
    G x G square centered on ``center`` (e.g. after clipping to a crop)."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    image_id: int
    category_id: int
    center: CenterPoint
    gt_side: float = Field(DEFAULT_GT_SIDE, gt=0)
    id: Optional[int] = None
    bbox: Optional[BBox] = None

    @property
    def box(self) -> BBox:
        if self.bbox is not None:
            return self.bbox
        return box_centered_at(self.center, self.gt_side)


class Detection(BaseModel):
    """One predicted object.

    A detector may report a box, an explicit center, or both; when both are
    present the explicit center wins (it survives clipping). ``class_probs``
    holds the 9-way vector with background at index 8.
    """
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    image_id: int
    score: float = Field(..., ge=0, le=1)
    category_id: Optional[int] = None
    bbox: Optional[BBox] = None
    center: Optional[CenterPoint] = None
    class_probs: Optional[list[float]] = Field(
        None, min_length=N_FOREGROUND_CLASSES + 1, max_length=N_FOREGROUND_CLASSES + 1)


class GroundTruthDataset(BaseModel):
    images: list[ImageInfo] = Field(default_factory=list)
    annotations: list[GroundTruth] = Field(default_factory=list)
    categories: list[Category] = Field(default_factory=default_categories)

    def by_image(self) -> dict[int, list[GroundTruth]]:
        """Annotations grouped per image, every known image present, input order kept."""
        grouped: dict[int, list[GroundTruth]] = {image.id: [] for image in self.images}
        for gt in self.annotations:
            grouped.setdefault(gt.image_id, []).append(gt)
        return grouped

    def image_index(self) -> dict[int, ImageInfo]:
        return {image.id: image for image in self.images}


def detections_by_image(dets: list[Detection]) -> dict[int, list[Detection]]:
    grouped: dict[int, list[Detection]] = {}
    for det in dets:
        grouped.setdefault(det.image_id, []).append(det)
    return grouped
