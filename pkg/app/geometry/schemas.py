"""Geometry value types. All coordinates are real-valued pixels."""

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import DEFAULT_GT_SIDE


class CenterPoint(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float
    y: float


class BBox(BaseModel):
    """COCO-style box: top-left corner plus extent."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x_min: float
    y_min: float
    width: float = Field(..., gt=0)
    height: float = Field(..., gt=0)

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def midpoint(self) -> CenterPoint:
        return CenterPoint(x=self.x_min + self.width / 2, y=self.y_min + self.height / 2)

    @classmethod
    def from_xywh(cls, values: list[float] | tuple[float, ...]) -> "BBox":
        x, y, w, h = values
        return cls(x_min=x, y_min=y, width=w, height=h)

    def to_xywh(self) -> list[float]:
        return [self.x_min, self.y_min, self.width, self.height]


class JitterOffset(BaseModel):
    """Signed center error, prediction minus ground truth."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    dx: float
    dy: float

    @property
    def magnitudes(self) -> tuple[float, float]:
        return abs(self.dx), abs(self.dy)


class FixedSizeSpec(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    gt_side: float = Field(DEFAULT_GT_SIDE, gt=0)
    pred_side: float = Field(..., gt=0)

    @property
    def buffer(self) -> float:
        """Half-margin (S - G) / 2; negative when the prediction is smaller."""
        return (self.pred_side - self.gt_side) / 2
