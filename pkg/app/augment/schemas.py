from pydantic import BaseModel, ConfigDict, model_validator

from app.dataset.schemas import GroundTruth


class CropWindow(BaseModel):
    """Closed region [x_min, x_max] x [y_min, y_max] in image pixels."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @model_validator(mode="after")
    def _non_empty(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("crop window needs x_min < x_max and y_min < y_max")
        return self

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


class CropTile(BaseModel):
    """One manifest entry: a window on an image plus its translated annotations."""
    image_id: int
    tile_index: int
    window: CropWindow
    annotations: list[GroundTruth]


class CropManifest(BaseModel):
    clip_boxes: bool
    tiles: list[CropTile]
