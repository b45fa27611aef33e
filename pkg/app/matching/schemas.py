"""Match pairs, matching configuration and the summary of a jitter sample."""

from enum import StrEnum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.config import DEFAULT_GT_SIDE
from app.geometry.schemas import JitterOffset


class MatchStrategy(StrEnum):
    GREEDY = "greedy"
    OPTIMAL = "optimal"


class MatchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_center_distance: float = Field(DEFAULT_GT_SIDE / 2, gt=0)
    strategy: MatchStrategy = MatchStrategy.GREEDY

    @classmethod
    def for_gt_side(cls, gt_side: float, strategy: MatchStrategy = MatchStrategy.GREEDY) -> "MatchConfig":
        return cls(max_center_distance=gt_side / 2, strategy=strategy)


class MatchPair(BaseModel):
    """One matched (GT, detection) pair; indices are positions in the per-image input lists."""
    model_config = ConfigDict(frozen=True)

    image_id: int
    gt_index: int
    det_index: int
    offset: JitterOffset
    score: float = Field(..., ge=0, le=1)

    @property
    def distance(self) -> float:
        return float((self.offset.dx ** 2 + self.offset.dy ** 2) ** 0.5)


class JitterSummary(BaseModel):
    count: int
    mean_abs_dx: Optional[float] = None
    mean_abs_dy: Optional[float] = None
    mean_radial: Optional[float] = None
    std_dx: Optional[float] = None
    std_dy: Optional[float] = None
    rms_radial: Optional[float] = None
    radial_quantiles: dict[str, float] = Field(default_factory=dict)
