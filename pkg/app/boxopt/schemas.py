"""Jitter models and the box-size optimization result."""

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class DeterministicJitter(BaseModel):
    """Every prediction is off by exactly (dx, dy) in magnitude."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: Literal["deterministic"] = "deterministic"
    dx: float = Field(..., ge=0)
    dy: float = Field(..., ge=0)


class UniformRadialJitter(BaseModel):
    """Radius uniform on [lo, hi], direction uniform on the circle."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: Literal["uniform_radial"] = "uniform_radial"
    lo: float = Field(..., ge=0)
    hi: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.lo > self.hi:
            raise ValueError("uniform_radial requires lo <= hi")
        return self


class GaussianJitter(BaseModel):
    """Independent N(0, sigma^2) error on each axis."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: Literal["gaussian"] = "gaussian"
    sigma: float = Field(..., ge=0)


class EmpiricalJitter(BaseModel):
    """Signed offsets of matched pairs; magnitudes are derived on use."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    kind: Literal["empirical"] = "empirical"
    dx: list[float] = Field(default_factory=list)
    dy: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _paired(self):
        if len(self.dx) != len(self.dy):
            raise ValueError("empirical jitter needs as many dy as dx samples")
        return self

    def __len__(self) -> int:
        return len(self.dx)


JitterModel = Annotated[
    Union[DeterministicJitter, UniformRadialJitter, GaussianJitter, EmpiricalJitter],
    Field(discriminator="kind"),
]


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: float
    expected_iou: float


class SizeOptimizationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    s_star: float
    expected_iou_at_star: float
    curve: list[CurvePoint]
    search_range: tuple[float, float]
    gt_side: float
    model_kind: str
    grid_step: Optional[float] = None
    refine_tol: Optional[float] = None
