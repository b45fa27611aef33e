"""Scene and detector-noise configuration for the synthetic benchmark."""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.boxopt.schemas import DeterministicJitter, JitterModel
from app.core.config import DEFAULT_GT_SIDE
from app.dataset.schemas import N_FOREGROUND_CLASSES

PROBABILITY_TOLERANCE = 1e-9


def _uniform_classes() -> list[float]:
    return [1.0 / N_FOREGROUND_CLASSES] * N_FOREGROUND_CLASSES


def _check_distribution(row: list[float], what: str) -> list[float]:
    if len(row) != N_FOREGROUND_CLASSES:
        raise ValueError(f"{what} needs {N_FOREGROUND_CLASSES} entries, got {len(row)}")
    if any(p < 0 for p in row):
        raise ValueError(f"{what} has negative entries")
    if abs(sum(row) - 1.0) > PROBABILITY_TOLERANCE:
        raise ValueError(f"{what} must sum to 1, sums to {sum(row)!r}")
    return row


class SceneConfig(BaseModel):
    """``density`` is objects per megapixel and is only used when ``n_objects`` is unset."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    image_extent: tuple[float, float] = (1024.0, 1024.0)
    n_objects: Optional[int] = Field(50, ge=0)
    density: Optional[float] = Field(None, ge=0)
    min_center_separation: float = Field(0.0, ge=0)
    class_distribution: list[float] = Field(default_factory=_uniform_classes)
    gt_side: float = Field(DEFAULT_GT_SIDE, gt=0)
    seed: int = 0

    @field_validator("class_distribution")
    @classmethod
    def _distribution(cls, row: list[float]) -> list[float]:
        return _check_distribution(row, "class_distribution")

    @model_validator(mode="after")
    def _count_given(self):
        if self.n_objects is None and self.density is None:
            raise ValueError("scene needs n_objects or density")
        if min(self.image_extent) <= 0:
            raise ValueError("image_extent must be positive")
        return self

    def object_count(self) -> int:
        if self.n_objects is not None:
            return self.n_objects
        width, height = self.image_extent
        return int(round(self.density * width * height / 1e6))


class ScoreModel(BaseModel):
    """Normal score distributions, clipped to [0, 1]."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    tp_mean: float = 0.8
    tp_std: float = Field(0.1, ge=0)
    fp_mean: float = 0.3
    fp_std: float = Field(0.1, ge=0)


class DetectorNoise(BaseModel):
    """``false_positive_rate`` is the expected number of false positives per image."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    jitter: JitterModel = DeterministicJitter(dx=0.0, dy=0.0)
    miss_rate: float = Field(0.0, ge=0, le=1)
    false_positive_rate: float = Field(0.0, ge=0)
    score_model: ScoreModel = ScoreModel()
    confusion: Optional[list[list[float]]] = None
    seed: int = 0

    @field_validator("confusion")
    @classmethod
    def _row_stochastic(cls, matrix: Optional[list[list[float]]]) -> Optional[list[list[float]]]:
        if matrix is None:
            return None
        if len(matrix) != N_FOREGROUND_CLASSES:
            raise ValueError(f"confusion must be {N_FOREGROUND_CLASSES}x{N_FOREGROUND_CLASSES}")
        for i, row in enumerate(matrix):
            _check_distribution(row, f"confusion row {i}")
        return matrix

    def confusion_matrix(self) -> np.ndarray:
        if self.confusion is None:
            return np.eye(N_FOREGROUND_CLASSES)
        return np.asarray(self.confusion, dtype=float)


class SimulationConfig(BaseModel):
    """Run-config shape of the ``simulate`` command."""
    n_images: int = Field(1, ge=1)
    scene: SceneConfig = SceneConfig()
    noise: DetectorNoise = DetectorNoise()
