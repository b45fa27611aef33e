"""CropCommand: GT file + window/tile flags -> crop manifest."""

from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import ValidationError

from app.augment.schemas import CropManifest, CropWindow
from app.augment.services import build_crop_manifest
from app.core.errors import InputContractError, UsageError
from app.dataset.repository import DatasetRepository, get_dataset_repository
from app.responses.builder import RecordBuilder


def windows_from_settings(raw: Optional[list]) -> Optional[list[CropWindow]]:
    """Windows are given as ``[x_min, y_min, x_max, y_max]``."""
    if raw is None:
        return None
    windows = []
    for i, values in enumerate(raw):
        if len(values) != 4:
            raise UsageError(f"window {i} needs 4 numbers X_MIN Y_MIN X_MAX Y_MAX")
        x_min, y_min, x_max, y_max = (float(v) for v in values)
        try:
            windows.append(CropWindow(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max))
        except ValidationError as exc:
            raise InputContractError(f"window {i}: {exc.errors()[0].get('msg')}")
    return windows


class CropCommand:

    def __init__(self, dataset_repo: DatasetRepository):
        self._dataset_repo = dataset_repo

    def execute(self, gt_path: str | Path, settings: Mapping[str, Any], output: str | Path) -> CropManifest:
        windows = windows_from_settings(settings.get("window"))
        tile = tuple(float(v) for v in settings["tile"]) if settings.get("tile") is not None else None
        if (windows is None) == (tile is None):
            raise UsageError("give either --window (repeatable) or --tile W H")
        if windows is not None and settings.get("overlap") is not None:
            raise UsageError("--overlap only applies to --tile")

        gt = self._dataset_repo.load_ground_truth(gt_path, settings.get("gt_side"))
        manifest = build_crop_manifest(
            gt,
            windows=windows,
            tile=tile,
            overlap=settings.get("overlap"),
            clip_boxes=bool(settings.get("clip_boxes", True)),
        )
        RecordBuilder.write(output, RecordBuilder.success("crop", manifest, settings))
        return manifest


def get_crop_command() -> CropCommand:
    return CropCommand(get_dataset_repository())
