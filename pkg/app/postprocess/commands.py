"""ApplySizeCommand: detections + S (or an optimize-size record) -> rewritten detections."""

from pathlib import Path
from typing import Optional

from app.boxopt.repository import SizeResultRepository, get_size_result_repository
from app.core.errors import UsageError
from app.dataset.repository import DatasetRepository, get_dataset_repository
from app.dataset.schemas import Detection
from app.postprocess.services import apply_fixed_size


class ApplySizeCommand:

    def __init__(self, dataset_repo: DatasetRepository, result_repo: SizeResultRepository):
        self._dataset_repo = dataset_repo
        self._result_repo = result_repo

    def resolve_size(self, size: Optional[float], result_path: Optional[str | Path]) -> float:
        if (size is None) == (result_path is None):
            raise UsageError("give exactly one of --size S or --result FILE")
        return float(size) if size is not None else self._result_repo.load_s_star(result_path)

    def execute(
            self,
            det_path: str | Path,
            output: str | Path,
            size: Optional[float] = None,
            result_path: Optional[str | Path] = None,
            clip_to: Optional[tuple[float, float]] = None) -> tuple[float, list[Detection]]:
        target = self.resolve_size(size, result_path)
        dets = self._dataset_repo.load_detections(det_path)
        rewritten = apply_fixed_size(dets, target, clip_to)
        self._dataset_repo.save_detections(output, rewritten)
        return target, rewritten


def get_apply_size_command() -> ApplySizeCommand:
    return ApplySizeCommand(get_dataset_repository(), get_size_result_repository())
