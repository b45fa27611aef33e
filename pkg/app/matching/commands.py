"""MatchCommand: GT file + detection file -> match pairs / jitter sample file."""

from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import ValidationError

from app.dataset.repository import DatasetRepository, contract_error, get_dataset_repository
from app.dataset.schemas import detections_by_image
from app.matching.repository import JitterRepository, get_jitter_repository
from app.matching.schemas import JitterSummary, MatchConfig, MatchPair
from app.matching.services import collect_jitter, match_dataset, summarize_jitter
from app.responses.builder import RecordBuilder


def match_config_from_settings(settings: Mapping[str, Any]) -> MatchConfig:
    """Radius defaults to G/2 only when unset; an explicit 0 is rejected."""
    radius = settings.get("max_center_distance")
    if radius is None:
        radius = float(settings["gt_side"]) / 2
    try:
        return MatchConfig(max_center_distance=radius, strategy=settings["strategy"])
    except ValidationError as exc:
        raise contract_error("match settings", exc)


class MatchCommand:
    """Composable command: load -> match per image -> write jitter samples (+ summary record)."""

    def __init__(self, dataset_repo: DatasetRepository, jitter_repo: JitterRepository):
        self._dataset_repo = dataset_repo
        self._jitter_repo = jitter_repo

    def execute(
            self,
            gt_path: str | Path,
            det_path: str | Path,
            cfg: MatchConfig,
            pairs_out: str | Path,
            summary_out: Optional[str | Path] = None,
            gt_side: Optional[float] = None,
            workers: int = 1,
            settings: Optional[Mapping[str, Any]] = None) -> tuple[list[MatchPair], JitterSummary]:
        gt = self._dataset_repo.load_ground_truth(gt_path, gt_side)
        dets = self._dataset_repo.load_detections(det_path)
        pairs = match_dataset(gt.by_image(), detections_by_image(dets), cfg, workers)
        summary = summarize_jitter(collect_jitter(pairs))

        self._jitter_repo.save_pairs(pairs_out, pairs)
        if summary_out is not None:
            RecordBuilder.write(summary_out, RecordBuilder.success("match", summary, settings))
        return pairs, summary


def get_match_command() -> MatchCommand:
    return MatchCommand(get_dataset_repository(), get_jitter_repository())
