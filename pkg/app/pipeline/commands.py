"""PipelineCommand: match -> collect jitter -> optimize S* -> apply -> evaluate."""

from pathlib import Path
from typing import Any, Mapping, Optional

from app.boxopt.services import expected_iou, optimize_size
from app.core.config import LOGGER
from app.core.errors import InputContractError
from app.dataset.repository import DatasetRepository, get_dataset_repository
from app.dataset.schemas import detections_by_image
from app.evaluation.commands import eval_config_from_settings
from app.evaluation.services import evaluate
from app.matching.repository import JitterRepository, get_jitter_repository
from app.matching.commands import match_config_from_settings
from app.matching.services import collect_jitter, match_dataset, summarize_jitter
from app.pipeline.schemas import PipelineReport
from app.postprocess.services import apply_fixed_size
from app.responses.builder import RecordBuilder


class PipelineCommand:

    def __init__(self, dataset_repo: DatasetRepository, jitter_repo: JitterRepository):
        self._dataset_repo = dataset_repo
        self._jitter_repo = jitter_repo

    def execute(
            self,
            gt_path: str | Path,
            det_path: str | Path,
            settings: Mapping[str, Any],
            output: Optional[str | Path] = None,
            det_out: Optional[str | Path] = None,
            pairs_out: Optional[str | Path] = None) -> PipelineReport:
        gt_side = float(settings["gt_side"])
        workers = int(settings.get("workers", 1))
        gt = self._dataset_repo.load_ground_truth(gt_path, gt_side)
        dets = self._dataset_repo.load_detections(det_path)

        match_cfg = match_config_from_settings(settings)
        pairs = match_dataset(gt.by_image(), detections_by_image(dets), match_cfg, workers)
        if not pairs:
            raise InputContractError("no detection matched a ground truth; cannot estimate jitter")
        jitter = collect_jitter(pairs)

        search_range = tuple(settings["range"]) if settings.get("range") is not None else None
        result = optimize_size(gt_side, jitter, search_range=search_range,
                               grid_step=float(settings["step"]), refine_tol=float(settings["tol"]),
                               workers=workers)

        eval_cfg = eval_config_from_settings(settings)
        resized = apply_fixed_size(dets, result.s_star)
        report = PipelineReport(
            gt_side=gt_side,
            n_pairs=len(pairs),
            jitter=summarize_jitter(jitter),
            s_star=result.s_star,
            expected_iou_at_star=result.expected_iou_at_star,
            expected_iou_at_gt_side=expected_iou(gt_side, gt_side, jitter),
            baseline=evaluate(gt, dets, eval_cfg),
            at_gt_side=evaluate(gt, apply_fixed_size(dets, gt_side), eval_cfg),
            at_star=evaluate(gt, resized, eval_cfg),
        )
        LOGGER.info(f"pipeline: S*={report.s_star:.4f} mAP {report.baseline.map:.4f} -> {report.at_star.map:.4f}")

        if output is not None:
            data = report.model_dump(mode="json")
            data["gain"] = report.gain
            RecordBuilder.write(output, RecordBuilder.success("pipeline", data, settings))
        if det_out is not None:
            self._dataset_repo.save_detections(det_out, resized)
        if pairs_out is not None:
            self._jitter_repo.save_pairs(pairs_out, pairs)
        return report


def get_pipeline_command() -> PipelineCommand:
    return PipelineCommand(get_dataset_repository(), get_jitter_repository())
