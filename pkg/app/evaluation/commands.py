"""EvaluateCommand and SweepCommand."""

from pathlib import Path
from typing import Any, Mapping, Optional

import pandas as pd
from pydantic import ValidationError

from app.boxopt.services import size_grid
from app.core.errors import UsageError
from app.dataset.repository import DatasetRepository, contract_error, get_dataset_repository
from app.evaluation.schemas import EvalConfig, EvalReport, SweepPoint
from app.evaluation.services import evaluate, sweep_size_vs_map
from app.responses.builder import RecordBuilder, write_text


def eval_config_from_settings(settings: Mapping[str, Any]) -> EvalConfig:
    fields: dict[str, Any] = {
        "class_agnostic": bool(settings.get("class_agnostic", False)),
        "max_dets_per_image": settings.get("max_dets", 100),
        "recall_points": settings.get("recall_points", 101),
    }
    if settings.get("iou_thresholds") is not None:
        fields["iou_thresholds"] = list(settings["iou_thresholds"])
    try:
        return EvalConfig(**fields)
    except ValidationError as exc:
        raise contract_error("evaluation settings", exc)


def report_frame(report: EvalReport) -> pd.DataFrame:
    rows = [("mAP", report.map)]
    if report.ap50 is not None:
        rows.append(("AP50", report.ap50))
    if report.ap75 is not None:
        rows.append(("AP75", report.ap75))
    rows.extend((f"AP[class {label}]", value) for label, value in sorted(report.per_class_ap.items()))
    return pd.DataFrame(rows, columns=["metric", "value"])


def sweep_sizes(settings: Mapping[str, Any]) -> list[float]:
    if (settings.get("sizes") is None) == (settings.get("size_range") is None):
        raise UsageError("give exactly one of --sizes S... or --size-range LO HI STEP")
    if settings.get("sizes") is not None:
        return [float(s) for s in settings["sizes"]]
    lower, upper, step = (float(v) for v in settings["size_range"])
    if step <= 0 or upper < lower:
        raise UsageError(f"--size-range needs LO <= HI and STEP > 0, got {lower} {upper} {step}")
    return [float(s) for s in size_grid(lower, upper, step)]


class EvaluateCommand:

    def __init__(self, dataset_repo: DatasetRepository):
        self._dataset_repo = dataset_repo

    def execute(
            self,
            gt_path: str | Path,
            det_path: str | Path,
            settings: Mapping[str, Any],
            output: Optional[str | Path] = None) -> EvalReport:
        gt = self._dataset_repo.load_ground_truth(gt_path, settings.get("gt_side"))
        dets = self._dataset_repo.load_detections(det_path)
        report = evaluate(gt, dets, eval_config_from_settings(settings))
        if output is not None:
            RecordBuilder.write(output, RecordBuilder.success("evaluate", report, settings))
        return report


class SweepCommand:

    def __init__(self, dataset_repo: DatasetRepository):
        self._dataset_repo = dataset_repo

    def execute(
            self,
            gt_path: str | Path,
            det_path: str | Path,
            settings: Mapping[str, Any],
            output: Optional[str | Path] = None,
            table_out: Optional[str | Path] = None) -> list[SweepPoint]:
        sizes = sweep_sizes(settings)
        gt = self._dataset_repo.load_ground_truth(gt_path, settings.get("gt_side"))
        dets = self._dataset_repo.load_detections(det_path)
        points = sweep_size_vs_map(gt, dets, sizes, eval_config_from_settings(settings),
                                   int(settings.get("workers", 1)))
        if output is not None:
            best = max(points, key=lambda p: p.map)
            data = {"points": points, "best_size": best.size, "best_map": best.map}
            RecordBuilder.write(output, RecordBuilder.success("sweep", data, settings))
        if table_out is not None:
            write_text(table_out, sweep_frame(points).to_csv(sep="\t", index=False, lineterminator="\n"))
        return points


def sweep_frame(points: list[SweepPoint]) -> pd.DataFrame:
    return pd.DataFrame({"size": [p.size for p in points], "map": [p.map for p in points]})


def get_evaluate_command() -> EvaluateCommand:
    return EvaluateCommand(get_dataset_repository())


def get_sweep_command() -> SweepCommand:
    return SweepCommand(get_dataset_repository())


