"""SimulateCommand: scene + noise config -> GT file and detection file."""

import copy
from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import ValidationError

from app.core.errors import UsageError
from app.dataset.repository import DatasetRepository, contract_error, get_dataset_repository
from app.dataset.schemas import Detection, GroundTruthDataset
from app.simdet.schemas import SimulationConfig
from app.simdet.services import simulate_dataset

# flag name -> (section, field)
_FLAG_TARGETS = {
    "objects": ("scene", "n_objects"),
    "extent": ("scene", "image_extent"),
    "separation": ("scene", "min_center_separation"),
    "gt_side": ("scene", "gt_side"),
    "miss_rate": ("noise", "miss_rate"),
    "fp_rate": ("noise", "false_positive_rate"),
}


def simulation_config_from_settings(
        file_section: Optional[Mapping[str, Any]],
        flags: Mapping[str, Any]) -> SimulationConfig:
    """Overlay command-line flags on the ``simulate`` section of a run-config."""
    raw: dict[str, Any] = copy.deepcopy(dict(file_section or {}))
    raw.setdefault("scene", {})
    raw.setdefault("noise", {})

    if flags.get("images") is not None:
        raw["n_images"] = flags["images"]
    if flags.get("seed") is not None:
        raw["scene"]["seed"] = flags["seed"]
        raw["noise"]["seed"] = flags["seed"]
    for flag, (section, field) in _FLAG_TARGETS.items():
        if flags.get(flag) is not None:
            raw[section][field] = flags[flag]

    if flags.get("sigma") is not None and flags.get("deterministic") is not None:
        raise UsageError("give at most one of --sigma and --deterministic")
    if flags.get("sigma") is not None:
        raw["noise"]["jitter"] = {"kind": "gaussian", "sigma": flags["sigma"]}
    if flags.get("deterministic") is not None:
        dx, dy = flags["deterministic"]
        raw["noise"]["jitter"] = {"kind": "deterministic", "dx": dx, "dy": dy}

    try:
        return SimulationConfig.model_validate(raw)
    except ValidationError as exc:
        raise contract_error("simulate config", exc)


class SimulateCommand:

    def __init__(self, dataset_repo: DatasetRepository):
        self._dataset_repo = dataset_repo

    def execute(
            self,
            sim: SimulationConfig,
            gt_out: str | Path,
            det_out: str | Path,
            workers: int = 1) -> tuple[GroundTruthDataset, list[Detection]]:
        dataset, detections = simulate_dataset(sim.n_images, sim.scene, sim.noise, workers)
        self._dataset_repo.save_ground_truth(gt_out, dataset)
        self._dataset_repo.save_detections(det_out, detections)
        return dataset, detections


def get_simulate_command() -> SimulateCommand:
    return SimulateCommand(get_dataset_repository())
