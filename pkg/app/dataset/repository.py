"""COCO-style ground-truth and detection files.

GT files are ``{images, annotations, categories}`` with ``bbox = [x, y, w, h]``;
detection files are a flat JSON array of ``{image_id, category_id, bbox, score}``.
"""

import json
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.core.config import Config, LOGGER
from app.core.errors import InputContractError
from app.dataset.schemas import (
    Category,
    Detection,
    GroundTruth,
    GroundTruthDataset,
    ImageInfo,
    default_categories,
)
from app.geometry.schemas import BBox, CenterPoint
from app.responses.builder import write_json


def contract_error(source: str, exc: ValidationError, prefix: str = "") -> InputContractError:
    """One-line message naming the first offending field."""
    first = exc.errors()[0]
    loc = ".".join(str(part) for part in (prefix, *first.get("loc", ())) if part != "")
    return InputContractError(f"{source}: field '{loc}': {first.get('msg', 'invalid value')}")


def read_json(path: str | Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputContractError(f"input file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputContractError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")


def _require(container: dict, key: str, source: str, where: str) -> Any:
    if key not in container:
        raise InputContractError(f"{source}: field '{where}{key}' is missing")
    return container[key]


def _parse_box(raw: Any, source: str, where: str) -> BBox:
    if not isinstance(raw, list) or len(raw) != 4:
        raise InputContractError(f"{source}: field '{where}' must be [x, y, w, h]")
    try:
        return BBox.from_xywh(raw)
    except ValidationError as exc:
        raise contract_error(source, exc, where)


def _parse_center(raw: Any, source: str, where: str) -> CenterPoint:
    if not isinstance(raw, list) or len(raw) != 2:
        raise InputContractError(f"{source}: field '{where}' must be [cx, cy]")
    try:
        return CenterPoint(x=raw[0], y=raw[1])
    except ValidationError as exc:
        raise contract_error(source, exc, where)


class DatasetRepository:
    def __init__(self, config: Config = Config()):
        self.config = config

    # ── Ground truth ──────────────────────────────────────────

    def parse_ground_truth(self, raw: Any, source: str = "<gt>", gt_side: float | None = None) -> GroundTruthDataset:
        side = self.config.gt_side if gt_side is None else gt_side
        if not isinstance(raw, dict):
            raise InputContractError(f"{source}: top level must be an object with images/annotations/categories")
        raw_images = _require(raw, "images", source, "")
        raw_annotations = _require(raw, "annotations", source, "")
        if not isinstance(raw_images, list) or not isinstance(raw_annotations, list):
            raise InputContractError(f"{source}: fields 'images' and 'annotations' must be arrays")

        try:
            images = [ImageInfo(**item) for item in raw_images]
        except (ValidationError, TypeError) as exc:
            if isinstance(exc, ValidationError):
                raise contract_error(source, exc, "images")
            raise InputContractError(f"{source}: field 'images' entries must be objects")

        raw_categories = raw.get("categories")
        if raw_categories is None:
            categories = default_categories()
        else:
            try:
                categories = [Category(**item) for item in raw_categories]
            except ValidationError as exc:
                raise contract_error(source, exc, "categories")

        annotations: list[GroundTruth] = []
        for i, item in enumerate(raw_annotations):
            where = f"annotations.{i}."
            if not isinstance(item, dict):
                raise InputContractError(f"{source}: field 'annotations.{i}' must be an object")
            box = _parse_box(_require(item, "bbox", source, where), source, f"{where}bbox")
            center = (
                _parse_center(item["center"], source, f"{where}center")
                if item.get("center") is not None else box.midpoint
            )
            try:
                annotations.append(GroundTruth(
                    id=item.get("id"),
                    image_id=_require(item, "image_id", source, where),
                    category_id=_require(item, "category_id", source, where),
                    center=center,
                    gt_side=side,
                    bbox=box,
                ))
            except ValidationError as exc:
                raise contract_error(source, exc, f"annotations.{i}")

        LOGGER.debug(f"{source}: {len(images)} images, {len(annotations)} annotations")
        return GroundTruthDataset(images=images, annotations=annotations, categories=categories)

    def load_ground_truth(self, path: str | Path, gt_side: float | None = None) -> GroundTruthDataset:
        return self.parse_ground_truth(read_json(path), str(path), gt_side)

    @staticmethod
    def ground_truth_payload(dataset: GroundTruthDataset) -> dict:
        annotations = []
        for index, gt in enumerate(dataset.annotations):
            box = gt.box
            annotations.append({
                "id": gt.id if gt.id is not None else index + 1,
                "image_id": gt.image_id,
                "category_id": gt.category_id,
                "bbox": box.to_xywh(),
                "area": box.area,
                "iscrowd": 0,
                "center": [gt.center.x, gt.center.y],
            })
        return {
            "images": [image.model_dump() for image in dataset.images],
            "annotations": annotations,
            "categories": [category.model_dump() for category in dataset.categories],
        }

    def save_ground_truth(self, path: str | Path, dataset: GroundTruthDataset) -> Path:
        return write_json(path, self.ground_truth_payload(dataset))

    # ── Detections ────────────────────────────────────────────

    def parse_detections(self, raw: Any, source: str = "<detections>") -> list[Detection]:
        if not isinstance(raw, list):
            raise InputContractError(f"{source}: top level must be an array of detections")
        detections: list[Detection] = []
        for i, item in enumerate(raw):
            where = f"{i}."
            if not isinstance(item, dict):
                raise InputContractError(f"{source}: field '{i}' must be an object")
            box = _parse_box(item["bbox"], source, f"{where}bbox") if item.get("bbox") is not None else None
            center = _parse_center(item["center"], source, f"{where}center") if item.get("center") is not None else None
            if box is None and center is None:
                raise InputContractError(f"{source}: field '{where}bbox' is missing (no bbox or center)")
            try:
                detections.append(Detection(
                    image_id=_require(item, "image_id", source, where),
                    score=_require(item, "score", source, where),
                    category_id=item.get("category_id"),
                    bbox=box,
                    center=center,
                    class_probs=item.get("class_probs"),
                ))
            except ValidationError as exc:
                raise contract_error(source, exc, str(i))
        LOGGER.debug(f"{source}: {len(detections)} detections")
        return detections

    def load_detections(self, path: str | Path) -> list[Detection]:
        return self.parse_detections(read_json(path), str(path))

    @staticmethod
    def detections_payload(dets: list[Detection]) -> list[dict]:
        payload = []
        for det in dets:
            record: dict[str, Any] = {"image_id": det.image_id, "category_id": det.category_id}
            if det.bbox is not None:
                record["bbox"] = det.bbox.to_xywh()
            record["score"] = det.score
            if det.center is not None:
                record["center"] = [det.center.x, det.center.y]
            if det.class_probs is not None:
                record["class_probs"] = list(det.class_probs)
            payload.append(record)
        return payload

    def save_detections(self, path: str | Path, dets: list[Detection]) -> Path:
        return write_json(path, self.detections_payload(dets))


def get_dataset_repository() -> DatasetRepository:
    return DatasetRepository()
