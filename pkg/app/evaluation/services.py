"""COCO-style mAP over fixed-size boxes.

Per image and class (or per image only, class-agnostic), detections are taken
in descending score order and each claims the still-unmatched GT with the
highest IoU at or above the threshold. TP/FP flags of all images are then
ranked by score into one precision/recall curve per class and threshold. AP is
the mean interpolated precision at ``recall_points`` evenly spaced recall
levels, or the area under the precision envelope when ``recall_points == 0``.
Classes without ground truth are left out of the mean.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.core.config import LOGGER
from app.core.errors import InputContractError
from app.dataset.schemas import Detection, GroundTruthDataset
from app.evaluation.schemas import EvalConfig, EvalCounts, EvalReport, SweepPoint
from app.geometry.services import iou_matrix
from app.postprocess.services import apply_fixed_size

AGNOSTIC_CLASS = 0


@dataclass
class _ClassLedger:
    """Per-class accumulation of scores, ranking keys and TP flags per threshold."""
    n_gt: int = 0
    scores: list[float] = field(default_factory=list)
    order_keys: list[int] = field(default_factory=list)
    tp_rows: list[np.ndarray] = field(default_factory=list)


def threshold_key(t: float) -> str:
    return f"{t:.4g}"


def _validate(gt: GroundTruthDataset, dets: list[Detection], cfg: EvalConfig):
    seen: set[int] = set()
    for ann in gt.annotations:
        if ann.id is None:
            continue
        if ann.id in seen:
            raise InputContractError(f"ground truth: duplicate annotation id {ann.id}")
        seen.add(ann.id)

    known_images = {image.id for image in gt.images} or {ann.image_id for ann in gt.annotations}
    for i, det in enumerate(dets):
        if det.image_id not in known_images:
            raise InputContractError(f"detections: field '{i}.image_id' refers to unknown image {det.image_id}")

    if cfg.class_agnostic:
        return
    known_categories = {category.id for category in gt.categories}
    for ann in gt.annotations:
        if ann.category_id not in known_categories:
            raise InputContractError(f"ground truth: annotation {ann.id} has unknown category {ann.category_id}")
    for i, det in enumerate(dets):
        if det.category_id is None:
            raise InputContractError(
                f"detections: field '{i}.category_id' is missing; reduce class_probs with apply-size first")
        if det.category_id not in known_categories:
            raise InputContractError(f"detections: field '{i}.category_id' has unknown category {det.category_id}")


def _greedy_tp(ious: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """TP flags, shape (n_thresholds, n_dets); rows of ``ious`` are in score order."""
    n_det, n_gt = ious.shape
    tp = np.zeros((len(thresholds), n_det), dtype=bool)
    if n_gt == 0:
        return tp
    for ti, t in enumerate(thresholds):
        free = np.ones(n_gt, dtype=bool)
        for di in range(n_det):
            candidates = np.where(free & (ious[di] >= t), ious[di], -1.0)
            gi = int(np.argmax(candidates))  # first maximum -> lowest GT index
            if candidates[gi] < 0:
                continue
            free[gi] = False
            tp[ti, di] = True
    return tp


def average_precision(recall: np.ndarray, precision: np.ndarray, recall_points: int) -> float:
    if recall.size == 0:
        return 0.0
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    if recall_points > 0:
        levels = np.linspace(.0, 1.00, recall_points, endpoint=True)
        inds = np.searchsorted(recall, levels, side="left")
        sampled = np.where(inds < recall.size, envelope[np.minimum(inds, recall.size - 1)], 0.0)
        return float(np.mean(sampled))
    mrec = np.concatenate([[0.0], recall])
    mpre = np.concatenate([[envelope[0]], envelope])
    steps = np.where(np.diff(mrec) > 0)[0] + 1
    return float(np.sum((mrec[steps] - mrec[steps - 1]) * mpre[steps]))


def _image_ledgers(gt_boxes, det_items, thresholds, max_dets) -> tuple[list[float], list[int], np.ndarray]:
    """Score-sorted, truncated detections of one image/class and their TP flags."""
    ranked = sorted(det_items, key=lambda item: (-item[1].score, item[0]))[:max_dets]
    if not ranked:
        return [], [], np.zeros((len(thresholds), 0), dtype=bool)
    det_boxes = np.array([det.bbox.to_xywh() for _, det in ranked], dtype=float)
    ious = iou_matrix(det_boxes, gt_boxes) if len(gt_boxes) else np.zeros((len(ranked), 0))
    return [det.score for _, det in ranked], [index for index, _ in ranked], _greedy_tp(ious, thresholds)


def evaluate(gt: GroundTruthDataset, dets: list[Detection], cfg: EvalConfig = EvalConfig()) -> EvalReport:
    _validate(gt, dets, cfg)
    for i, det in enumerate(dets):
        if det.bbox is None:
            raise InputContractError(f"detections: field '{i}.bbox' is missing; run apply-size first")

    thresholds = list(cfg.iou_thresholds)
    tp50_index = next((i for i, t in enumerate(thresholds) if np.isclose(t, 0.5)), None)
    if tp50_index is None:
        thresholds.append(0.5)
        tp50_index = len(thresholds) - 1
    threshold_array = np.asarray(thresholds, dtype=float)

    def class_of(category_id: Optional[int]) -> int:
        return AGNOSTIC_CLASS if cfg.class_agnostic else category_id

    gt_groups: dict[tuple[int, int], list] = {}
    for ann in gt.annotations:
        gt_groups.setdefault((class_of(ann.category_id), ann.image_id), []).append(ann.box.to_xywh())
    det_groups: dict[tuple[int, int], list] = {}
    for index, det in enumerate(dets):
        det_groups.setdefault((class_of(det.category_id), det.image_id), []).append((index, det))

    ledgers: dict[int, _ClassLedger] = {}
    for (cls, _image), boxes in gt_groups.items():
        ledgers.setdefault(cls, _ClassLedger()).n_gt += len(boxes)

    for key in sorted(set(gt_groups) | set(det_groups)):
        cls = key[0]
        if cls not in ledgers:
            continue
        gt_boxes = np.array(gt_groups.get(key, []), dtype=float).reshape(-1, 4)
        scores, order_keys, tp = _image_ledgers(gt_boxes, det_groups.get(key, []), threshold_array,
                                                cfg.max_dets_per_image)
        ledger = ledgers[cls]
        ledger.scores.extend(scores)
        ledger.order_keys.extend(order_keys)
        ledger.tp_rows.append(tp)

    classes = sorted(ledgers)
    ap = np.zeros((len(cfg.iou_thresholds), len(classes)))
    n_tp_50 = 0
    for ci, cls in enumerate(classes):
        ledger = ledgers[cls]
        tp_all = np.concatenate(ledger.tp_rows, axis=1) if ledger.tp_rows else np.zeros((len(thresholds), 0), bool)
        order = np.lexsort((np.asarray(ledger.order_keys), -np.asarray(ledger.scores)))
        tp_sorted = tp_all[:, order]
        n_tp_50 += int(tp_all[tp50_index].sum())
        for ti in range(len(cfg.iou_thresholds)):
            tps = np.cumsum(tp_sorted[ti])
            fps = np.cumsum(~tp_sorted[ti])
            recall = tps / ledger.n_gt
            precision = tps / np.maximum(tps + fps, 1)
            ap[ti, ci] = average_precision(recall, precision, cfg.recall_points)

    if classes:
        per_threshold = ap.mean(axis=1)
        per_class = ap.mean(axis=0)
    else:
        LOGGER.warning("evaluate: ground truth has no annotations, every AP is 0")
        per_threshold = np.zeros(len(cfg.iou_thresholds))
        per_class = np.zeros(0)

    def ap_at(t: float) -> Optional[float]:
        hits = [i for i, th in enumerate(cfg.iou_thresholds) if np.isclose(th, t)]
        return float(per_threshold[hits[0]]) if hits else None

    report = EvalReport(
        map=float(per_threshold.mean()),
        ap50=ap_at(0.5),
        ap75=ap_at(0.75),
        per_class_ap={int(cls): float(v) for cls, v in zip(classes, per_class)},
        per_threshold_ap={threshold_key(t): float(v) for t, v in zip(cfg.iou_thresholds, per_threshold)},
        counts=EvalCounts(n_gt=len(gt.annotations), n_det=len(dets), n_tp_50=n_tp_50),
        class_agnostic=cfg.class_agnostic,
        recall_points=cfg.recall_points,
    )
    LOGGER.info(f"mAP = {report.map:.6f} over {len(classes)} classes "
                f"({'class-agnostic' if cfg.class_agnostic else 'class-aware'})")
    return report


def sweep_size_vs_map(
        gt: GroundTruthDataset,
        dets: list[Detection],
        sizes: list[float],
        cfg: EvalConfig = EvalConfig(),
        workers: int = 1) -> list[SweepPoint]:
    if not sizes:
        raise InputContractError("sweep needs at least one box size")

    def run(size: float) -> SweepPoint:
        report = evaluate(gt, apply_fixed_size(dets, size), cfg)
        return SweepPoint(size=float(size), map=report.map)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, sizes))
    return [run(size) for size in sizes]
