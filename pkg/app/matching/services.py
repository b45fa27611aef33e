"""Per-image GT/detection matching by center distance and jitter extraction.

Greedy matching walks detections by descending score (ties: input order) and
gives each the nearest still-free GT within the radius (ties: lowest GT index),
the same way mAP matching consumes detections. Optimal matching solves a
linear sum assignment that first maximizes the number of in-radius pairs and
then minimizes their total center distance.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from app.boxopt.schemas import EmpiricalJitter
from app.core.config import LOGGER
from app.core.errors import InputContractError
from app.dataset.schemas import Detection, GroundTruth
from app.geometry.schemas import JitterOffset
from app.matching.schemas import JitterSummary, MatchConfig, MatchPair, MatchStrategy
from app.postprocess.services import center_of

RADIAL_QUANTILES = (0.5, 0.9, 0.99)


def _center_arrays(gts: list[GroundTruth], dets: list[Detection]) -> tuple[np.ndarray, np.ndarray]:
    gt_xy = np.array([[gt.center.x, gt.center.y] for gt in gts], dtype=float).reshape(-1, 2)
    det_centers = [center_of(det) for det in dets]
    det_xy = np.array([[c.x, c.y] for c in det_centers], dtype=float).reshape(-1, 2)
    return gt_xy, det_xy


def _pair(image_id: int, gi: int, di: int, gt_xy: np.ndarray, det_xy: np.ndarray, score: float) -> MatchPair:
    return MatchPair(
        image_id=image_id,
        gt_index=gi,
        det_index=di,
        offset=JitterOffset(dx=float(det_xy[di, 0] - gt_xy[gi, 0]), dy=float(det_xy[di, 1] - gt_xy[gi, 1])),
        score=score,
    )


def _match_greedy(image_id, dets, gt_xy, det_xy, dist, radius) -> list[MatchPair]:
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    free = np.ones(len(gt_xy), dtype=bool)
    pairs: list[MatchPair] = []
    for di in order:
        candidates = np.where(free & (dist[di] <= radius), dist[di], np.inf)
        gi = int(np.argmin(candidates))  # argmin returns the first (lowest index) minimum
        if not np.isfinite(candidates[gi]):
            continue
        free[gi] = False
        pairs.append(_pair(image_id, gi, di, gt_xy, det_xy, dets[di].score))
    return pairs


def _match_optimal(image_id, dets, gt_xy, det_xy, dist, radius) -> list[MatchPair]:
    admissible = dist <= radius
    # any out-of-radius pair costs more than every in-radius assignment combined
    penalty = radius * (min(dist.shape) + 1)
    cost = np.where(admissible, dist, penalty)
    rows, cols = linear_sum_assignment(cost)
    pairs = [
        _pair(image_id, int(gi), int(di), gt_xy, det_xy, dets[di].score)
        for di, gi in zip(rows, cols)
        if admissible[di, gi]
    ]
    return sorted(pairs, key=lambda p: (-p.score, p.det_index))


def match_image(gts: list[GroundTruth], dets: list[Detection], cfg: MatchConfig) -> list[MatchPair]:
    image_ids = {gt.image_id for gt in gts} | {det.image_id for det in dets}
    if len(image_ids) > 1:
        raise InputContractError(f"match_image: items span several image ids {sorted(image_ids)}")
    if not gts or not dets:
        return []
    image_id = image_ids.pop()

    gt_xy, det_xy = _center_arrays(gts, dets)
    dist = np.hypot(det_xy[:, None, 0] - gt_xy[None, :, 0], det_xy[:, None, 1] - gt_xy[None, :, 1])
    if cfg.strategy == MatchStrategy.OPTIMAL:
        pairs = _match_optimal(image_id, dets, gt_xy, det_xy, dist, cfg.max_center_distance)
    else:
        pairs = _match_greedy(image_id, dets, gt_xy, det_xy, dist, cfg.max_center_distance)
    LOGGER.debug(f"image {image_id}: {len(pairs)} pairs from {len(gts)} GT / {len(dets)} detections")
    return pairs


def match_dataset(
        gts_by_image: dict[int, list[GroundTruth]],
        dets_by_image: dict[int, list[Detection]],
        cfg: MatchConfig,
        workers: int = 1) -> list[MatchPair]:
    """Match every image; output is ordered by image id whatever the worker count."""
    image_ids = sorted(set(gts_by_image) | set(dets_by_image))

    def run(image_id: int) -> list[MatchPair]:
        return match_image(gts_by_image.get(image_id, []), dets_by_image.get(image_id, []), cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_image = list(pool.map(run, image_ids))
    else:
        per_image = [run(image_id) for image_id in image_ids]
    pairs = [pair for chunk in per_image for pair in chunk]
    LOGGER.info(f"matched {len(pairs)} pairs over {len(image_ids)} images ({cfg.strategy})")
    return pairs


def collect_jitter(pairs: list[MatchPair]) -> EmpiricalJitter:
    return EmpiricalJitter(
        dx=[pair.offset.dx for pair in pairs],
        dy=[pair.offset.dy for pair in pairs],
    )


def summarize_jitter(jitter: EmpiricalJitter) -> JitterSummary:
    if not jitter.dx:
        return JitterSummary(count=0)
    frame = pd.DataFrame({"dx": jitter.dx, "dy": jitter.dy})
    frame["abs_dx"] = frame["dx"].abs()
    frame["abs_dy"] = frame["dy"].abs()
    frame["radial"] = np.hypot(frame["dx"], frame["dy"])
    count = len(frame)
    quantiles = frame["radial"].quantile(list(RADIAL_QUANTILES))

    def std(column: str):
        return float(frame[column].std()) if count > 1 else None

    return JitterSummary(
        count=count,
        mean_abs_dx=float(frame["abs_dx"].mean()),
        mean_abs_dy=float(frame["abs_dy"].mean()),
        mean_radial=float(frame["radial"].mean()),
        std_dx=std("dx"),
        std_dy=std("dy"),
        rms_radial=float(np.sqrt((frame["radial"] ** 2).mean())),
        radial_quantiles={f"q{int(q * 100)}": float(v) for q, v in quantiles.items()},
    )
