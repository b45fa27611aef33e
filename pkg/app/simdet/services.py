"""Synthetic scenes and a noisy center-point detector.

Every image draws from its own generator seeded with ``[seed, image_id]``, so
a dataset is bit-identical whatever order or thread count generates it.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from app.boxopt.services import draw_offsets
from app.core.config import LOGGER
from app.core.errors import SimulationError
from app.dataset.schemas import (
    N_FOREGROUND_CLASSES,
    Detection,
    GroundTruth,
    GroundTruthDataset,
    ImageInfo,
    default_categories,
)
from app.geometry.schemas import CenterPoint
from app.geometry.services import box_centered_at
from app.simdet.schemas import DetectorNoise, SceneConfig

# Placement attempts per object.
MAX_PLACEMENT_ATTEMPTS = 1000


def _rng(seed: int, image_id: int) -> np.random.Generator:
    return np.random.default_rng([seed, image_id])


def generate_scene(cfg: SceneConfig, image_id: int = 0) -> list[GroundTruth]:
    """Place ``cfg.object_count()`` cells with whole boxes inside the image."""
    count = cfg.object_count()
    width, height = cfg.image_extent
    half = cfg.gt_side / 2
    if count and (width < cfg.gt_side or height < cfg.gt_side):
        raise SimulationError(f"image {width}x{height} cannot hold a {cfg.gt_side} px box")

    rng = _rng(cfg.seed, image_id)
    probabilities = np.asarray(cfg.class_distribution, dtype=float)
    placed = np.empty((0, 2))
    gts: list[GroundTruth] = []
    for k in range(count):
        for _attempt in range(MAX_PLACEMENT_ATTEMPTS):
            candidate = rng.uniform((half, half), (width - half, height - half))
            if placed.size == 0 or np.min(np.hypot(*(placed - candidate).T)) >= cfg.min_center_separation:
                break
        else:
            raise SimulationError(
                f"could not place object {k + 1} of {count} with separation {cfg.min_center_separation} "
                f"after {MAX_PLACEMENT_ATTEMPTS} attempts on image {image_id}")
        placed = np.vstack([placed, candidate])
        category = int(rng.choice(N_FOREGROUND_CLASSES, p=probabilities)) + 1
        gts.append(GroundTruth(
            image_id=image_id,
            category_id=category,
            center=CenterPoint(x=float(candidate[0]), y=float(candidate[1])),
            gt_side=cfg.gt_side,
        ))
    return gts


def _score(rng: np.random.Generator, mean: float, std: float) -> float:
    return float(np.clip(rng.normal(mean, std), 0.0, 1.0))


def simulate_detector(
        gts: list[GroundTruth],
        noise: DetectorNoise,
        image_extent: tuple[float, float] = (1024.0, 1024.0),
        image_id: Optional[int] = None,
        gt_side: Optional[float] = None) -> list[Detection]:
    """One detection per surviving GT, then Poisson false positives.

    All draws for a GT happen whether or not it is missed, so toggling the miss
    rate never shifts the random stream of the other objects.
    """
    if image_id is None:
        image_id = gts[0].image_id if gts else 0
    side = gt_side if gt_side is not None else (gts[0].gt_side if gts else SceneConfig().gt_side)
    rng = _rng(noise.seed, image_id)
    confusion = noise.confusion_matrix()
    scores = noise.score_model

    detections: list[Detection] = []
    if gts:
        dx, dy = draw_offsets(noise.jitter, rng, len(gts))
        missed = rng.random(len(gts)) < noise.miss_rate
        for i, gt in enumerate(gts):
            label = int(rng.choice(N_FOREGROUND_CLASSES, p=confusion[gt.category_id - 1])) + 1
            score = _score(rng, scores.tp_mean, scores.tp_std)
            if missed[i]:
                continue
            center = CenterPoint(x=gt.center.x + float(dx[i]), y=gt.center.y + float(dy[i]))
            detections.append(Detection(
                image_id=image_id, score=score, category_id=label,
                bbox=box_centered_at(center, side), center=center,
            ))

    width, height = image_extent
    for _ in range(int(rng.poisson(noise.false_positive_rate))):
        center = CenterPoint(x=float(rng.uniform(0, width)), y=float(rng.uniform(0, height)))
        detections.append(Detection(
            image_id=image_id,
            score=_score(rng, scores.fp_mean, scores.fp_std),
            category_id=int(rng.integers(1, N_FOREGROUND_CLASSES + 1)),
            bbox=box_centered_at(center, side),
            center=center,
        ))
    return detections


def simulate_dataset(
        n_images: int,
        scene: SceneConfig,
        noise: DetectorNoise,
        workers: int = 1) -> tuple[GroundTruthDataset, list[Detection]]:
    """Images 1..n_images; annotation ids run sequentially in image order."""
    image_ids = list(range(1, n_images + 1))

    def run(image_id: int) -> tuple[list[GroundTruth], list[Detection]]:
        gts = generate_scene(scene, image_id)
        return gts, simulate_detector(gts, noise, scene.image_extent, image_id, scene.gt_side)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, image_ids))
    else:
        results = [run(image_id) for image_id in image_ids]

    width, height = scene.image_extent
    annotations: list[GroundTruth] = []
    detections: list[Detection] = []
    for gts, dets in results:
        for gt in gts:
            annotations.append(gt.model_copy(update={"id": len(annotations) + 1}))
        detections.extend(dets)

    dataset = GroundTruthDataset(
        images=[ImageInfo(id=i, width=width, height=height, file_name=f"sim_{i:05d}.png") for i in image_ids],
        annotations=annotations,
        categories=default_categories(),
    )
    LOGGER.info(f"simulated {n_images} images: {len(annotations)} GT, {len(detections)} detections")
    return dataset, detections
