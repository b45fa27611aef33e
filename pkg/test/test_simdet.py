"""Unit tests for synthetic scenes and the noisy detector.

Run: uv run python test/test_simdet.py
"""
import itertools

import numpy as np

from app.boxopt.schemas import DeterministicJitter, GaussianJitter
from app.core.errors import InputContractError, SimulationError
from app.dataset.schemas import detections_by_image
from app.matching.schemas import MatchConfig
from app.matching.services import collect_jitter, match_dataset, summarize_jitter
from app.simdet.schemas import DetectorNoise, SceneConfig, SimulationConfig
from app.simdet.services import generate_scene, simulate_dataset, simulate_detector


def test_scene_is_deterministic_per_seed_and_image():
    cfg = SceneConfig(n_objects=20, seed=3)
    assert generate_scene(cfg, 1) == generate_scene(cfg, 1)
    assert generate_scene(cfg, 1) != generate_scene(cfg, 2)
    assert generate_scene(cfg, 1) != generate_scene(SceneConfig(n_objects=20, seed=4), 1)


def test_boxes_lie_inside_the_image():
    cfg = SceneConfig(n_objects=100, image_extent=(640, 480), seed=1)
    for gt in generate_scene(cfg, 1):
        box = gt.box
        assert box.x_min >= 0 and box.y_min >= 0
        assert box.x_max <= 640 + 1e-9 and box.y_max <= 480 + 1e-9
        assert 1 <= gt.category_id <= 8


def test_min_center_separation_holds():
    cfg = SceneConfig(n_objects=30, min_center_separation=110, seed=9)
    gts = generate_scene(cfg, 1)
    assert len(gts) == 30
    for a, b in itertools.combinations(gts, 2):
        assert np.hypot(a.center.x - b.center.x, a.center.y - b.center.y) >= 110


def test_infeasible_packing_raises():
    cfg = SceneConfig(n_objects=10, image_extent=(200, 200), min_center_separation=150)
    try:
        generate_scene(cfg, 1)
        assert False
    except SimulationError as e:
        assert isinstance(e, InputContractError)
        assert "separation" in e.message


def test_density_sets_object_count():
    cfg = SceneConfig(n_objects=None, density=20.0, image_extent=(1000, 1000))
    assert cfg.object_count() == 20
    assert len(generate_scene(cfg, 1)) == 20


def test_class_distribution_is_respected():
    distribution = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    gts = generate_scene(SceneConfig(n_objects=30, class_distribution=distribution), 1)
    assert {g.category_id for g in gts} == {3}


def test_noiseless_detector_reproduces_ground_truth():
    gts = generate_scene(SceneConfig(n_objects=25, seed=2), 1)
    dets = simulate_detector(gts, DetectorNoise(), image_id=1)
    assert len(dets) == len(gts)
    for gt, det in zip(gts, dets):
        assert det.bbox == gt.box
        assert det.center == gt.center
        assert det.category_id == gt.category_id
        assert 0.0 <= det.score <= 1.0


def test_deterministic_jitter_offsets_every_center():
    gts = generate_scene(SceneConfig(n_objects=10, seed=2), 1)
    dets = simulate_detector(gts, DetectorNoise(jitter=DeterministicJitter(dx=1.5, dy=0.5)), image_id=1)
    for gt, det in zip(gts, dets):
        assert abs(abs(det.center.x - gt.center.x) - 1.5) < 1e-9
        assert abs(abs(det.center.y - gt.center.y) - 0.5) < 1e-9


def test_miss_rate_does_not_shift_other_draws():
    gts = generate_scene(SceneConfig(n_objects=40, seed=8), 1)
    base = DetectorNoise(jitter=GaussianJitter(sigma=1.0), false_positive_rate=2.0, seed=5)
    full = simulate_detector(gts, base, image_id=1)
    thinned = simulate_detector(gts, base.model_copy(update={"miss_rate": 0.5}), image_id=1)
    assert len(thinned) < len(full)
    assert all(det in full for det in thinned)


def test_false_positive_rate_is_poisson_mean():
    scene = SceneConfig(n_objects=0)
    noise = DetectorNoise(false_positive_rate=3.0, seed=1)
    _, dets = simulate_dataset(300, scene, noise)
    assert abs(len(dets) / 300 - 3.0) < 0.4


def test_dataset_is_worker_independent_and_ordered():
    scene = SceneConfig(n_objects=15, seed=4)
    noise = DetectorNoise(jitter=GaussianJitter(sigma=1.0), miss_rate=0.1, false_positive_rate=1.0, seed=4)
    serial = simulate_dataset(6, scene, noise, workers=1)
    threaded = simulate_dataset(6, scene, noise, workers=3)
    assert serial == threaded
    dataset, dets = serial
    assert [image.id for image in dataset.images] == [1, 2, 3, 4, 5, 6]
    assert [g.id for g in dataset.annotations] == list(range(1, len(dataset.annotations) + 1))
    assert [d.image_id for d in dets] == sorted(d.image_id for d in dets)
    assert dataset.images[0].file_name == "sim_00001.png"


def test_matching_recovers_gaussian_jitter():
    sigma = 1.5
    scene = SceneConfig(n_objects=150, min_center_separation=30, seed=12)
    noise = DetectorNoise(jitter=GaussianJitter(sigma=sigma), seed=12)
    dataset, dets = simulate_dataset(70, scene, noise)
    pairs = match_dataset(dataset.by_image(), detections_by_image(dets), MatchConfig.for_gt_side(100))
    assert len(pairs) == len(dataset.annotations) >= 10_000
    summary = summarize_jitter(collect_jitter(pairs))
    assert abs(summary.std_dx - sigma) <= 0.05 * sigma
    assert abs(summary.std_dy - sigma) <= 0.05 * sigma
    assert abs(summary.mean_abs_dx - sigma * np.sqrt(2 / np.pi)) <= 0.05 * sigma * np.sqrt(2 / np.pi)


def test_config_validation():
    from pydantic import ValidationError
    for build in (
            lambda: SceneConfig(n_objects=None, density=None),
            lambda: SceneConfig(class_distribution=[0.5, 0.5]),
            lambda: SceneConfig(class_distribution=[0.2] * 8),
            lambda: DetectorNoise(miss_rate=1.5),
            lambda: DetectorNoise(false_positive_rate=-1),
            lambda: DetectorNoise(confusion=[[1.0] + [0.0] * 7] * 7),
            lambda: SimulationConfig(n_images=0),
    ):
        try:
            build()
            assert False
        except ValidationError:
            pass


def test_simulation_config_parses_nested_jitter():
    sim = SimulationConfig.model_validate({
        "n_images": 2,
        "scene": {"n_objects": 5},
        "noise": {"jitter": {"kind": "gaussian", "sigma": 0.8}, "miss_rate": 0.2},
    })
    assert sim.noise.jitter == GaussianJitter(sigma=0.8)
    assert sim.scene.n_objects == 5


if __name__ == "__main__":
    tests = [
        test_scene_is_deterministic_per_seed_and_image,
        test_boxes_lie_inside_the_image,
        test_min_center_separation_holds,
        test_infeasible_packing_raises,
        test_density_sets_object_count,
        test_class_distribution_is_respected,
        test_noiseless_detector_reproduces_ground_truth,
        test_deterministic_jitter_offsets_every_center,
        test_miss_rate_does_not_shift_other_draws,
        test_false_positive_rate_is_poisson_mean,
        test_dataset_is_worker_independent_and_ordered,
        test_matching_recovers_gaussian_jitter,
        test_config_validation,
        test_simulation_config_parses_nested_jitter,
    ]
    for t in tests:
        t()
        print(f"PASS: {t.__name__}")
    print("\nAll simdet unit tests passed!")
