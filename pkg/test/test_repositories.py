"""Unit tests for the file repositories, run-config resolution and the error registry.

Run: uv run python test/test_repositories.py
"""
import json
import os
import tempfile

from app.boxopt.repository import SizeResultRepository
from app.boxopt.services import optimize_size
from app.boxopt.schemas import DeterministicJitter
from app.core.config import load_config_file, resolve_settings
from app.core.errors import (
    EXIT_INPUT_CONTRACT,
    EXIT_INTERNAL,
    EXIT_USAGE,
    CenterboxError,
    InputContractError,
    SimulationError,
    UsageError,
    describe,
    exit_code_for,
)
from app.dataset.repository import DatasetRepository
from app.dataset.schemas import GroundTruthDataset
from app.geometry.schemas import JitterOffset
from app.matching.repository import JitterRepository
from app.matching.schemas import MatchPair
from app.responses.builder import RecordBuilder, dumps

GT_PAYLOAD = {
    "images": [{"id": 1, "width": 1024, "height": 1024, "file_name": "a.png"}],
    "annotations": [
        {"id": 1, "image_id": 1, "category_id": 4, "bbox": [50, 60, 100, 100]},
        {"id": 2, "image_id": 1, "category_id": 2, "bbox": [300, 300, 100, 100], "center": [351, 349]},
    ],
}


def _write(directory, name, text):
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return path


def _expect_contract_error(call, fragment):
    try:
        call()
        assert False
    except InputContractError as e:
        assert fragment in e.message, e.message


def test_ground_truth_center_defaults_to_box_midpoint():
    dataset = DatasetRepository().parse_ground_truth(GT_PAYLOAD)
    assert dataset.annotations[0].center.x == 100 and dataset.annotations[0].center.y == 110
    assert dataset.annotations[1].center.x == 351
    assert [c.name for c in dataset.categories][:3] == ["NILM", "ENDO", "INFL"]
    assert len(dataset.categories) == 8


def test_ground_truth_save_load_keeps_boxes_and_centers():
    repo = DatasetRepository()
    dataset = repo.parse_ground_truth(GT_PAYLOAD)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "gt.json")
        repo.save_ground_truth(path, dataset)
        again = repo.load_ground_truth(path)
        with open(path, encoding="utf-8") as f:
            saved = json.load(f)
    assert again == dataset
    assert saved["annotations"][0]["area"] == 10000
    assert saved["annotations"][0]["iscrowd"] == 0
    assert saved["annotations"][1]["center"] == [351, 349]


def test_ground_truth_field_errors_name_the_path():
    repo = DatasetRepository()
    bad_box = {"images": [], "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, -5, 10]}]}
    _expect_contract_error(lambda: repo.parse_ground_truth(bad_box, "gt.json"), "annotations.0.bbox")
    short_box = {"images": [], "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, 5]}]}
    _expect_contract_error(lambda: repo.parse_ground_truth(short_box, "gt.json"), "annotations.0.bbox")
    missing = {"images": [], "annotations": [{"id": 1, "category_id": 1, "bbox": [0, 0, 5, 5]}]}
    _expect_contract_error(lambda: repo.parse_ground_truth(missing, "gt.json"), "annotations.0.image_id")
    _expect_contract_error(lambda: repo.parse_ground_truth({"annotations": []}, "gt.json"), "'images'")
    _expect_contract_error(lambda: repo.parse_ground_truth([], "gt.json"), "top level")


def test_malformed_json_names_line_and_column():
    with tempfile.TemporaryDirectory() as tmp:
        path = _write(tmp, "broken.json", '{\n  "images": [,\n}')
        _expect_contract_error(lambda: DatasetRepository().load_ground_truth(path), "line 2 column")
        _expect_contract_error(lambda: DatasetRepository().load_detections(os.path.join(tmp, "nope.json")),
                               "not found")


def test_detections_parse_and_serialize():
    repo = DatasetRepository()
    raw = [
        {"image_id": 1, "category_id": 3, "bbox": [0, 0, 100, 100], "score": 0.75},
        {"image_id": 1, "center": [10, 20], "score": 0.5, "class_probs": [0.1] * 8 + [0.2]},
    ]
    dets = repo.parse_detections(raw)
    assert dets[0].bbox.width == 100 and dets[0].center is None
    assert dets[1].bbox is None and dets[1].category_id is None
    payload = repo.detections_payload(dets)
    assert payload[0] == {"image_id": 1, "category_id": 3, "bbox": [0.0, 0.0, 100.0, 100.0], "score": 0.75}
    assert payload[1]["center"] == [10.0, 20.0]
    assert len(payload[1]["class_probs"]) == 9


def test_detection_errors():
    repo = DatasetRepository()
    _expect_contract_error(lambda: repo.parse_detections({"a": 1}), "array")
    _expect_contract_error(lambda: repo.parse_detections([{"image_id": 1, "score": 0.5}]), "0.bbox")
    _expect_contract_error(lambda: repo.parse_detections([{"image_id": 1, "bbox": [0, 0, 1, 1], "score": 1.5}]),
                           "0.score")
    _expect_contract_error(lambda: repo.parse_detections([{"image_id": 1, "bbox": [0, 0, 1, 1]}]), "0.score")


def test_jitter_file_round_trip_and_errors():
    repo = JitterRepository()
    pairs = [
        MatchPair(image_id=1, gt_index=0, det_index=2, offset=JitterOffset(dx=0.5, dy=-1.25), score=0.9),
        MatchPair(image_id=3, gt_index=4, det_index=0, offset=JitterOffset(dx=-0.1, dy=0.3), score=0.4),
    ]
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "pairs.ndjson")
        repo.save_pairs(path, pairs)
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0]) == {"image_id": 1, "gt_index": 0, "det_index": 2, "dx": 0.5, "dy": -1.25,
                                        "score": 0.9}
        assert repo.load_pairs(path) == pairs
        jitter = repo.load_jitter(path)
        assert jitter.dx == [0.5, -0.1] and jitter.dy == [-1.25, 0.3]

        bad = _write(tmp, "bad.ndjson", lines[0] + "\n{oops\n")
        _expect_contract_error(lambda: repo.load_pairs(bad), "line 2")
        missing = _write(tmp, "missing.ndjson", '{"image_id": 1, "dx": 0, "dy": 0, "score": 1}\n')
        _expect_contract_error(lambda: repo.load_pairs(missing), "gt_index")


def test_curve_export_and_s_star_lookup():
    repo = SizeResultRepository()
    result = optimize_size(100, DeterministicJitter(dx=0.75, dy=0.75))
    with tempfile.TemporaryDirectory() as tmp:
        curve = os.path.join(tmp, "curve.tsv")
        repo.save_curve(curve, result)
        with open(curve, encoding="utf-8") as f:
            lines = f.read().splitlines()
        assert lines[0] == "size\texpected_iou"
        assert len(lines) == len(result.curve) + 1
        assert lines[1].split("\t")[0] == "95"

        record = os.path.join(tmp, "result.json")
        RecordBuilder.write(record, RecordBuilder.success("optimize-size", result, {"gt_side": 100}))
        assert repo.load_s_star(record) == result.s_star

        bare = _write(tmp, "bare.json", json.dumps({"s_star": 101.5}))
        assert repo.load_s_star(bare) == 101.5
        broken = _write(tmp, "broken.json", json.dumps({"data": {"s_star": -3}}))
        _expect_contract_error(lambda: repo.load_s_star(broken), "data.s_star")


def test_records_are_deterministic():
    record = RecordBuilder.success("evaluate", {"map": 0.5, "per_class_ap": {1: 0.5}}, {"gt_side": 100.0})
    first = dumps(record.model_dump(mode="json"))
    second = dumps(record.model_dump(mode="json"))
    assert first == second
    assert first.endswith("\n")
    parsed = json.loads(first)
    assert parsed["status"] == "ok"
    assert parsed["data"]["per_class_ap"] == {"1": 0.5}
    assert parsed["config"] == {"gt_side": 100.0}


def test_resolve_settings_precedence():
    defaults = {"gt_side": 100.0, "workers": 1, "step": 0.25}
    effective = resolve_settings(defaults, {"workers": 4, "step": 0.5}, {"step": 0.1, "gt_side": None})
    assert effective == {"gt_side": 100.0, "workers": 4, "step": 0.1}
    normalized = resolve_settings({"max_dets": 100}, {"max-dets": 10}, {})
    assert normalized == {"max_dets": 10}
    _expect_contract_error(lambda: resolve_settings(defaults, {"bogus": 1}, {}), "bogus")


def test_load_config_file():
    assert load_config_file(None) == {}
    with tempfile.TemporaryDirectory() as tmp:
        path = _write(tmp, "run.yaml", "global:\n  gt_side: 120\nevaluate:\n  class_agnostic: true\n")
        assert load_config_file(path) == {"global": {"gt_side": 120}, "evaluate": {"class_agnostic": True}}
        listing = _write(tmp, "list.yaml", "- 1\n- 2\n")
        _expect_contract_error(lambda: load_config_file(listing), "mapping")
        broken = _write(tmp, "broken.yaml", "a: [1, 2\n")
        _expect_contract_error(lambda: load_config_file(broken), "YAML")
        _expect_contract_error(lambda: load_config_file(os.path.join(tmp, "absent.yaml")), "not found")


def test_exit_codes_follow_the_registry():
    assert exit_code_for(UsageError("x")) == EXIT_USAGE
    assert exit_code_for(InputContractError("x")) == EXIT_INPUT_CONTRACT
    assert exit_code_for(SimulationError("x")) == EXIT_INPUT_CONTRACT
    assert exit_code_for(CenterboxError("x")) == EXIT_INTERNAL
    assert exit_code_for(RuntimeError("boom")) == EXIT_INTERNAL


def test_describe_is_one_line():
    assert describe(InputContractError("bad\n  field")) == "bad field"
    assert describe(ValueError()) == "ValueError"


def test_empty_dataset_defaults():
    dataset = GroundTruthDataset()
    assert dataset.by_image() == {}
    assert len(dataset.categories) == 8


if __name__ == "__main__":
    tests = [
        test_ground_truth_center_defaults_to_box_midpoint,
        test_ground_truth_save_load_keeps_boxes_and_centers,
        test_ground_truth_field_errors_name_the_path,
        test_malformed_json_names_line_and_column,
        test_detections_parse_and_serialize,
        test_detection_errors,
        test_jitter_file_round_trip_and_errors,
        test_curve_export_and_s_star_lookup,
        test_records_are_deterministic,
        test_resolve_settings_precedence,
        test_load_config_file,
        test_exit_codes_follow_the_registry,
        test_describe_is_one_line,
        test_empty_dataset_defaults,
    ]
    for t in tests:
        t()
        print(f"PASS: {t.__name__}")
    print("\nAll repository and config unit tests passed!")
