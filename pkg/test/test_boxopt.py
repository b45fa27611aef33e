"""Unit tests for expected IoU under jitter models and the S* search.

Run: uv run python test/test_boxopt.py
"""
import numpy as np

from app.boxopt.schemas import DeterministicJitter, EmpiricalJitter, GaussianJitter, UniformRadialJitter
from app.boxopt.services import (
    default_search_range,
    expected_iou,
    golden_section_maximize,
    monte_carlo_expected_iou,
    optimize_size,
    size_grid,
)
from app.core.errors import InputContractError
from app.geometry.schemas import FixedSizeSpec
from app.geometry.services import jittered_iou


def test_deterministic_equals_closed_form():
    model = DeterministicJitter(dx=0.75, dy=0.75)
    for size in (98.0, 100.0, 101.5, 104.0):
        expected = jittered_iou(FixedSizeSpec(gt_side=100, pred_side=size), 0.75, 0.75)
        assert expected_iou(100, size, model) == expected


def test_analytic_optimum_family():
    for delta in (0.25, 0.5, 0.75, 1.0, 1.5):
        result = optimize_size(100, DeterministicJitter(dx=delta, dy=delta))
        assert abs(result.s_star - (100 + 2 * delta)) <= 0.02, (delta, result.s_star)


def test_three_quarter_pixel_jitter_gives_101_5():
    result = optimize_size(100, DeterministicJitter(dx=0.75, dy=0.75))
    assert abs(result.s_star - 101.5) <= 0.02
    assert abs(result.expected_iou_at_star - 10000 / 101.5 ** 2) < 1e-9


def test_zero_jitter_optimum_is_gt_side():
    for model in (DeterministicJitter(dx=0, dy=0), GaussianJitter(sigma=0), UniformRadialJitter(lo=0, hi=0)):
        result = optimize_size(100, model)
        assert result.s_star == 100.0
        assert result.expected_iou_at_star == 1.0


def test_optimum_is_best_point_of_curve():
    result = optimize_size(100, GaussianJitter(sigma=1.0))
    best_on_grid = max(point.expected_iou for point in result.curve)
    assert result.expected_iou_at_star >= best_on_grid
    assert result.search_range == default_search_range(100)
    assert result.curve[0].size == 95.0 and result.curve[-1].size == 115.0
    assert result.model_kind == "gaussian"


def test_oracle_agreement_matrix():
    models = [
        GaussianJitter(sigma=0.5),
        GaussianJitter(sigma=1.0),
        GaussianJitter(sigma=1.5),
        UniformRadialJitter(lo=1.0, hi=1.5),
    ]
    for model in models:
        for size in (100.0, 101.5, 103.0):
            exact = expected_iou(100, size, model)
            sampled = monte_carlo_expected_iou(100, size, model, n_samples=1_000_000, seed=2024)
            assert abs(exact - sampled) <= 1e-3, (model, size, exact, sampled)


def test_monte_carlo_is_seeded_and_worker_independent():
    model = GaussianJitter(sigma=1.2)
    a = monte_carlo_expected_iou(100, 101, model, n_samples=200_000, seed=5, workers=1)
    b = monte_carlo_expected_iou(100, 101, model, n_samples=200_000, seed=5, workers=4)
    c = monte_carlo_expected_iou(100, 101, model, n_samples=200_000, seed=6, workers=1)
    assert a == b
    assert a != c


def test_monte_carlo_deterministic_is_exact():
    model = DeterministicJitter(dx=1.0, dy=0.5)
    assert monte_carlo_expected_iou(100, 101, model, n_samples=10, seed=0) == expected_iou(100, 101, model)


def test_empirical_mean_and_exhaustive_sampling():
    model = EmpiricalJitter(dx=[1.0, -0.5, 2.0, 0.0], dy=[0.0, 1.5, -1.0, 0.25])
    expected = np.mean([
        jittered_iou(FixedSizeSpec(gt_side=100, pred_side=102), abs(dx), abs(dy))
        for dx, dy in zip(model.dx, model.dy)
    ])
    assert abs(expected_iou(100, 102, model) - expected) < 1e-15
    assert monte_carlo_expected_iou(100, 102, model, n_samples=4, seed=0, sampling="exhaustive") \
        == expected_iou(100, 102, model)


def test_empty_empirical_raises():
    try:
        optimize_size(100, EmpiricalJitter())
        assert False
    except InputContractError as e:
        assert "no samples" in e.message


def test_exhaustive_needs_empirical():
    try:
        monte_carlo_expected_iou(100, 100, GaussianJitter(sigma=1), n_samples=10, seed=0, sampling="exhaustive")
        assert False
    except InputContractError as e:
        assert "empirical" in e.message


def test_bad_inputs_raise():
    for call in (
            lambda: expected_iou(100, 0, GaussianJitter(sigma=1)),
            lambda: optimize_size(100, GaussianJitter(sigma=1), search_range=(110, 90)),
            lambda: optimize_size(100, GaussianJitter(sigma=1), grid_step=0),
            lambda: monte_carlo_expected_iou(100, 100, GaussianJitter(sigma=1), n_samples=0, seed=0),
    ):
        try:
            call()
            assert False
        except InputContractError:
            pass


def test_scale_equivariance():
    for size in (98.0, 100.0, 102.0):
        base = expected_iou(100, size, GaussianJitter(sigma=1.0))
        scaled = expected_iou(300, 3 * size, GaussianJitter(sigma=3.0))
        assert abs(base - scaled) < 1e-9
    result = optimize_size(200, DeterministicJitter(dx=1.5, dy=1.5))
    assert abs(result.s_star - 203.0) <= 0.02


def test_larger_jitter_lowers_expected_iou():
    values = [expected_iou(100, 101.5, GaussianJitter(sigma=s)) for s in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_golden_section_finds_parabola_peak():
    x, fx = golden_section_maximize(lambda v: -(v - 2.0) ** 2, 0.0, 5.0, tol=1e-6)
    assert abs(x - 2.0) < 1e-5
    assert fx <= 0.0


def test_size_grid_includes_both_ends():
    grid = size_grid(95, 115, 0.25)
    assert len(grid) == 81
    assert grid[0] == 95.0 and grid[-1] == 115.0
    uneven = size_grid(0.0, 1.0, 0.3)
    assert np.allclose(uneven, [0.0, 0.3, 0.6, 0.9, 1.0])


def test_jitter_model_validation():
    from pydantic import ValidationError
    for build in (
            lambda: UniformRadialJitter(lo=2, hi=1),
            lambda: GaussianJitter(sigma=-1),
            lambda: DeterministicJitter(dx=-0.5, dy=0),
            lambda: EmpiricalJitter(dx=[1.0], dy=[]),
    ):
        try:
            build()
            assert False
        except ValidationError:
            pass


if __name__ == "__main__":
    tests = [
        test_deterministic_equals_closed_form,
        test_analytic_optimum_family,
        test_three_quarter_pixel_jitter_gives_101_5,
        test_zero_jitter_optimum_is_gt_side,
        test_optimum_is_best_point_of_curve,
        test_oracle_agreement_matrix,
        test_monte_carlo_is_seeded_and_worker_independent,
        test_monte_carlo_deterministic_is_exact,
        test_empirical_mean_and_exhaustive_sampling,
        test_empty_empirical_raises,
        test_exhaustive_needs_empirical,
        test_bad_inputs_raise,
        test_scale_equivariance,
        test_larger_jitter_lowers_expected_iou,
        test_golden_section_finds_parabola_peak,
        test_size_grid_includes_both_ends,
        test_jitter_model_validation,
    ]
    for t in tests:
        t()
        print(f"PASS: {t.__name__}")
    print("\nAll boxopt unit tests passed!")
