"""Expected IoU of a fixed-size S x S prediction under a jitter model, and its argmax.

Parametric models are integrated with fixed Gauss-Legendre nodes, so repeated
calls return bit-identical values. The Gaussian model folds the sign symmetry
into a half-normal density on [0, 8 sigma] and splits each axis at the kinks of
the overlap, ``|S - G| / 2`` and ``(G + S) / 2``, where the integrand stops being
smooth. The uniform-radial model integrates radius and angle on a plain grid.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Literal, Optional, Tuple

import numpy as np

from app.boxopt.schemas import (
    CurvePoint,
    DeterministicJitter,
    EmpiricalJitter,
    GaussianJitter,
    JitterModel,
    SizeOptimizationResult,
    UniformRadialJitter,
)
from app.core.config import Config, LOGGER
from app.core.errors import InputContractError
from app.geometry.schemas import FixedSizeSpec
from app.geometry.services import jittered_iou, jittered_iou_array

DEFAULT_QUADRATURE_NODES = Config().quadrature_nodes
TRUNCATION_SIGMAS = 8.0
MC_CHUNK_SIZE = 1 << 16

DEFAULT_GRID_STEP = 0.25
DEFAULT_REFINE_TOL = 0.01

# Golden ratio constant
PHI = (1 + math.sqrt(5)) / 2


def default_search_range(gt_side: float) -> tuple[float, float]:
    """(G - 5, G + 15); the lower end falls back to G / 2 for tiny boxes."""
    lower = gt_side - 5 if gt_side > 10 else gt_side / 2
    return lower, gt_side + 15


# ── Quadrature ─────────────────────────────────────────────────

@lru_cache(maxsize=32)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _interval_nodes(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = _legendre(n)
    half = (b - a) / 2
    return half * t + (a + b) / 2, half * w


def _piecewise_nodes(upper: float, breakpoints: list[float], n_total: int) -> tuple[np.ndarray, np.ndarray]:
    cuts = sorted({0.0, upper, *(p for p in breakpoints if 0.0 < p < upper)})
    pieces = len(cuts) - 1
    per_piece = max(1, n_total // pieces)
    nodes, weights = zip(*(_interval_nodes(a, b, per_piece) for a, b in zip(cuts[:-1], cuts[1:])))
    return np.concatenate(nodes), np.concatenate(weights)


def _gaussian_expected_iou(gt_side: float, size: float, sigma: float, nodes: int) -> float:
    if sigma == 0:
        return jittered_iou(FixedSizeSpec(gt_side=gt_side, pred_side=size), 0.0, 0.0)
    upper = TRUNCATION_SIGMAS * sigma
    u, w = _piecewise_nodes(upper, [abs(size - gt_side) / 2, (gt_side + size) / 2], nodes)
    density = w * np.exp(-0.5 * (u / sigma) ** 2)
    density /= density.sum()
    values = jittered_iou_array(gt_side, size, u[:, None], u[None, :])
    return float(density @ values @ density)


def _uniform_radial_expected_iou(gt_side: float, size: float, lo: float, hi: float, nodes: int) -> float:
    if hi == 0:
        return jittered_iou(FixedSizeSpec(gt_side=gt_side, pred_side=size), 0.0, 0.0)
    if hi == lo:
        r, wr = np.array([lo]), np.array([1.0])
    else:
        r, wr = _interval_nodes(lo, hi, nodes)
        wr = wr / wr.sum()
    theta, wt = _interval_nodes(0.0, math.pi / 2, nodes)
    wt = wt / wt.sum()
    values = jittered_iou_array(
        gt_side, size,
        r[:, None] * np.cos(theta)[None, :],
        r[:, None] * np.sin(theta)[None, :],
    )
    return float(wr @ values @ wt)


def _empirical_mean(gt_side: float, size: float, abs_dx: np.ndarray, abs_dy: np.ndarray) -> float:
    return float(np.mean(jittered_iou_array(gt_side, size, abs_dx, abs_dy)))


def _empirical_magnitudes(model: EmpiricalJitter) -> tuple[np.ndarray, np.ndarray]:
    if len(model) == 0:
        raise InputContractError("empirical jitter model has no samples")
    return np.abs(np.asarray(model.dx, dtype=float)), np.abs(np.asarray(model.dy, dtype=float))


def expected_iou(gt_side: float, size: float, model: JitterModel, nodes: Optional[int] = None) -> float:
    if size <= 0:
        raise InputContractError(f"prediction side must be positive, got {size}")
    nodes = nodes or DEFAULT_QUADRATURE_NODES
    match model:
        case DeterministicJitter(dx=dx, dy=dy):
            return jittered_iou(FixedSizeSpec(gt_side=gt_side, pred_side=size), dx, dy)
        case GaussianJitter(sigma=sigma):
            return _gaussian_expected_iou(gt_side, size, sigma, nodes)
        case UniformRadialJitter(lo=lo, hi=hi):
            return _uniform_radial_expected_iou(gt_side, size, lo, hi, nodes)
        case EmpiricalJitter():
            abs_dx, abs_dy = _empirical_magnitudes(model)
            return _empirical_mean(gt_side, size, abs_dx, abs_dy)
    raise InputContractError(f"unsupported jitter model {type(model).__name__}")


# ── Monte-Carlo oracle ─────────────────────────────────────────

def draw_offsets(model: JitterModel, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Signed (dx, dy) draws. Fixed magnitudes get an independent random sign per axis."""
    match model:
        case DeterministicJitter(dx=dx, dy=dy):
            signs = rng.choice(np.array([-1.0, 1.0]), size=(2, count))
            return signs[0] * dx, signs[1] * dy
        case GaussianJitter(sigma=sigma):
            draws = rng.normal(0.0, sigma, size=(2, count))
            return draws[0], draws[1]
        case UniformRadialJitter(lo=lo, hi=hi):
            radius = rng.uniform(lo, hi, size=count)
            angle = rng.uniform(0.0, 2 * math.pi, size=count)
            return radius * np.cos(angle), radius * np.sin(angle)
        case EmpiricalJitter():
            if len(model) == 0:
                raise InputContractError("empirical jitter model has no samples")
            idx = rng.integers(0, len(model), size=count)
            return np.asarray(model.dx, dtype=float)[idx], np.asarray(model.dy, dtype=float)[idx]
    raise InputContractError(f"cannot sample jitter model {type(model).__name__}")


def monte_carlo_expected_iou(
        gt_side: float,
        size: float,
        model: JitterModel,
        n_samples: int,
        seed: int,
        sampling: Literal["random", "exhaustive"] = "random",
        workers: int = 1) -> float:
    """Seeded sample mean of the jittered IoU.

    Draws come in fixed chunks of ``MC_CHUNK_SIZE``, each from its own spawned
    ``SeedSequence`` child, and chunk sums are reduced in chunk order, so the
    value depends only on (seed, n_samples) and never on ``workers``.
    """
    if n_samples < 1:
        raise InputContractError(f"n_samples must be >= 1, got {n_samples}")
    if isinstance(model, DeterministicJitter):
        return expected_iou(gt_side, size, model)

    if sampling == "exhaustive":
        if not isinstance(model, EmpiricalJitter):
            raise InputContractError("exhaustive sampling needs an empirical jitter model")
        abs_dx, abs_dy = _empirical_magnitudes(model)
        idx = np.arange(n_samples) % len(abs_dx)
        return _empirical_mean(gt_side, size, abs_dx[idx], abs_dy[idx])

    n_chunks = math.ceil(n_samples / MC_CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_chunks)

    def chunk_sum(index: int) -> float:
        count = min(MC_CHUNK_SIZE, n_samples - index * MC_CHUNK_SIZE)
        dx, dy = draw_offsets(model, np.random.default_rng(children[index]), count)
        return float(np.sum(jittered_iou_array(gt_side, size, np.abs(dx), np.abs(dy))))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sums = list(pool.map(chunk_sum, range(n_chunks)))
    else:
        sums = [chunk_sum(i) for i in range(n_chunks)]
    return math.fsum(sums) / n_samples


# ── Size optimization ──────────────────────────────────────────

def golden_section_maximize(
        f: Callable[[float], float],
        a: float,
        b: float,
        tol: float = 1e-3) -> Tuple[float, float]:
    """Derivative-free 1D maximization on [a, b]; returns (x, f(x))."""
    c = b - (b - a) / PHI
    d = a + (b - a) / PHI

    fc = f(c)
    fd = f(d)

    while abs(b - a) > tol:
        if fc < fd:
            a = c
            c = d
            fc = fd
            d = a + (b - a) / PHI
            fd = f(d)
        else:
            b = d
            d = c
            fd = fc
            c = b - (b - a) / PHI
            fc = f(c)

    x_opt = (a + b) / 2
    return x_opt, f(x_opt)


def size_grid(lower: float, upper: float, step: float) -> np.ndarray:
    count = int(math.floor((upper - lower) / step + 1e-9))
    grid = lower + step * np.arange(count + 1)
    if grid[-1] < upper - 1e-12:
        grid = np.append(grid, upper)
    return grid


def optimize_size(
        gt_side: float,
        model: JitterModel,
        search_range: Optional[tuple[float, float]] = None,
        grid_step: float = DEFAULT_GRID_STEP,
        refine_tol: float = DEFAULT_REFINE_TOL,
        workers: int = 1,
        nodes: Optional[int] = None) -> SizeOptimizationResult:
    """Grid scan over the range, then golden-section refinement around the best grid point.

    The objective is piecewise smooth and need not be unimodal over the whole
    range, hence the scan first. The refined point replaces the grid optimum only
    when it is strictly better.
    """
    lower, upper = search_range or default_search_range(gt_side)
    if lower <= 0 or lower >= upper:
        raise InputContractError(f"search range must satisfy 0 < S_min < S_max, got ({lower}, {upper})")
    if grid_step <= 0 or refine_tol <= 0:
        raise InputContractError("grid_step and refine_tol must be positive")
    if isinstance(model, EmpiricalJitter):
        _empirical_magnitudes(model)

    def objective(size: float) -> float:
        return expected_iou(gt_side, float(size), model, nodes)

    sizes = size_grid(lower, upper, grid_step)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(objective, sizes))
    else:
        values = [objective(s) for s in sizes]

    best = int(np.argmax(values))
    s_star, best_value = float(sizes[best]), float(values[best])
    bracket = (float(sizes[max(best - 1, 0)]), float(sizes[min(best + 1, len(sizes) - 1)]))
    if bracket[1] - bracket[0] > refine_tol:
        refined, refined_value = golden_section_maximize(objective, *bracket, tol=refine_tol)
        if refined_value > best_value:
            s_star, best_value = refined, refined_value

    LOGGER.info(f"S* = {s_star:.4f} (E[IoU] = {best_value:.6f}) for {model.kind} jitter, G = {gt_side}")
    return SizeOptimizationResult(
        s_star=s_star,
        expected_iou_at_star=best_value,
        curve=[CurvePoint(size=float(s), expected_iou=float(v)) for s, v in zip(sizes, values)],
        search_range=(float(lower), float(upper)),
        gt_side=gt_side,
        model_kind=model.kind,
        grid_step=grid_step,
        refine_tol=refine_tol,
    )
