"""OptimizeSizeCommand: jitter samples or a parametric model -> S* record and curve."""

from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import TypeAdapter, ValidationError

from app.boxopt.repository import SizeResultRepository, get_size_result_repository
from app.boxopt.schemas import (
    DeterministicJitter,
    GaussianJitter,
    JitterModel,
    SizeOptimizationResult,
    UniformRadialJitter,
)
from app.boxopt.services import monte_carlo_expected_iou, optimize_size
from app.core.errors import UsageError
from app.dataset.repository import contract_error
from app.matching.repository import JitterRepository, get_jitter_repository
from app.responses.builder import RecordBuilder

_JITTER_MODEL = TypeAdapter(JitterModel)


def jitter_model_from_settings(settings: Mapping[str, Any], jitter_repo: JitterRepository) -> JitterModel:
    """Exactly one of ``jitter`` (file), ``deterministic``, ``gaussian``, ``uniform_radial``, ``model``."""
    given = [key for key in ("jitter", "deterministic", "gaussian", "uniform_radial", "model")
             if settings.get(key) is not None]
    if len(given) != 1:
        raise UsageError(
            "give exactly one jitter source: --jitter FILE, --deterministic DX DY, --gaussian SIGMA "
            f"or --uniform-radial LO HI (got {', '.join(given) or 'none'})")
    source = given[0]
    value = settings[source]
    try:
        match source:
            case "jitter":
                return jitter_repo.load_jitter(value)
            case "deterministic":
                return DeterministicJitter(dx=value[0], dy=value[1])
            case "gaussian":
                return GaussianJitter(sigma=value)
            case "uniform_radial":
                return UniformRadialJitter(lo=value[0], hi=value[1])
            case _:
                return _JITTER_MODEL.validate_python(value)
    except ValidationError as exc:
        raise contract_error(f"jitter model '{source}'", exc)


class OptimizeSizeCommand:

    def __init__(self, jitter_repo: JitterRepository, result_repo: SizeResultRepository):
        self._jitter_repo = jitter_repo
        self._result_repo = result_repo

    def build_model(self, settings: Mapping[str, Any]) -> JitterModel:
        return jitter_model_from_settings(settings, self._jitter_repo)

    def execute(
            self,
            settings: Mapping[str, Any],
            output: str | Path,
            curve_out: Optional[str | Path] = None) -> tuple[SizeOptimizationResult, Optional[float]]:
        model = self.build_model(settings)
        gt_side = float(settings["gt_side"])
        search_range = tuple(settings["range"]) if settings.get("range") is not None else None
        result = optimize_size(
            gt_side,
            model,
            search_range=search_range,
            grid_step=float(settings["step"]),
            refine_tol=float(settings["tol"]),
            workers=int(settings["workers"]),
        )

        mc_value = None
        if settings.get("mc_samples"):
            mc_value = monte_carlo_expected_iou(
                gt_side, result.s_star, model, int(settings["mc_samples"]), int(settings["seed"]),
                workers=int(settings["workers"]))

        data = result.model_dump(mode="json")
        if mc_value is not None:
            data["monte_carlo_expected_iou_at_star"] = mc_value
        RecordBuilder.write(output, RecordBuilder.success("optimize-size", data, settings))
        if curve_out is not None:
            self._result_repo.save_curve(curve_out, result)
        return result, mc_value


def get_optimize_size_command() -> OptimizeSizeCommand:
    return OptimizeSizeCommand(get_jitter_repository(), get_size_result_repository())
