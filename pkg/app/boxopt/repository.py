"""Size-optimization artefacts: the result record and the two-column curve export."""

from pathlib import Path

import pandas as pd

from app.boxopt.schemas import SizeOptimizationResult
from app.core.errors import InputContractError
from app.dataset.repository import read_json
from app.responses.builder import FLOAT_FORMAT, write_text


class SizeResultRepository:

    @staticmethod
    def curve_frame(result: SizeOptimizationResult) -> pd.DataFrame:
        return pd.DataFrame(
            [(point.size, point.expected_iou) for point in result.curve],
            columns=["size", "expected_iou"],
        )

    def save_curve(self, path: str | Path, result: SizeOptimizationResult) -> Path:
        text = self.curve_frame(result).to_csv(sep="\t", index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        return write_text(path, text)

    def load_s_star(self, path: str | Path) -> float:
        """S* from an ``optimize-size`` record (or a bare result object)."""
        record = read_json(path)
        data = record.get("data", record) if isinstance(record, dict) else None
        if not isinstance(data, dict) or "s_star" not in data:
            raise InputContractError(f"{path}: field 'data.s_star' is missing")
        s_star = data["s_star"]
        if not isinstance(s_star, (int, float)) or s_star <= 0:
            raise InputContractError(f"{path}: field 'data.s_star' must be a positive number")
        return float(s_star)


def get_size_result_repository() -> SizeResultRepository:
    return SizeResultRepository()
