"""Jitter sample files: one JSON record per line, ``{image_id, gt_index, det_index, dx, dy, score}``."""

import json
from pathlib import Path

from pydantic import ValidationError

from app.boxopt.schemas import EmpiricalJitter
from app.core.errors import InputContractError
from app.dataset.repository import contract_error
from app.geometry.schemas import JitterOffset
from app.matching.schemas import MatchPair
from app.matching.services import collect_jitter
from app.responses.builder import write_text

FIELDS = ("image_id", "gt_index", "det_index", "dx", "dy", "score")


class JitterRepository:

    @staticmethod
    def dumps(pairs: list[MatchPair]) -> str:
        lines = [
            json.dumps({
                "image_id": p.image_id,
                "gt_index": p.gt_index,
                "det_index": p.det_index,
                "dx": p.offset.dx,
                "dy": p.offset.dy,
                "score": p.score,
            }, allow_nan=False)
            for p in pairs
        ]
        return "".join(line + "\n" for line in lines)

    def save_pairs(self, path: str | Path, pairs: list[MatchPair]) -> Path:
        return write_text(path, self.dumps(pairs))

    def load_pairs(self, path: str | Path) -> list[MatchPair]:
        try:
            with open(path, "r", encoding="utf-8") as f:
                lines = f.read().splitlines()
        except FileNotFoundError:
            raise InputContractError(f"input file not found: {path}")

        pairs: list[MatchPair] = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputContractError(f"{path}: line {lineno} is not valid JSON: {exc.msg}")
            if not isinstance(record, dict):
                raise InputContractError(f"{path}: line {lineno} must be a JSON object")
            missing = [name for name in FIELDS if name not in record]
            if missing:
                raise InputContractError(f"{path}: line {lineno}: field '{missing[0]}' is missing")
            try:
                pairs.append(MatchPair(
                    image_id=record["image_id"],
                    gt_index=record["gt_index"],
                    det_index=record["det_index"],
                    offset=JitterOffset(dx=record["dx"], dy=record["dy"]),
                    score=record["score"],
                ))
            except ValidationError as exc:
                raise contract_error(str(path), exc, f"line {lineno}")
        return pairs

    def load_jitter(self, path: str | Path) -> EmpiricalJitter:
        return collect_jitter(self.load_pairs(path))


def get_jitter_repository() -> JitterRepository:
    return JitterRepository()
