"""Output-record envelope and deterministic JSON / text writers.

Every JSON artefact the CLI emits is ``{command, status, data, config}`` with the
effective configuration echoed for provenance. No timestamps or random ids are
written, so identical inputs give byte-identical files.
"""
import json
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Optional

import pandas as pd
from pydantic import BaseModel

from app.responses.schemas import OutputRecord

# Text tables only; JSON floats use repr and are lossless.
FLOAT_FORMAT = "%.10g"


def to_jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json", exclude_none=True)
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_text(path: str | Path, text: str) -> Path:
    target = Path(path)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return target


def write_json(path: str | Path, payload: Any) -> Path:
    return write_text(path, dumps(payload))


def render_table(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False, float_format=lambda v: FLOAT_FORMAT % v)


class RecordBuilder:
    """Builds the provenance envelope around a command result."""

    STATUS_OK = "ok"

    @staticmethod
    def success(
            command: str,
            data: Any,
            config: Optional[Mapping[str, Any]] = None) -> OutputRecord:
        return OutputRecord(
            command=command,
            status=RecordBuilder.STATUS_OK,
            data=to_jsonable(data),
            config=to_jsonable(dict(config or {})),
        )

    @staticmethod
    def write(path: str | Path, record: OutputRecord) -> Path:
        return write_json(path, record.model_dump(mode="json"))
