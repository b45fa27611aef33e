from typing import Any, Dict

from pydantic import BaseModel


class OutputRecord(BaseModel):
    command: str
    status: str
    data: Any = None
    config: Dict[str, Any] = {}
