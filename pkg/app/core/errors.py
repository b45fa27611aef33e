"""Error taxonomy and the exception -> exit-code registry used by the CLI."""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT_CONTRACT = 2
EXIT_INTERNAL = 3


class CenterboxError(Exception):
    def __init__(self, message: Optional[str] = None):
        super().__init__(message)
        self.message = message


class UsageError(CenterboxError):
    """Bad flag combination or unknown subcommand."""


class InputContractError(CenterboxError):
    """Input violates a documented contract: malformed file, bad field, mixed ids."""


class SimulationError(InputContractError):
    """Scene configuration cannot be realized, e.g. infeasible packing."""


# ── Exit-code registry ─────────────────────────────────────────

_exit_codes: dict[type[BaseException], int] = {}


def _build_registry():
    if _exit_codes:
        return
    _exit_codes.update({
        UsageError: EXIT_USAGE,
        InputContractError: EXIT_INPUT_CONTRACT,
        CenterboxError: EXIT_INTERNAL,
    })


def exit_code_for(exc: BaseException) -> int:
    """Most specific registered class in the exception's MRO wins."""
    _build_registry()
    for cls in type(exc).__mro__:
        if cls in _exit_codes:
            return _exit_codes[cls]
    return EXIT_INTERNAL


def describe(exc: BaseException) -> str:
    """One-line diagnostic for stderr."""
    message = getattr(exc, 'message', None) or str(exc) or type(exc).__name__
    return " ".join(message.split())
