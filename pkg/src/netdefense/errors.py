from __future__ import annotations

from typing import Any


class NetDefenseError(Exception):
    """Base class for every error raised by the solvers."""


class DimensionError(NetDefenseError, ValueError):
    pass


class ContractError(NetDefenseError, ValueError):
    pass


class SizeError(ContractError):
    pass


class ParseError(NetDefenseError, ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SolverError(NetDefenseError, RuntimeError):
    pass


class PatchAborted(SolverError):
    def __init__(self, message: str, trace: Any) -> None:
        super().__init__(message)
        self.trace = trace


class RoundingError(NetDefenseError, RuntimeError):
    pass
