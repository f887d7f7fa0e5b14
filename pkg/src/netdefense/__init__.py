from __future__ import annotations

from importlib import import_module
from typing import Any

_EXPORTS = {
    "Instance": "netdefense.model",
    "PureStrategy": "netdefense.model",
    "MixedStrategy": "netdefense.model",
    "optimal_pure": "netdefense.pure",
    "optimal_fractional": "netdefense.fractional",
    "upper_bound_mixed": "netdefense.mixrounding",
    "patch": "netdefense.patching",
    "exact_opt_mixed": "netdefense.oracle",
    "PatchConfig": "netdefense.schemas",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name: str) -> Any:
    if name in _EXPORTS:
        return getattr(import_module(_EXPORTS[name]), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__() -> list[str]:
    return sorted(__all__)
