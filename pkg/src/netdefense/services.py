from __future__ import annotations

import csv
import io
import logging
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import TypeVar

from pydantic import ValidationError

from netdefense.errors import ContractError, ParseError
from netdefense.fractional import optimal_fractional
from netdefense.mixrounding import upper_bound_mixed
from netdefense.model import Instance, MixedStrategy
from netdefense.patching import patch, reoptimize_support
from netdefense.pure import optimal_pure
from netdefense.schemas import InstanceFile, PatchConfig, StrategyFile

logger = logging.getLogger(__name__)

T = TypeVar("T")


def load_instance(path: Path | str) -> Instance:
    try:
        document = InstanceFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc.errors()[0]['msg']}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return document.to_instance()


def save_instance(inst: Instance, path: Path | str) -> None:
    document = InstanceFile.from_instance(inst)
    Path(path).write_text(document.model_dump_json(indent=2, exclude_none=True) + "\n", encoding="utf-8")


def load_strategy(path: Path | str) -> MixedStrategy:
    try:
        document = StrategyFile.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc.errors()[0]['msg']}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return document.to_mixed()


def strategy_json(mixed: MixedStrategy) -> str:
    return StrategyFile.from_mixed(mixed).model_dump_json()


def rows_to_csv(rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(rows: Sequence[Sequence[str]], path: Path | str) -> None:
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")


def _timed(action: Callable[[], T]) -> tuple[T, float]:
    started = time.perf_counter()
    value = action()
    return value, (time.perf_counter() - started) * 1e3


def _reference_row(label: str, support: int, value: float, ms: float, timing: bool) -> list[str]:
    return [label, str(support), f"{value:.9g}", "0", "0", f"{ms:.9g}" if timing else "0"]


def bench_patching(
    inst: Instance,
    d_max: int,
    seed: int,
    with_rounding: bool = False,
    timing: bool = True,
) -> list[list[str]]:
    """Patching trace rows followed by reference rows.

    Reference rows carry a label in the ``iter`` column: ``opt_p``, ``opt_f`` and,
    for isolated instances with ``R >= theta_max``, ``opt_f_shift``. With
    ``with_rounding`` the rounded mixed strategy adds ``rounding`` and
    ``rounding_reopt`` rows whose ``support`` column is its support size.
    """
    _, trace = patch(inst, PatchConfig(iterations=d_max, rng_seed=seed))
    rows = trace.rows(timing)

    (_, opt_p), ms = _timed(lambda: optimal_pure(inst))
    rows.append(_reference_row("opt_p", 1, opt_p, ms, timing))
    (_, opt_f), ms = _timed(lambda: optimal_fractional(inst, inst.resource))
    rows.append(_reference_row("opt_f", 0, opt_f, ms, timing))

    shifted = inst.is_isolated and inst.resource >= inst.theta_max
    if shifted:
        (_, opt_f_shift), ms = _timed(lambda: optimal_fractional(inst, inst.resource - inst.theta_max))
        rows.append(_reference_row("opt_f_shift", 0, opt_f_shift, ms, timing))
    if with_rounding:
        if not shifted:
            raise ContractError("Rounding rows need an isolated instance with R >= theta_max.")
        (mixed, rounded), ms = _timed(lambda: upper_bound_mixed(inst))
        rows.append(_reference_row("rounding", mixed.size, rounded, ms, timing))
        if mixed.size == 0:
            reopt, ms = rounded, 0.0
        else:
            (_, reopt), ms = _timed(lambda: reoptimize_support(inst, mixed))
        rows.append(_reference_row("rounding_reopt", mixed.size, reopt, ms, timing))
    logger.info("bench finished with %d rows", len(rows) - 1)
    return rows
