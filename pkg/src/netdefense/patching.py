"""Small-support mixed strategies for the resource-sharing model.

Starting from the optimal pure strategy, each iteration adds one pure strategy
that defends the currently worst-off nodes and re-solves the probabilities over
the enlarged support.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from netdefense.errors import ContractError, PatchAborted, SolverError
from netdefense.lp import build_prob_lp, longest_defendable_prefix, solve
from netdefense.model import (
    Instance,
    LossVector,
    MixedStrategy,
    PureStrategy,
    defending_status,
    mixed_loss,
    status_matrix,
)
from netdefense.pure import optimal_pure
from netdefense.rng import SplitMix64

if TYPE_CHECKING:
    from netdefense.schemas import PatchConfig

logger = logging.getLogger(__name__)

TRACE_HEADER = ("iter", "support", "result", "delta_l", "fallback", "ms")


@dataclass(frozen=True)
class PatchRecord:
    iteration: int
    support: int
    result: float
    delta_l: float
    fallback: bool
    ms: float

    def as_row(self, timing: bool = True) -> list[str]:
        return [
            str(self.iteration),
            str(self.support),
            f"{self.result:.9g}",
            f"{self.delta_l:.9g}",
            "1" if self.fallback else "0",
            f"{self.ms:.9g}" if timing else "0",
        ]


@dataclass
class PatchTrace:
    records: list[PatchRecord] = field(default_factory=list)

    def append(self, record: PatchRecord) -> None:
        self.records.append(record)

    @property
    def results(self) -> list[float]:
        return [record.result for record in self.records]

    def rows(self, timing: bool = True) -> list[list[str]]:
        return [list(TRACE_HEADER)] + [record.as_row(timing) for record in self.records]


class FindRResult(NamedTuple):
    strategy: PureStrategy | None
    nodes: list[int]
    used_fallback: bool


def _loss_order(scores: np.ndarray) -> np.ndarray:
    return np.lexsort((np.arange(scores.size), -scores))


def _top_defendable(inst: Instance, scores: np.ndarray) -> tuple[list[int], PureStrategy]:
    order = _loss_order(scores)
    k, witness = longest_defendable_prefix(inst, order)
    return [int(u) for u in order[:k]], witness


def shared_max_top(inst: Instance, scores: LossVector | Sequence[float] | np.ndarray) -> list[int]:
    """Longest score-ranked prefix that one pure strategy can defend."""
    values = scores.loss if isinstance(scores, LossVector) else np.asarray(scores, dtype=np.float64)
    if values.shape != (inst.node_count,):
        raise ContractError("One score per node is required.")
    nodes, _ = _top_defendable(inst, values)
    return nodes


def _covered(statuses: np.ndarray, nodes: list[int]) -> bool:
    if statuses.shape[0] == 0:
        return False
    return bool(np.any(np.all(statuses[:, nodes] == 1, axis=1)))


def find_r(
    inst: Instance,
    support: Sequence[PureStrategy],
    losses: LossVector,
    rng: SplitMix64,
) -> FindRResult:
    statuses = status_matrix(inst, support)
    nodes, witness = _top_defendable(inst, losses.loss)
    if not _covered(statuses, nodes):
        return FindRResult(witness, nodes, False)
    nodes, witness = _top_defendable(inst, rng.uniform(inst.node_count))
    logger.debug("top set already covered; random redraw picked %d nodes", len(nodes))
    if _covered(statuses, nodes):
        return FindRResult(None, nodes, True)
    return FindRResult(witness, nodes, True)


def prob_lp(inst: Instance, support: Sequence[PureStrategy]) -> tuple[np.ndarray, float]:
    """Best probabilities over a fixed support and the resulting defending result."""
    if not support:
        raise ContractError("The support must not be empty.")
    solution = solve(build_prob_lp(inst, status_matrix(inst, support)))
    if not solution.is_optimal:
        raise SolverError(f"Probability LP is {solution.status.value}.")
    probs = np.clip(solution.x[: len(support)], 0.0, None)
    total = probs.sum()
    if total <= 0:
        raise SolverError("Probability LP returned no mass.")
    probs = probs / total
    _, result = mixed_loss(inst, MixedStrategy(tuple(support), probs))
    return probs, result


def reoptimize_support(inst: Instance, mixed: MixedStrategy) -> tuple[MixedStrategy, float]:
    probs, result = prob_lp(inst, mixed.support)
    return MixedStrategy(mixed.support, probs), result


def delta_l(losses: np.ndarray, nodes: Sequence[int]) -> float:
    """Gap between the worst loss inside ``nodes`` and the worst loss outside."""
    inside = np.zeros(losses.size, dtype=bool)
    inside[list(nodes)] = True
    return float(losses[inside].max(initial=0.0)) - float(losses[~inside].max(initial=0.0))


def progress_bound_check(
    inst: Instance,
    support: Sequence[PureStrategy],
    probs: Sequence[float] | np.ndarray,
    nodes: Sequence[int],
    new_result: float,
    tolerance: float = 1e-6,
) -> bool:
    """Whether adding a strategy that defends ``nodes`` improved the result enough."""
    losses, old = mixed_loss(inst, MixedStrategy(tuple(support), np.asarray(probs, dtype=np.float64)))
    gap = delta_l(losses.loss, nodes)
    if gap <= 0:
        return new_result <= old + tolerance
    bound = (1 - gap / (gap + inst.alpha_max)) * old
    return new_result <= bound + tolerance


def patch(inst: Instance, cfg: PatchConfig) -> tuple[MixedStrategy, PatchTrace]:
    trace = PatchTrace()
    rng = SplitMix64(cfg.rng_seed)
    try:
        started = time.perf_counter()
        r_star, _ = optimal_pure(inst)
        support = [r_star]
        statuses = [defending_status(inst, r_star)]
        probs, result = prob_lp(inst, support)
        trace.append(PatchRecord(1, 1, result, 0.0, False, (time.perf_counter() - started) * 1e3))

        for iteration in range(2, cfg.iterations + 1):
            started = time.perf_counter()
            losses, _ = mixed_loss(inst, MixedStrategy(tuple(support), probs))
            found = find_r(inst, support, losses, rng)
            if found.strategy is not None and found.strategy.norm > 0:
                status = defending_status(inst, found.strategy)
                if not any(np.array_equal(status, known) for known in statuses):
                    support.append(found.strategy)
                    statuses.append(status)
            probs, result = prob_lp(inst, support)
            record = PatchRecord(
                iteration,
                len(support),
                result,
                delta_l(losses.loss, found.nodes),
                found.used_fallback,
                (time.perf_counter() - started) * 1e3,
            )
            trace.append(record)
            logger.debug("patch iteration %d: |D|=%d result %.9g", iteration, len(support), result)
    except SolverError as exc:
        raise PatchAborted(f"Patching stopped after {len(trace.records)} iterations: {exc}", trace) from exc

    logger.info("patching finished: |D|=%d result %.9g", len(support), result)
    return MixedStrategy(tuple(support), probs), trace
