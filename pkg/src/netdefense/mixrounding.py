"""Rounding a fractional defense into a mixed strategy (isolated model only).

A residual demand ``f`` is peeled off in rounds. When every node holding the
largest residual fits into one greedy top set, that set is played with as much
probability as keeps the ordering intact. Otherwise the largest residuals are
sliced off uniformly by a family of cyclic top sets that cover each of them the
same number of times.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from netdefense.errors import ContractError, RoundingError
from netdefense.fractional import optimal_fractional
from netdefense.model import EPS_FEAS, Instance, MixedStrategy, PureStrategy, mixed_loss

logger = logging.getLogger(__name__)

EPS_ROUND = 1e-6
_CLASS_RTOL = 1e-9
_CLASS_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class ResidualVector:
    """Remaining defense probability each node still needs."""

    f: np.ndarray

    def __post_init__(self) -> None:
        f = np.array(self.f, dtype=np.float64)
        if f.ndim != 1 or not np.all(np.isfinite(f)):
            raise ContractError("A residual is a finite vector.")
        if np.any(f < -EPS_FEAS) or np.any(f > 1 + EPS_FEAS):
            raise ContractError("Residual entries must lie in [0, 1].")
        f = np.clip(f, 0.0, 1.0)
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def v_max(self) -> np.ndarray:
        return _top_class(self.f)

    @property
    def v_zero(self) -> np.ndarray:
        return np.flatnonzero(self.f == 0)


@dataclass(frozen=True, eq=False)
class SliceVector:
    """``epsilon`` on ``nodes`` and zero elsewhere; ``nodes`` is kept sorted."""

    nodes: tuple[int, ...]
    epsilon: float

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ContractError("Slice height must be positive.")
        nodes = tuple(sorted(set(int(u) for u in self.nodes)))
        if not nodes:
            raise ContractError("A slice needs at least one node.")
        object.__setattr__(self, "nodes", nodes)

    @property
    def k(self) -> int:
        return len(self.nodes)

    def vector(self, node_count: int) -> np.ndarray:
        t = np.zeros(node_count)
        t[list(self.nodes)] = self.epsilon
        return t


class RoundingStep(NamedTuple):
    phase: str
    residual: np.ndarray
    added: tuple[tuple[PureStrategy, float], ...]


def _top_class(f: np.ndarray) -> np.ndarray:
    if f.size == 0 or f.max() <= 0:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(np.isclose(f, f.max(), rtol=_CLASS_RTOL, atol=_CLASS_ATOL))


def _require_isolated(inst: Instance) -> None:
    if not inst.is_isolated:
        raise ContractError("Rounding is defined for the isolated model only.")


def _as_residual(f: ResidualVector | Sequence[float] | np.ndarray) -> np.ndarray:
    return f.f if isinstance(f, ResidualVector) else ResidualVector(np.asarray(f)).f


def max_top(inst: Instance, f: ResidualVector | Sequence[float] | np.ndarray) -> list[int]:
    """Greedy top set by residual; stops at the first node that would overflow R."""
    _require_isolated(inst)
    values = _as_residual(f)
    positive = np.flatnonzero(values > 0)
    order = positive[np.lexsort((positive, -values[positive]))]
    chosen: list[int] = []
    total = 0.0
    for u in order:
        if total + inst.theta[u] > inst.resource + EPS_FEAS:
            break
        chosen.append(int(u))
        total += inst.theta[u]
    return chosen


def cycle_max_top(inst: Instance, t: SliceVector, start: int) -> tuple[list[int], int]:
    """Take slice nodes cyclically from position ``start`` while the total stays within R - theta_max.

    Returns the chosen nodes and the position following the last one.
    """
    _require_isolated(inst)
    if not 0 <= start < t.k:
        raise ContractError(f"Start position {start} outside the slice of size {t.k}.")
    nodes = t.nodes
    if inst.theta[list(nodes)].sum() <= inst.resource:
        raise ContractError("Slice nodes fit in one strategy; cyclic cover is undefined.")
    limit = inst.resource - inst.theta_max
    chosen: list[int] = []
    total = 0.0
    i = start
    while total <= limit:
        if len(chosen) == t.k:
            raise ContractError("Cyclic cover wrapped the whole slice.")
        chosen.append(nodes[i])
        total += inst.theta[nodes[i]]
        i = (i + 1) % t.k
    return chosen, i


def find_t(inst: Instance, t: SliceVector) -> tuple[list[PureStrategy], int]:
    """Strategies covering every slice node exactly ``c`` times."""
    _require_isolated(inst)
    first_seen: dict[int, int] = {}
    sets: list[list[int]] = []
    i = 0
    while i not in first_seen:
        first_seen[i] = len(sets)
        chosen, i = cycle_max_top(inst, t, i)
        sets.append(chosen)
    cycle = sets[first_seen[i] :]

    counts = dict.fromkeys(t.nodes, 0)
    for chosen in cycle:
        for u in chosen:
            counts[u] += 1
    c = counts[t.nodes[0]]
    if c == 0 or any(count != c for count in counts.values()):
        raise RoundingError(f"Cyclic cover is not uniform: {counts}.")
    logger.debug("slice of %d nodes covered %d times by %d strategies", t.k, c, len(cycle))
    return [PureStrategy.defending(inst, chosen) for chosen in cycle], c


def iter_rounding(
    inst: Instance, f0: ResidualVector | Sequence[float] | np.ndarray, check_budget: bool = True
) -> Iterator[RoundingStep]:
    """Yield one step per round until the residual is exhausted."""
    _require_isolated(inst)
    start = _as_residual(f0)
    if start.shape != (inst.node_count,):
        raise ContractError("Residual length must match the node count.")
    if check_budget and float(start @ inst.theta) > inst.resource - inst.theta_max + EPS_FEAS:
        raise ContractError("Residual demand exceeds R - theta_max.")

    f = start.copy()
    rounds = 0
    while True:
        f[f <= EPS_ROUND] = 0.0
        if not np.any(f > 0):
            return
        rounds += 1
        if rounds > inst.node_count:
            raise RoundingError(f"Rounding did not finish within {inst.node_count} rounds.")

        top = _top_class(f)
        f[top] = f[top].max()
        chosen = max_top(inst, f)
        in_chosen = np.zeros(inst.node_count, dtype=bool)
        in_chosen[chosen] = True

        if np.all(in_chosen[top]):
            outside = float(f[~in_chosen].max(initial=0.0))
            prob = min(float(f[chosen].max()) - outside, float(f[chosen].min()))
            f[chosen] -= prob
            added = ((PureStrategy.defending(inst, chosen), prob),)
            phase = "A"
        else:
            in_top = np.zeros(inst.node_count, dtype=bool)
            in_top[top] = True
            epsilon = float(f[top[0]]) - float(f[~in_top].max(initial=0.0))
            strategies, c = find_t(inst, SliceVector(tuple(top), epsilon))
            prob = epsilon / c
            for strategy in strategies:
                f -= prob * (strategy.allocation > 0)
            added = tuple((strategy, prob) for strategy in strategies)
            phase = "B"

        np.clip(f, 0.0, 1.0, out=f)
        logger.debug("round %d phase %s: %d strategies, residual max %.3g", rounds, phase, len(added), f.max())
        yield RoundingStep(phase, f.copy(), added)


def round_to_mixed(
    inst: Instance, f0: ResidualVector | Sequence[float] | np.ndarray, check_budget: bool = True
) -> MixedStrategy:
    support: list[PureStrategy] = []
    probs: list[float] = []
    for step in iter_rounding(inst, f0, check_budget=check_budget):
        for strategy, prob in step.added:
            support.append(strategy)
            probs.append(prob)
    total = float(np.sum(probs))
    if total > 1 + EPS_FEAS:
        raise RoundingError(f"Rounded probabilities sum to {total:.9g}.")
    return MixedStrategy(tuple(support), np.array(probs))


def upper_bound_mixed(inst: Instance) -> tuple[MixedStrategy, float]:
    """Mixed strategy whose result matches the fractional optimum at R - theta_max."""
    _require_isolated(inst)
    if inst.resource < inst.theta_max:
        raise ContractError("The resource must be at least the largest threshold.")
    witness, target = optimal_fractional(inst, inst.resource - inst.theta_max)
    f0 = np.minimum(witness.allocation / inst.theta, 1.0)
    mixed = round_to_mixed(inst, f0)
    _, result = mixed_loss(inst, mixed)
    logger.info("rounded %d strategies, result %.9g (fractional %.9g)", mixed.size, result, target)
    return mixed, result
