"""Exact answers for small instances and generators for hard instance families.

The exact mixed optimum only needs the maximal defendable node sets. A mixed
strategy's status vector is a convex combination of pure statuses, and swapping
a status for one that dominates it componentwise can only lower every node's
loss. So the probability LP over the maximal statuses reaches the optimum.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from netdefense.errors import ContractError, SizeError, SolverError
from netdefense.lp import build_prob_lp, can_defend, longest_defendable_prefix, solve
from netdefense.model import Instance, MixedStrategy, PureStrategy, mixed_loss, within_budget
from netdefense.rng import SplitMix64
from netdefense.settings import get_settings

logger = logging.getLogger(__name__)

_PARTITION_LIMIT = 24
_KEEP_PROB = 1e-12


def _members(mask: int, n: int) -> list[int]:
    return [u for u in range(n) if mask >> u & 1]


def _check_size(inst: Instance, limit_n: int | None) -> None:
    limit = get_settings().oracle_limit_n if limit_n is None else limit_n
    if inst.node_count > limit:
        raise SizeError(f"Exact search supports at most {limit} nodes, got {inst.node_count}.")


def _feasible(inst: Instance, mask: int) -> bool:
    nodes = _members(mask, inst.node_count)
    if inst.is_isolated:
        return within_budget(float(inst.theta[nodes].sum()), inst.resource)
    return can_defend(inst, nodes) is not None


def _maximal_masks(inst: Instance) -> list[int]:
    n = inst.node_count
    level = {0}
    maximal: list[int] = []
    while level:
        following: set[int] = set()
        for mask in level:
            top = mask.bit_length()
            for u in range(top, n):
                grown = mask | 1 << u
                # every subset one smaller must already be feasible
                if all((grown & ~(1 << v)) in level for v in _members(grown, n)) and _feasible(inst, grown):
                    following.add(grown)
        for mask in level:
            if not any((mask | 1 << u) in following for u in range(n) if not mask >> u & 1):
                maximal.append(mask)
        logger.debug("%d feasible sets of size %d", len(level), bin(next(iter(level))).count("1"))
        level = following
    return maximal


def enumerate_feasible_statuses(inst: Instance, limit_n: int | None = None) -> np.ndarray:
    """Status vectors of the maximal defendable node sets, in lexicographic order."""
    _check_size(inst, limit_n)
    n = inst.node_count
    statuses = [
        tuple(int(mask >> u & 1) for u in range(n)) for mask in _maximal_masks(inst)
    ]
    return np.array(sorted(statuses), dtype=np.int8).reshape(-1, n)


def exact_opt_mixed(
    inst: Instance, limit_n: int | None = None, statuses: np.ndarray | None = None
) -> tuple[MixedStrategy, float]:
    """Probability LP over the maximal statuses.

    Pass ``statuses`` from :func:`enumerate_feasible_statuses` to skip a second
    enumeration; ``limit_n`` is then ignored.
    """
    if statuses is None:
        statuses = enumerate_feasible_statuses(inst, limit_n)
    elif statuses.ndim != 2 or statuses.shape[1] != inst.node_count or statuses.shape[0] == 0:
        raise ContractError("Statuses must be a non-empty matrix with one column per node.")
    solution = solve(build_prob_lp(inst, statuses))
    if not solution.is_optimal:
        raise SolverError(f"Probability LP is {solution.status.value}.")
    probs = np.clip(solution.x[: statuses.shape[0]], 0.0, None)
    keep = np.flatnonzero(probs > _KEEP_PROB)
    support: list[PureStrategy] = []
    for row in keep:
        nodes = np.flatnonzero(statuses[row])
        witness = PureStrategy.defending(inst, nodes) if inst.is_isolated else can_defend(inst, nodes)
        if witness is None:
            raise SolverError(f"Lost the witness for a feasible node set {nodes.tolist()}.")
        support.append(witness)
    kept = probs[keep] / probs[keep].sum()
    mixed = MixedStrategy(tuple(support), kept)
    _, result = mixed_loss(inst, mixed)
    logger.info("exact mixed optimum %.9g over %d maximal statuses", result, statuses.shape[0])
    return mixed, result


def gen_even_partition_instance(numbers: Sequence[float]) -> Instance:
    values = np.asarray(numbers, dtype=np.float64)
    if values.size == 0 or np.any(values <= 0):
        raise ContractError("Even partition needs a non-empty list of positive numbers.")
    return Instance.create(
        theta=values,
        alpha=np.ones(values.size),
        resource=float(values.sum()) / 2,
        meta={"family": "even-partition"},
    )


def has_even_partition(numbers: Sequence[float]) -> bool:
    values = np.asarray(numbers, dtype=np.float64)
    if values.size > _PARTITION_LIMIT:
        raise SizeError(f"Partition search supports at most {_PARTITION_LIMIT} numbers.")
    sums = np.zeros(1)
    for value in values:
        sums = np.concatenate([sums, sums + value])
    half = float(values.sum()) / 2
    return bool(np.any(np.isclose(sums, half, rtol=1e-12, atol=1e-12)))


def gen_bipartite_gap_instance(beta: float, resource: float) -> Instance:
    """Complete bipartite sharing graph where mixing cannot close the fractional gap."""
    if not beta > 1:
        raise ContractError("beta must exceed 1.")
    if not resource > 0:
        raise ContractError("The resource must be positive.")
    left = round(2 * beta * resource)
    right = round(4 * beta * beta * resource)
    if left < 1 or right < 1:
        raise ContractError("Both sides of the bipartite graph need at least one node.")
    weight = 1.0 / left
    edges = [(u, left + v, weight) for u in range(left) for v in range(right)]
    n = left + right
    return Instance.create(
        theta=np.ones(n),
        alpha=np.ones(n),
        edges=edges,
        resource=resource,
        meta={"family": "bipartite-gap", "beta": beta, "left": left, "right": right},
    )


def sample_pure_strategies(inst: Instance, budget: float, count: int, seed: int) -> list[PureStrategy]:
    """Seeded allocations of at most ``budget``; shapes rotate with the draw index."""
    if budget < 0 or count < 0:
        raise ContractError("Budget and count must be nonnegative.")
    n = inst.node_count
    rng = SplitMix64(seed)
    strategies: list[PureStrategy] = []
    for i in range(count):
        allocation = np.zeros(n)
        shape = i % 3
        if shape == 0:
            # random split over every node
            weights = rng.uniform(n) + 1e-12
            allocation = budget * weights / weights.sum()
        elif shape == 1:
            # even split over a random subset
            size = int(rng.integers(1, 1, n)[0])
            chosen = np.argsort(rng.uniform(n))[:size]
            allocation[chosen] = budget / size
        else:
            # pay full thresholds in random order
            left = budget
            for u in np.argsort(rng.uniform(n)):
                spend = min(inst.theta[u], left)
                allocation[u] = spend
                left -= spend
                if left <= 0:
                    break
        strategies.append(PureStrategy(allocation))
    return strategies


def adversarial_pure_strategies(inst: Instance, budget: float, count: int, seed: int) -> list[PureStrategy]:
    """Greedy allocations that defend as many nodes as ``budget`` allows.

    The first spreads the budget evenly over the nodes with the largest total
    sharing weight. Each later one is the longest defendable prefix of a seeded
    random node order.
    """
    if budget < 0 or count < 0:
        raise ContractError("Budget and count must be nonnegative.")
    if count == 0:
        return []
    n = inst.node_count
    degree = np.asarray(inst.weights.sum(axis=1)).ravel()
    hubs = np.flatnonzero(np.isclose(degree, degree.max(), rtol=1e-9, atol=1e-12))
    allocation = np.zeros(n)
    allocation[hubs] = budget / hubs.size
    strategies = [PureStrategy(allocation)]
    rng = SplitMix64(seed)
    for _ in range(count - 1):
        order = np.argsort(rng.uniform(n), kind="stable")
        k, witness = longest_defendable_prefix(inst, order, budget)
        logger.debug("greedy prefix defends %d of %d nodes", k, n)
        strategies.append(witness)
    return strategies
