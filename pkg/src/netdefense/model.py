from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from netdefense.errors import ContractError, DimensionError

EPS_STATUS = 1e-9
EPS_FEAS = 1e-7


def within_budget(total: float, budget: float) -> bool:
    return total <= budget + EPS_FEAS


class Edge(NamedTuple):
    u: int
    v: int
    w: float


def _frozen(values: Iterable[float] | np.ndarray) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Instance:
    """A defending game: thresholds, values, a weighted sharing graph and a budget.

    Nodes are the dense indices ``0..n-1``. The instance never changes after
    construction, so derived operators are cached on it.
    """

    theta: np.ndarray
    alpha: np.ndarray
    edges: tuple[Edge, ...]
    resource: float
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        theta = _frozen(self.theta)
        alpha = _frozen(self.alpha)
        if theta.ndim != 1 or theta.size == 0:
            raise ContractError("An instance needs at least one node.")
        if alpha.shape != theta.shape:
            raise DimensionError("theta and alpha must have the same length.")
        if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
            raise ContractError("Every threshold must be a positive real.")
        if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
            raise ContractError("Every value must be a nonnegative real.")
        resource = float(self.resource)
        if not np.isfinite(resource) or resource < 0:
            raise ContractError("The resource must be a nonnegative real.")

        n = theta.size
        edges: list[Edge] = []
        seen: set[tuple[int, int]] = set()
        for raw in self.edges:
            u, v, w = int(raw[0]), int(raw[1]), float(raw[2])
            if not (0 <= u < n and 0 <= v < n):
                raise ContractError(f"Edge ({u}, {v}) references a missing node.")
            if u == v:
                raise ContractError(f"Self-loop on node {u}.")
            if not (np.isfinite(w) and 0.0 <= w <= 1.0):
                raise ContractError(f"Edge ({u}, {v}) weight must lie in [0, 1].")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ContractError(f"Duplicate edge {key}.")
            seen.add(key)
            edges.append(Edge(u, v, w))

        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "resource", resource)
        object.__setattr__(self, "meta", dict(self.meta))

    @classmethod
    def create(
        cls,
        theta: Sequence[float] | np.ndarray,
        alpha: Sequence[float] | np.ndarray,
        edges: Iterable[tuple[int, int, float]] = (),
        resource: float = 0.0,
        meta: Mapping[str, object] | None = None,
    ) -> Instance:
        return cls(
            theta=np.asarray(theta, dtype=np.float64),
            alpha=np.asarray(alpha, dtype=np.float64),
            edges=tuple(Edge(*edge) for edge in edges),
            resource=resource,
            meta=meta or {},
        )

    @property
    def node_count(self) -> int:
        return int(self.theta.size)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def theta_max(self) -> float:
        return float(self.theta.max())

    @property
    def alpha_max(self) -> float:
        return float(self.alpha.max())

    @property
    def is_isolated(self) -> bool:
        return all(edge.w == 0.0 for edge in self.edges)

    @cached_property
    def weights(self) -> sp.csr_matrix:
        n = self.node_count
        live = [edge for edge in self.edges if edge.w != 0.0]
        rows = [e.u for e in live] + [e.v for e in live]
        cols = [e.v for e in live] + [e.u for e in live]
        data = [e.w for e in live] * 2
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)

    @cached_property
    def power_matrix(self) -> sp.csr_matrix:
        """``I + W``: maps an allocation to defending powers."""
        return (sp.identity(self.node_count, format="csr") + self.weights).tocsr()

    def neighbors(self, u: int) -> list[int]:
        row = self.weights.getrow(u)
        return sorted(int(v) for v in row.indices)

    def with_resource(self, resource: float) -> Instance:
        return Instance(self.theta, self.alpha, self.edges, resource, self.meta)


@dataclass(frozen=True, eq=False)
class PureStrategy:
    allocation: np.ndarray

    def __post_init__(self) -> None:
        allocation = _frozen(self.allocation)
        if allocation.ndim != 1:
            raise DimensionError("An allocation is a vector.")
        if np.any(allocation < 0) or not np.all(np.isfinite(allocation)):
            raise ContractError("Allocations must be finite and nonnegative.")
        object.__setattr__(self, "allocation", allocation)

    @classmethod
    def zeros(cls, node_count: int) -> PureStrategy:
        return cls(np.zeros(node_count))

    @classmethod
    def defending(cls, inst: Instance, nodes: Iterable[int]) -> PureStrategy:
        """Allocate exactly the threshold to each listed node (isolated model)."""
        allocation = np.zeros(inst.node_count)
        index = np.fromiter(nodes, dtype=np.int64)
        allocation[index] = inst.theta[index]
        return cls(allocation)

    @property
    def norm(self) -> float:
        return float(self.allocation.sum())

    def check(self, inst: Instance, budget: float | None = None) -> None:
        _require_length(inst, self.allocation)
        limit = inst.resource if budget is None else budget
        if not within_budget(self.norm, limit):
            raise ContractError(f"Allocation uses {self.norm:.9g} of a {limit:.9g} budget.")


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """A distribution over a support list; missing mass is the all-zero strategy."""

    support: tuple[PureStrategy, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        support = tuple(self.support)
        probs = _frozen(self.probs)
        if probs.shape != (len(support),):
            raise DimensionError("Support and probabilities must have the same length.")
        if np.any(probs < -EPS_FEAS) or np.any(probs > 1 + EPS_FEAS):
            raise ContractError("Probabilities must lie in [0, 1].")
        if probs.sum() > 1 + EPS_FEAS:
            raise ContractError(f"Probabilities sum to {probs.sum():.9g} > 1.")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", _frozen(np.clip(probs, 0.0, 1.0)))

    @classmethod
    def pure(cls, strategy: PureStrategy) -> MixedStrategy:
        return cls((strategy,), np.ones(1))

    @classmethod
    def empty(cls) -> MixedStrategy:
        return cls((), np.zeros(0))

    @property
    def size(self) -> int:
        return len(self.support)

    @property
    def total_probability(self) -> float:
        return float(self.probs.sum())

    def check(self, inst: Instance) -> None:
        for strategy in self.support:
            strategy.check(inst)


@dataclass(frozen=True, eq=False)
class LossVector:
    loss: np.ndarray

    @property
    def result(self) -> float:
        return float(self.loss.max()) if self.loss.size else 0.0


def _require_length(inst: Instance, vector: np.ndarray) -> None:
    if vector.shape != (inst.node_count,):
        raise DimensionError(
            f"Expected a vector of length {inst.node_count}, got shape {vector.shape}."
        )


def _allocation(inst: Instance, r: PureStrategy | Sequence[float] | np.ndarray) -> np.ndarray:
    vector = r.allocation if isinstance(r, PureStrategy) else np.asarray(r, dtype=np.float64)
    _require_length(inst, vector)
    return vector


def defending_power(inst: Instance, r: PureStrategy | Sequence[float] | np.ndarray) -> np.ndarray:
    return inst.power_matrix @ _allocation(inst, r)


def defending_status(inst: Instance, r: PureStrategy | Sequence[float] | np.ndarray) -> np.ndarray:
    power = defending_power(inst, r)
    return (power >= inst.theta - EPS_STATUS).astype(np.int8)


def status_matrix(inst: Instance, support: Sequence[PureStrategy]) -> np.ndarray:
    """Row ``j`` is the defending status of ``support[j]``."""
    if not support:
        return np.zeros((0, inst.node_count), dtype=np.int8)
    allocations = np.vstack([_allocation(inst, r) for r in support])
    powers = (inst.power_matrix @ allocations.T).T
    return (powers >= inst.theta - EPS_STATUS).astype(np.int8)


def pure_loss(inst: Instance, r: PureStrategy | Sequence[float] | np.ndarray) -> tuple[LossVector, float]:
    loss = LossVector(inst.alpha * (1 - defending_status(inst, r)))
    return loss, loss.result


def mixed_status(inst: Instance, m: MixedStrategy) -> np.ndarray:
    if m.size == 0:
        return np.zeros(inst.node_count)
    return m.probs @ status_matrix(inst, m.support)


def mixed_loss(inst: Instance, m: MixedStrategy) -> tuple[LossVector, float]:
    status = np.clip(mixed_status(inst, m), 0.0, 1.0)
    loss = LossVector((1 - status) * inst.alpha)
    return loss, loss.result


def fractional_loss(inst: Instance, r: PureStrategy | Sequence[float] | np.ndarray) -> tuple[LossVector, float]:
    covered = np.minimum(defending_power(inst, r) / inst.theta, 1.0)
    loss = LossVector((1 - covered) * inst.alpha)
    return loss, loss.result
