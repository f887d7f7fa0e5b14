from __future__ import annotations

import math
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from netdefense.model import Instance, MixedStrategy, PureStrategy

U64_MAX = 2**64 - 1


def _finite(value: float, label: str) -> float:
    if not math.isfinite(value):
        raise ValueError(f"{label} must be a finite number.")
    return value


class NodeSpec(BaseModel):
    theta: float
    alpha: float

    @field_validator("theta")
    @classmethod
    def theta_positive(cls, value: float) -> float:
        if _finite(value, "theta") <= 0:
            raise ValueError("theta must be positive.")
        return value

    @field_validator("alpha")
    @classmethod
    def alpha_nonnegative(cls, value: float) -> float:
        if _finite(value, "alpha") < 0:
            raise ValueError("alpha must be nonnegative.")
        return value


class EdgeSpec(BaseModel):
    u: int = Field(ge=0)
    v: int = Field(ge=0)
    w: float

    @field_validator("w")
    @classmethod
    def weight_in_unit_interval(cls, value: float) -> float:
        if not 0.0 <= _finite(value, "w") <= 1.0:
            raise ValueError("w must lie in [0, 1].")
        return value


class InstanceFile(BaseModel):
    nodes: list[NodeSpec] = Field(min_length=1)
    edges: list[EdgeSpec] = Field(default_factory=list)
    resource: float
    meta: dict[str, Any] | None = None

    @field_validator("resource")
    @classmethod
    def resource_nonnegative(cls, value: float) -> float:
        if _finite(value, "resource") < 0:
            raise ValueError("resource must be nonnegative.")
        return value

    @model_validator(mode="after")
    def edges_simple(self) -> InstanceFile:
        n = len(self.nodes)
        seen: set[tuple[int, int]] = set()
        for edge in self.edges:
            if edge.u >= n or edge.v >= n:
                raise ValueError(f"Edge ({edge.u}, {edge.v}) references a missing node.")
            if edge.u == edge.v:
                raise ValueError(f"Self-loop on node {edge.u}.")
            key = (min(edge.u, edge.v), max(edge.u, edge.v))
            if key in seen:
                raise ValueError(f"Duplicate edge {key}.")
            seen.add(key)
        return self

    def to_instance(self) -> Instance:
        return Instance.create(
            theta=[node.theta for node in self.nodes],
            alpha=[node.alpha for node in self.nodes],
            edges=[(edge.u, edge.v, edge.w) for edge in self.edges],
            resource=self.resource,
            meta=self.meta,
        )

    @classmethod
    def from_instance(cls, inst: Instance) -> InstanceFile:
        return cls(
            nodes=[NodeSpec(theta=t, alpha=a) for t, a in zip(inst.theta.tolist(), inst.alpha.tolist())],
            edges=[EdgeSpec(u=e.u, v=e.v, w=e.w) for e in inst.edges],
            resource=inst.resource,
            meta=dict(inst.meta) or None,
        )


class StrategyFile(BaseModel):
    support: list[list[float]]
    probs: list[float]

    @model_validator(mode="after")
    def shapes_match(self) -> StrategyFile:
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs must have the same length.")
        widths = {len(row) for row in self.support}
        if len(widths) > 1:
            raise ValueError("Every support vector must have the same length.")
        return self

    def to_mixed(self) -> MixedStrategy:
        support = tuple(PureStrategy(np.asarray(row, dtype=np.float64)) for row in self.support)
        return MixedStrategy(support, np.asarray(self.probs, dtype=np.float64))

    @classmethod
    def from_mixed(cls, mixed: MixedStrategy) -> StrategyFile:
        return cls(
            support=[strategy.allocation.tolist() for strategy in mixed.support],
            probs=mixed.probs.tolist(),
        )


class PatchConfig(BaseModel):
    iterations: int = Field(ge=1)
    rng_seed: int = Field(default=0, ge=0, le=U64_MAX)


class GenConfig(BaseModel):
    seed: int = Field(default=0, ge=0, le=U64_MAX)
    alpha_range: tuple[int, int] = (1, 9)
    theta_range: tuple[float, float] = (1.0, 10.0)
    weight_range: tuple[float, float] = (0.0, 1.0)
    resource_fraction: float = 0.2
    isolated: bool = False
    uniform_theta: float | None = None

    @field_validator("alpha_range", "theta_range", "weight_range")
    @classmethod
    def range_ordered(cls, value: tuple[float, float]) -> tuple[float, float]:
        low, high = value
        if high < low:
            raise ValueError("Range upper end must not be below its lower end.")
        return value

    @field_validator("resource_fraction")
    @classmethod
    def fraction_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("resource_fraction must be positive.")
        return value

    @field_validator("uniform_theta")
    @classmethod
    def uniform_theta_positive(cls, value: float | None) -> float | None:
        if value is not None and not value > 0:
            raise ValueError("uniform_theta must be positive.")
        return value

    @model_validator(mode="after")
    def ranges_in_domain(self) -> GenConfig:
        if self.alpha_range[0] < 0:
            raise ValueError("alpha_range must be nonnegative.")
        if self.uniform_theta is None and self.theta_range[0] <= 0:
            raise ValueError("theta_range must be positive.")
        if self.weight_range[0] < 0 or self.weight_range[1] > 1:
            raise ValueError("weight_range must lie within [0, 1].")
        return self
