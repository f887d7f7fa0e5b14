from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from netdefense.errors import ParseError
from netdefense.model import Instance
from netdefense.rng import SplitMix64
from netdefense.schemas import GenConfig

logger = logging.getLogger(__name__)


@dataclass
class EdgeList:
    """Undirected simple graph over compact node ids ``0..node_count-1``."""

    node_count: int
    edges: list[tuple[int, int]] = field(default_factory=list)
    self_loops: int = 0
    duplicates: int = 0
    ids: list[int] = field(default_factory=list)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def load_edge_list(path: Path | str, directed_dedup: bool = True) -> EdgeList:
    """Read a whitespace-separated ``u v`` file; ``#`` lines are comments.

    Ids are compacted in order of first appearance. Self-loops are dropped.
    With ``directed_dedup`` a repeated or reversed pair is dropped; without it
    such a pair is a parse error.
    """
    index: dict[int, int] = {}
    result = EdgeList(node_count=0)
    seen: set[tuple[int, int]] = set()
    with Path(path).open(encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected two node ids, got {line!r}", line=number)
            try:
                u_id, v_id = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ParseError(f"node ids must be integers, got {line!r}", line=number) from exc
            u = index.setdefault(u_id, len(index))
            v = index.setdefault(v_id, len(index))
            if u == v:
                result.self_loops += 1
                continue
            key = (min(u, v), max(u, v))
            if key in seen:
                if not directed_dedup:
                    raise ParseError(f"duplicate edge {u_id} {v_id}", line=number)
                result.duplicates += 1
                continue
            seen.add(key)
            result.edges.append(key)
    result.node_count = len(index)
    result.ids = list(index)
    logger.info(
        "loaded %d nodes, %d edges (%d self-loops, %d duplicates dropped)",
        result.node_count,
        result.edge_count,
        result.self_loops,
        result.duplicates,
    )
    return result


def random_edge_list(node_count: int, edge_count: int, seed: int) -> EdgeList:
    """Seeded G(n, m) graph."""
    graph = nx.gnm_random_graph(node_count, edge_count, seed=seed)
    edges = sorted((min(u, v), max(u, v)) for u, v in graph.edges())
    return EdgeList(node_count=node_count, edges=edges, ids=list(range(node_count)))


def generate_instance(edges: EdgeList, cfg: GenConfig) -> Instance:
    """Draw values, then thresholds, then weights in edge order from one seeded stream."""
    n = edges.node_count
    rng = SplitMix64(cfg.seed)
    alpha = rng.integers(n, *cfg.alpha_range).astype(np.float64)
    if cfg.uniform_theta is None:
        theta = rng.uniform(n, *cfg.theta_range)
    else:
        theta = np.full(n, cfg.uniform_theta)
    if cfg.isolated:
        weights = np.zeros(edges.edge_count)
    else:
        weights = rng.uniform(edges.edge_count, *cfg.weight_range)
    return Instance.create(
        theta=theta,
        alpha=alpha,
        edges=[(u, v, float(w)) for (u, v), w in zip(edges.edges, weights)],
        resource=cfg.resource_fraction * float(theta.sum()),
        meta={"seed": cfg.seed, "isolated": cfg.isolated},
    )
