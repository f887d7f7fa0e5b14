import json

import pytest

from netdefense.datasets import generate_instance, random_edge_list
from netdefense.model import Instance
from netdefense.schemas import GenConfig
from netdefense.settings import get_settings


@pytest.fixture()
def four_targets():
    """Unit thresholds, values (3, 3, 3, 1), budget 2."""
    return Instance.create(theta=[1, 1, 1, 1], alpha=[3, 3, 3, 1], resource=2)


@pytest.fixture()
def three_targets():
    """Thresholds (3, 3, 1), values (2, 2, 1), budget 4."""
    return Instance.create(theta=[3, 3, 1], alpha=[2, 2, 1], resource=4)


@pytest.fixture()
def shared_pair():
    """Two nodes sharing half of their resource."""
    return Instance.create(theta=[3, 3], alpha=[1, 2], edges=[(0, 1, 0.5)], resource=4)


@pytest.fixture()
def simplex_backend(monkeypatch):
    monkeypatch.setenv("NETDEFENSE_LP_BACKEND", "simplex")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture()
def write_instance(tmp_path):
    def _write(inst_dict: dict, name: str = "instance.json"):
        path = tmp_path / name
        path.write_text(json.dumps(inst_dict), encoding="utf-8")
        return path

    return _write


def seeded_instance(seed: int, node_count: int, isolated: bool, **overrides) -> Instance:
    edge_count = min(2 * node_count, node_count * (node_count - 1) // 2)
    edges = random_edge_list(node_count, edge_count, seed)
    return generate_instance(edges, GenConfig(seed=seed, isolated=isolated, **overrides))


@pytest.fixture()
def make_instance():
    return seeded_instance
