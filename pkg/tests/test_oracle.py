import numpy as np
import pytest

from conftest import seeded_instance
from netdefense.errors import ContractError, SizeError
from netdefense.fractional import optimal_fractional
from netdefense.model import mixed_loss, status_matrix
from netdefense.oracle import (
    enumerate_feasible_statuses,
    exact_opt_mixed,
    gen_bipartite_gap_instance,
    gen_even_partition_instance,
    has_even_partition,
    adversarial_pure_strategies,
    sample_pure_strategies,
)
from netdefense.patching import patch
from netdefense.pure import optimal_pure
from netdefense.rng import SplitMix64
from netdefense.schemas import PatchConfig
from netdefense.settings import get_settings


def test_four_targets_has_every_pair(four_targets):
    statuses = enumerate_feasible_statuses(four_targets)

    assert statuses.tolist() == [
        [0, 0, 1, 1],
        [0, 1, 0, 1],
        [0, 1, 1, 0],
        [1, 0, 0, 1],
        [1, 0, 1, 0],
        [1, 1, 0, 0],
    ]


def test_four_targets_exact_optimum(four_targets):
    mixed, result = exact_opt_mixed(four_targets)

    assert result == pytest.approx(1)
    assert mixed.total_probability == pytest.approx(1)
    mixed.check(four_targets)


def test_three_targets_exact_optimum(three_targets):
    statuses = enumerate_feasible_statuses(three_targets)
    _, result = exact_opt_mixed(three_targets)

    assert statuses.tolist() == [[0, 1, 1], [1, 0, 1]]
    assert result == pytest.approx(1)


def test_exact_optimum_reuses_given_statuses(three_targets):
    statuses = enumerate_feasible_statuses(three_targets)

    _, result = exact_opt_mixed(three_targets, statuses=statuses)

    assert result == pytest.approx(1)
    with pytest.raises(ContractError):
        exact_opt_mixed(three_targets, statuses=statuses[:, :2])


def test_shared_pair_defends_everything(shared_pair):
    mixed, result = exact_opt_mixed(shared_pair)

    assert enumerate_feasible_statuses(shared_pair).tolist() == [[1, 1]]
    assert result == pytest.approx(0, abs=1e-9)
    assert mixed.size == 1


def test_nothing_defendable(three_targets):
    statuses = enumerate_feasible_statuses(three_targets.with_resource(0.5))

    assert statuses.tolist() == [[0, 0, 0]]
    assert exact_opt_mixed(three_targets.with_resource(0.5))[1] == pytest.approx(2)


def test_explicit_size_limit(four_targets):
    with pytest.raises(SizeError):
        exact_opt_mixed(four_targets, limit_n=3)


def test_size_limit_from_settings(four_targets, monkeypatch):
    monkeypatch.setenv("NETDEFENSE_ORACLE_LIMIT_N", "3")
    get_settings.cache_clear()
    try:
        with pytest.raises(SizeError):
            enumerate_feasible_statuses(four_targets)
    finally:
        monkeypatch.undo()
        get_settings.cache_clear()


@pytest.mark.parametrize("seed", range(200))
def test_exact_optimum_sits_between_pure_and_fractional(seed):
    isolated = seed % 2 == 0
    n = 5 + (seed // 2) % 10 if isolated else 5 + (seed // 2) % 3
    inst = seeded_instance(seed, n, isolated)

    mixed, opt_m = exact_opt_mixed(inst)

    _, opt_p = optimal_pure(inst)
    _, opt_f = optimal_fractional(inst)
    assert opt_f - 1e-6 <= opt_m <= opt_p + 1e-6
    assert mixed_loss(inst, mixed)[1] == pytest.approx(opt_m)
    mixed.check(inst)


@pytest.mark.parametrize("seed", range(6))
def test_patching_never_beats_the_exact_optimum(seed):
    inst = seeded_instance(seed, 6, isolated=False)

    _, trace = patch(inst, PatchConfig(iterations=5, rng_seed=seed))

    assert min(trace.results) >= exact_opt_mixed(inst)[1] - 1e-6


def test_even_partition_instance():
    inst = gen_even_partition_instance([1, 1, 2])

    assert inst.resource == 2
    assert inst.meta["family"] == "even-partition"
    assert inst.is_isolated
    assert exact_opt_mixed(inst)[1] == pytest.approx(0.5)


@pytest.mark.parametrize(("numbers", "expected"), [([1, 1, 1], 2 / 3), ([2, 2], 0.5), ([1, 2], 1)])
def test_even_partition_optimum(numbers, expected):
    assert exact_opt_mixed(gen_even_partition_instance(numbers))[1] == pytest.approx(expected)


def test_even_partition_rejects_bad_numbers():
    with pytest.raises(ContractError):
        gen_even_partition_instance([])
    with pytest.raises(ContractError):
        gen_even_partition_instance([1, 0])


def test_partition_search():
    assert has_even_partition([3, 1, 1, 2, 2, 1])
    assert not has_even_partition([1, 2, 4])
    with pytest.raises(SizeError):
        has_even_partition([1] * 25)


@pytest.mark.parametrize("seed", range(60))
def test_half_loss_exactly_when_a_partition_exists(seed):
    rng = SplitMix64(seed)
    size = int(rng.integers(1, 2, 8)[0])
    numbers = rng.integers(size, 1, 12).tolist()

    _, result = exact_opt_mixed(gen_even_partition_instance(numbers))

    assert result >= 0.5 - 1e-7
    assert (result <= 0.5 + 1e-6) == has_even_partition(numbers)


def test_bipartite_gap_layout():
    inst = gen_bipartite_gap_instance(2, 1)

    assert inst.node_count == 4 + 16
    assert inst.edge_count == 4 * 16
    assert inst.meta == {"family": "bipartite-gap", "beta": 2, "left": 4, "right": 16}
    assert inst.weights[0, 4] == pytest.approx(0.25)


def test_bipartite_gap_rejects_small_beta():
    with pytest.raises(ContractError):
        gen_bipartite_gap_instance(1, 4)


@pytest.mark.parametrize(("beta", "resource"), [(1.5, 2), (2, 1)])
def test_bipartite_gap(beta, resource):
    inst = gen_bipartite_gap_instance(beta, resource)

    _, opt_f = optimal_fractional(inst)
    budget = beta * resource
    random_draws = sample_pure_strategies(inst, budget, 1000, seed=11)
    greedy = adversarial_pure_strategies(inst, budget, 40, seed=11)
    defended = status_matrix(inst, random_draws + greedy).sum(axis=1)

    assert opt_f <= 1 - 1 / (2 * beta) + 1e-6
    assert defended.max() <= 2 * beta * resource
    assert all(s.norm <= budget + 1e-6 for s in greedy)


def test_samples_respect_the_budget(four_targets):
    strategies = sample_pure_strategies(four_targets, 1.5, 30, seed=4)

    assert len(strategies) == 30
    assert all(s.norm <= 1.5 + 1e-9 for s in strategies)
    assert strategies[0].allocation.min() > 0
    assert np.count_nonzero(strategies[2].allocation) == 2


def test_samples_are_reproducible(three_targets):
    first = sample_pure_strategies(three_targets, 2, 9, seed=5)
    second = sample_pure_strategies(three_targets, 2, 9, seed=5)

    assert [s.allocation.tolist() for s in first] == [s.allocation.tolist() for s in second]


def test_samples_reject_negative_budget(three_targets):
    with pytest.raises(ContractError):
        sample_pure_strategies(three_targets, -1, 3, seed=0)


def test_greedy_strategies_start_on_the_hubs():
    inst = gen_bipartite_gap_instance(2, 1)

    hub, *prefixes = adversarial_pure_strategies(inst, 2, 5, seed=3)

    assert hub.allocation[:4].tolist() == [0.5] * 4
    assert not hub.allocation[4:].any()
    assert len(prefixes) == 4
    assert all(status_matrix(inst, [s]).sum() >= 1 for s in prefixes)


def test_greedy_prefixes_stay_within_the_budget(three_targets):
    strategies = adversarial_pure_strategies(three_targets, 4, 6, seed=0)

    counts = status_matrix(three_targets, strategies[1:]).sum(axis=1)

    assert len(strategies) == 6
    assert set(counts.tolist()) <= {1, 2}
    assert all(s.norm <= 4 + 1e-9 for s in strategies)
    assert adversarial_pure_strategies(three_targets, 4, 0, seed=0) == []
