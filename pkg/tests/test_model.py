import numpy as np
import pytest

from netdefense.errors import ContractError, DimensionError
from netdefense.model import (
    Instance,
    MixedStrategy,
    PureStrategy,
    defending_power,
    defending_status,
    fractional_loss,
    mixed_loss,
    mixed_status,
    pure_loss,
)


def test_isolated_power_equals_allocation(three_targets):
    assert defending_power(three_targets, [3, 0, 1]).tolist() == [3, 0, 1]


def test_power_on_a_shared_edge():
    inst = Instance.create(theta=[1, 1], alpha=[1, 1], edges=[(0, 1, 0.5)])

    assert defending_power(inst, [2, 4]).tolist() == [4, 5]


def test_power_on_a_bipartite_graph():
    left, right = [0, 1], [2, 3, 4, 5]
    edges = [(u, v, 0.5) for u in left for v in right]
    inst = Instance.create(theta=np.ones(6), alpha=np.ones(6), edges=edges, resource=1)
    r = np.array([0.5, 0.5, 0, 0, 0, 0])

    power = defending_power(inst, r)

    dense = np.eye(6)
    for u, v, w in edges:
        dense[u, v] = dense[v, u] = w
    np.testing.assert_allclose(power, dense @ r)
    np.testing.assert_allclose(power, 0.5)


def test_power_rejects_wrong_length(three_targets):
    with pytest.raises(DimensionError):
        defending_power(three_targets, [1, 2])


def test_status_and_loss_for_two_defended_nodes(four_targets):
    r = PureStrategy(np.array([1.0, 1.0, 0.0, 0.0]))

    assert defending_status(four_targets, r).tolist() == [1, 1, 0, 0]
    loss, result = pure_loss(four_targets, r)
    assert loss.loss.tolist() == [0, 0, 3, 1]
    assert result == 3


def test_status_tolerates_solver_precision(four_targets):
    r = [1 - 5e-10, 0, 0, 0]

    assert defending_status(four_targets, r)[0] == 1


def test_zero_allocation_defends_nothing(three_targets):
    assert defending_status(three_targets, np.zeros(3)).tolist() == [0, 0, 0]


def test_pure_loss_leaves_the_undefended_value(three_targets):
    assert defending_status(three_targets, [3, 0, 1]).tolist() == [1, 0, 1]
    assert pure_loss(three_targets, [3, 0, 1])[1] == 2


def test_full_defense_has_zero_loss(three_targets):
    assert pure_loss(three_targets, three_targets.theta)[1] == 0


def test_uniform_mix_over_three_pairs(four_targets):
    support = tuple(PureStrategy.defending(four_targets, pair) for pair in ([0, 1], [1, 2], [0, 2]))
    mixed = MixedStrategy(support, np.full(3, 1 / 3))

    np.testing.assert_allclose(mixed_status(four_targets, mixed), [2 / 3, 2 / 3, 2 / 3, 0])
    assert mixed_loss(four_targets, mixed)[1] == pytest.approx(1)


def test_half_half_mix(three_targets):
    support = (PureStrategy(np.array([3.0, 0, 1])), PureStrategy(np.array([0, 3.0, 1])))
    mixed = MixedStrategy(support, np.array([0.5, 0.5]))

    np.testing.assert_allclose(mixed_status(three_targets, mixed), [0.5, 0.5, 1])
    assert mixed_loss(three_targets, mixed)[1] == pytest.approx(1)


def test_single_strategy_mix_matches_pure(three_targets):
    r = PureStrategy(np.array([3.0, 0, 1]))

    mixed = MixedStrategy.pure(r)

    assert mixed_status(three_targets, mixed).tolist() == defending_status(three_targets, r).tolist()
    assert mixed_loss(three_targets, mixed)[1] == pure_loss(three_targets, r)[1]


def test_empty_mix_loses_the_largest_value(three_targets):
    assert mixed_loss(three_targets, MixedStrategy.empty())[1] == 2


def test_missing_mass_counts_as_no_defense(three_targets):
    mixed = MixedStrategy((PureStrategy(np.array([3.0, 3.0, 1.0])),), np.array([0.25]))

    assert mixed_loss(three_targets, mixed)[1] == pytest.approx(1.5)


def test_fractional_loss_examples(three_targets, four_targets):
    assert fractional_loss(three_targets, [15 / 8, 15 / 8, 1 / 4])[1] == pytest.approx(0.75)
    assert fractional_loss(three_targets, three_targets.theta)[1] == 0
    assert fractional_loss(four_targets, [0.5, 0.5, 0.5, 0.5])[1] == pytest.approx(1.5)


def test_fractional_loss_never_exceeds_pure_loss(make_instance):
    inst = make_instance(5, 8, isolated=False)
    r = np.linspace(0, 1, inst.node_count) * inst.resource / inst.node_count

    fractional, _ = fractional_loss(inst, r)
    pure, _ = pure_loss(inst, r)

    assert np.all(fractional.loss <= pure.loss + 1e-12)
    assert np.all(pure.loss <= inst.alpha)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"theta": [0, 1], "alpha": [1, 1]},
        {"theta": [1, 1], "alpha": [-1, 1]},
        {"theta": [1, 1], "alpha": [1, 1], "edges": [(0, 0, 0.5)]},
        {"theta": [1, 1], "alpha": [1, 1], "edges": [(0, 1, 0.5), (1, 0, 0.2)]},
        {"theta": [1, 1], "alpha": [1, 1], "edges": [(0, 1, 1.5)]},
        {"theta": [1, 1], "alpha": [1, 1], "edges": [(0, 2, 0.5)]},
        {"theta": [1, 1], "alpha": [1, 1], "resource": -1},
        {"theta": [], "alpha": []},
    ],
)
def test_instance_rejects_bad_input(kwargs):
    with pytest.raises(ContractError):
        Instance.create(**kwargs)


def test_instance_rejects_length_mismatch():
    with pytest.raises(DimensionError):
        Instance.create(theta=[1, 1], alpha=[1])


def test_instance_derived_quantities(shared_pair):
    assert shared_pair.node_count == 2
    assert shared_pair.theta_max == 3
    assert shared_pair.alpha_max == 2
    assert not shared_pair.is_isolated
    assert shared_pair.neighbors(0) == [1]
    assert (shared_pair.weights != shared_pair.weights.T).nnz == 0


def test_zero_weight_edges_keep_the_model_isolated():
    inst = Instance.create(theta=[1, 1], alpha=[1, 1], edges=[(0, 1, 0.0)], resource=1)

    assert inst.is_isolated
    assert inst.neighbors(0) == []


def test_instance_arrays_are_read_only(three_targets):
    with pytest.raises(ValueError):
        three_targets.theta[0] = 5


def test_with_resource_keeps_the_graph(shared_pair):
    richer = shared_pair.with_resource(10)

    assert richer.resource == 10
    assert richer.edges == shared_pair.edges


def test_mixed_strategy_rejects_excess_probability():
    r = PureStrategy.zeros(2)

    with pytest.raises(ContractError):
        MixedStrategy((r, r), np.array([0.7, 0.7]))


def test_mixed_strategy_rejects_length_mismatch():
    with pytest.raises(DimensionError):
        MixedStrategy((PureStrategy.zeros(2),), np.array([0.5, 0.5]))


def test_pure_strategy_budget_check(three_targets):
    PureStrategy(np.array([3.0, 0.0, 1.0])).check(three_targets)

    with pytest.raises(ContractError):
        PureStrategy(np.array([3.0, 3.0, 1.0])).check(three_targets)


def test_pure_strategy_rejects_negative_entries():
    with pytest.raises(ContractError):
        PureStrategy(np.array([1.0, -0.5]))
