from __future__ import annotations

import logging

import numpy as np

from netdefense.lp import longest_defendable_prefix
from netdefense.model import Instance, PureStrategy, pure_loss

logger = logging.getLogger(__name__)


def value_order(inst: Instance) -> np.ndarray:
    """Nodes by value, largest first, ties by ascending index."""
    return np.lexsort((np.arange(inst.node_count), -inst.alpha))


def optimal_pure(inst: Instance) -> tuple[PureStrategy, float]:
    """Best deterministic allocation under the instance's resource.

    The attacker's loss against a pure strategy is one of the node values or zero.
    Every set ``A(a)`` of nodes worth more than ``a`` is a prefix of the value
    order, so one binary search over prefix lengths covers all candidates ``a``.
    With ``k`` the longest defendable prefix, the optimum is the value of the
    first node left out, or zero when every node is defended.
    """
    order = value_order(inst)
    k, witness = longest_defendable_prefix(inst, order)
    _, result = pure_loss(inst, witness)
    logger.info("optimal pure result %.9g (prefix %d of %d)", result, k, order.size)
    return witness, result
