from __future__ import annotations

import logging
from collections.abc import Iterable

import numpy as np

from netdefense.errors import ContractError, SolverError
from netdefense.lp import build_fractional_lp, solve
from netdefense.model import Instance, PureStrategy

logger = logging.getLogger(__name__)


def optimal_fractional(inst: Instance, budget: float | None = None) -> tuple[PureStrategy, float]:
    """Solve the fractional relaxation at ``budget`` (the instance resource by default)."""
    budget = inst.resource if budget is None else float(budget)
    if budget < 0:
        raise ContractError("Budget must be nonnegative.")
    solution = solve(build_fractional_lp(inst, budget))
    if not solution.is_optimal:
        raise SolverError(f"Fractional LP is {solution.status.value}.")
    n = inst.node_count
    witness = PureStrategy(np.clip(solution.x[:n], 0.0, None))
    value = max(float(solution.objective), 0.0)
    logger.debug("fractional optimum %.9g at budget %.9g", value, budget)
    return witness, value


def opt_f_curve(inst: Instance, budgets: Iterable[float]) -> list[float]:
    return [optimal_fractional(inst, budget)[1] for budget in budgets]


def convexity_upper_bound(inst: Instance, budget: float, shortfall: float) -> float:
    """Upper bound on the fractional optimum at ``budget - shortfall``.

    Convexity puts the optimum at ``budget - shortfall`` below the chord between
    ``(0, alpha_max)`` and ``(budget, OPT_f(budget))``.
    """
    if budget <= 0 or not 0 <= shortfall <= budget:
        raise ContractError("Need budget > 0 and 0 <= shortfall <= budget.")
    _, at_budget = optimal_fractional(inst, budget)
    return at_budget + (shortfall / budget) * (inst.alpha_max - at_budget)
