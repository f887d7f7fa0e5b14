from __future__ import annotations

import enum
import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from netdefense.errors import ContractError, SolverError
from netdefense.model import Instance, PureStrategy, defending_power, within_budget
from netdefense.settings import get_settings

logger = logging.getLogger(__name__)

EPS_LP = 1e-8
_PIVOT_TOL = 1e-10
_MAX_PIVOTS = 50_000

LE, GE, EQ = "<=", ">=", "="


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Minimize ``objective @ x`` subject to ``matrix @ x (senses) rhs`` and bounds."""

    objective: np.ndarray
    matrix: sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    name: str = "lp"

    def __post_init__(self) -> None:
        n = self.objective.shape[0]
        rows = len(self.senses)
        if self.matrix.shape != (rows, n):
            raise ContractError(f"Constraint matrix has shape {self.matrix.shape}, expected {(rows, n)}.")
        if self.rhs.shape != (rows,):
            raise ContractError("One right-hand side per constraint is required.")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ContractError("One bound pair per variable is required.")
        if any(sense not in (LE, GE, EQ) for sense in self.senses):
            raise ContractError("Constraint relations must be <=, >= or =.")
        finite = [self.objective, self.matrix.data, self.rhs]
        if not all(np.all(np.isfinite(values)) for values in finite):
            raise ContractError("Coefficients and right-hand sides must be finite.")
        if np.any(self.lower > self.upper):
            raise ContractError("A lower bound exceeds its upper bound.")

    @property
    def num_vars(self) -> int:
        return int(self.objective.shape[0])

    @property
    def num_constraints(self) -> int:
        return len(self.senses)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def make_problem(
    objective: Sequence[float] | np.ndarray,
    rows: Sequence[tuple[dict[int, float], str, float]],
    lower: Sequence[float] | np.ndarray | None = None,
    upper: Sequence[float] | np.ndarray | None = None,
    name: str = "lp",
) -> LpProblem:
    """Build a problem from sparse rows given as ``({var: coef}, relation, rhs)``."""
    c = np.asarray(objective, dtype=np.float64)
    n = c.shape[0]
    data: list[float] = []
    row_index: list[int] = []
    col_index: list[int] = []
    for i, (coefs, _, _) in enumerate(rows):
        for j, value in coefs.items():
            if not 0 <= j < n:
                raise ContractError(f"Variable index {j} out of range.")
            row_index.append(i)
            col_index.append(j)
            data.append(float(value))
    matrix = sp.csr_matrix((data, (row_index, col_index)), shape=(len(rows), n))
    return LpProblem(
        objective=c,
        matrix=matrix,
        senses=tuple(sense for _, sense, _ in rows),
        rhs=np.array([rhs for _, _, rhs in rows], dtype=np.float64),
        lower=np.zeros(n) if lower is None else np.asarray(lower, dtype=np.float64),
        upper=np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=np.float64),
        name=name,
    )


def max_violation(problem: LpProblem, x: np.ndarray) -> float:
    """Largest constraint or bound violation, relative to ``1 + |rhs| + |activity|``."""
    activity = problem.matrix @ x
    magnitude = 1 + np.abs(problem.rhs) + (abs(problem.matrix) @ np.abs(x))
    senses = np.array(problem.senses, dtype=object)
    gap = np.zeros(problem.num_constraints)
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    gap[le] = activity[le] - problem.rhs[le]
    gap[ge] = problem.rhs[ge] - activity[ge]
    gap[eq] = np.abs(activity[eq] - problem.rhs[eq])
    worst = float(np.max(np.maximum(gap, 0) / magnitude, initial=0.0))
    bound_gap = np.maximum(problem.lower - x, 0) + np.maximum(x - problem.upper, 0)
    scale = 1 + np.abs(np.where(np.isfinite(problem.lower), problem.lower, 0))
    return max(worst, float(np.max(bound_gap / scale, initial=0.0)))


def solve(problem: LpProblem, backend: str | None = None) -> LpSolution:
    backend = backend or get_settings().lp_backend
    solver = _BACKENDS.get(backend)
    if solver is None:
        raise ContractError(f"Unknown LP backend {backend!r}.")
    solution = solver(problem)
    logger.debug(
        "lp %s: %d vars, %d rows, %s via %s",
        problem.name,
        problem.num_vars,
        problem.num_constraints,
        solution.status.value,
        backend,
    )
    if solution.is_optimal:
        violation = max_violation(problem, solution.x)
        if violation > EPS_LP:
            raise SolverError(f"{backend} returned a point violating {problem.name} by {violation:.3g}.")
    return solution


def _solve_highs(problem: LpProblem) -> LpSolution:
    senses = np.array(problem.senses, dtype=object)
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    matrix = problem.matrix
    a_ub = sp.vstack([matrix[np.flatnonzero(le)], -matrix[np.flatnonzero(ge)]]).tocsr()
    b_ub = np.concatenate([problem.rhs[le], -problem.rhs[ge]])
    a_eq = matrix[np.flatnonzero(eq)]
    bounds = [
        (None if np.isinf(lo) else lo, None if np.isinf(hi) else hi)
        for lo, hi in zip(problem.lower, problem.upper)
    ]
    options = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
    for presolve in (True, False):
        result = linprog(
            problem.objective,
            A_ub=a_ub if a_ub.shape[0] else None,
            b_ub=b_ub if a_ub.shape[0] else None,
            A_eq=a_eq if a_eq.shape[0] else None,
            b_eq=problem.rhs[eq] if a_eq.shape[0] else None,
            bounds=bounds,
            method="highs",
            options={**options, "presolve": presolve},
        )
        # presolve may stop at "infeasible or unbounded"; the plain solve tells them apart
        if result.status in (0, 2, 3):
            break
    if result.status == 0:
        x = np.asarray(result.x, dtype=np.float64)
        return LpSolution(LpStatus.OPTIMAL, x, float(problem.objective @ x))
    if result.status == 2:
        return LpSolution(LpStatus.INFEASIBLE)
    if result.status == 3:
        return LpSolution(LpStatus.UNBOUNDED)
    raise SolverError(f"HiGHS failed on {problem.name}: {result.message}")


def _solve_simplex(problem: LpProblem) -> LpSolution:
    """Dense two-phase tableau simplex with Bland's rule."""
    n = problem.num_vars
    dense = problem.matrix.toarray()

    # x = offset + P @ y with y >= 0
    offset = np.zeros(n)
    columns: list[np.ndarray] = []
    bound_rows: list[tuple[int, float]] = []
    for j in range(n):
        lo, hi = problem.lower[j], problem.upper[j]
        unit = np.zeros(n)
        unit[j] = 1.0
        if np.isfinite(lo):
            offset[j] = lo
            columns.append(unit)
            if np.isfinite(hi):
                bound_rows.append((len(columns) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    transform = np.column_stack(columns) if columns else np.zeros((n, 0))
    width = transform.shape[1]

    rows = [dense @ transform]
    rhs = [problem.rhs - dense @ offset]
    senses = list(problem.senses)
    for column, limit in bound_rows:
        row = np.zeros((1, width))
        row[0, column] = 1.0
        rows.append(row)
        rhs.append(np.array([limit]))
        senses.append(LE)
    a = np.vstack(rows) if rows else np.zeros((0, width))
    b = np.concatenate(rhs) if rhs else np.zeros(0)

    slack_count = sum(sense != EQ for sense in senses)
    slack = np.zeros((a.shape[0], slack_count))
    k = 0
    for i, sense in enumerate(senses):
        if sense == LE:
            slack[i, k] = 1.0
            k += 1
        elif sense == GE:
            slack[i, k] = -1.0
            k += 1
    a = np.hstack([a, slack])
    negative = b < 0
    a[negative] *= -1
    b = np.where(negative, -b, b)
    cost = np.concatenate([problem.objective @ transform, np.zeros(slack_count)])

    status, y = _two_phase(a, b, cost)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status)
    x = offset + transform @ y[:width]
    return LpSolution(LpStatus.OPTIMAL, x, float(problem.objective @ x))


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    others = np.arange(tableau.shape[0]) != row
    tableau[others] -= np.outer(tableau[others, col], tableau[row])


def _iterate(tableau: np.ndarray, basis: list[int], allowed: int) -> LpStatus:
    m = len(basis)
    for _ in range(_MAX_PIVOTS):
        reduced = tableau[m, :allowed]
        entering = np.flatnonzero(reduced < -_PIVOT_TOL)
        if entering.size == 0:
            return LpStatus.OPTIMAL
        col = int(entering[0])
        column = tableau[:m, col]
        candidates = np.flatnonzero(column > _PIVOT_TOL)
        if candidates.size == 0:
            return LpStatus.UNBOUNDED
        ratios = tableau[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[ratios <= best + _PIVOT_TOL * (1 + abs(best))]
        row = int(min(tied, key=lambda i: basis[i]))
        _pivot(tableau, row, col)
        basis[row] = col
    raise SolverError("Simplex pivot limit reached.")


def _two_phase(a: np.ndarray, b: np.ndarray, cost: np.ndarray) -> tuple[LpStatus, np.ndarray]:
    m, width = a.shape
    tableau = np.zeros((m + 1, width + m + 1))
    tableau[:m, :width] = a
    tableau[:m, width : width + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[m, width : width + m] = 1.0
    tableau[m] -= tableau[:m].sum(axis=0)
    basis = list(range(width, width + m))

    if _iterate(tableau, basis, width + m) is not LpStatus.OPTIMAL:
        raise SolverError("Phase one of the simplex did not converge.")
    if -tableau[m, -1] > 1e-9 * (1 + np.abs(b).max(initial=0.0)):
        return LpStatus.INFEASIBLE, np.zeros(width)

    keep = []
    for row in range(m):
        if basis[row] >= width:
            pivots = np.flatnonzero(np.abs(tableau[row, :width]) > 1e-9)
            if pivots.size == 0:
                continue
            _pivot(tableau, row, int(pivots[0]))
            basis[row] = int(pivots[0])
        keep.append(row)

    phase_two = np.zeros((len(keep) + 1, width + 1))
    phase_two[:-1, :width] = tableau[keep, :width]
    phase_two[:-1, -1] = tableau[keep, -1]
    basis = [basis[row] for row in keep]
    phase_two[-1, :width] = cost
    for row, var in enumerate(basis):
        phase_two[-1] -= cost[var] * phase_two[row]
    status = _iterate(phase_two, basis, width)
    y = np.zeros(width)
    if status is LpStatus.OPTIMAL:
        for row, var in enumerate(basis):
            y[var] = max(phase_two[row, -1], 0.0)
    return status, y


_BACKENDS: dict[str, Callable[[LpProblem], LpSolution]] = {
    "highs": _solve_highs,
    "simplex": _solve_simplex,
}


def to_lp_text(problem: LpProblem) -> str:
    """Render the problem in CPLEX LP format."""

    def term(coef: float, var: int, first: bool) -> str:
        sign = "-" if coef < 0 else ("" if first else "+")
        return f"{sign} {abs(coef):.12g} x{var}".strip()

    def expression(coefs: Iterable[tuple[int, float]]) -> str:
        parts = [term(c, j, i == 0) for i, (j, c) in enumerate(coefs)]
        return " ".join(parts) if parts else "0 x0"

    lines = ["\\ " + problem.name, "Minimize"]
    nonzero = [(j, c) for j, c in enumerate(problem.objective) if c != 0]
    lines.append(f" obj: {expression(nonzero)}")
    lines.append("Subject To")
    for i, sense in enumerate(problem.senses):
        row = problem.matrix.getrow(i)
        coefs = sorted(zip(row.indices.tolist(), row.data.tolist()))
        lines.append(f" c{i}: {expression(coefs)} {sense} {problem.rhs[i]:.12g}")
    lines.append("Bounds")
    for j in range(problem.num_vars):
        lo, hi = problem.lower[j], problem.upper[j]
        lo_text = "-inf" if np.isinf(lo) else f"{lo:.12g}"
        hi_text = "+inf" if np.isinf(hi) else f"{hi:.12g}"
        lines.append(f" {lo_text} <= x{j} <= {hi_text}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _node_list(inst: Instance, nodes: Iterable[int]) -> np.ndarray:
    index = np.array(sorted(set(int(u) for u in nodes)), dtype=np.int64)
    if index.size and (index[0] < 0 or index[-1] >= inst.node_count):
        raise ContractError("Node set references a missing node.")
    return index


def build_defend_set_lp(inst: Instance, nodes: Iterable[int], budget: float) -> LpProblem:
    if budget < 0:
        raise ContractError("Budget must be nonnegative.")
    index = _node_list(inst, nodes)
    n = inst.node_count
    matrix = sp.vstack([sp.csr_matrix(np.ones((1, n))), inst.power_matrix[index]]).tocsr()
    return LpProblem(
        objective=np.zeros(n),
        matrix=matrix,
        senses=(LE,) + (GE,) * index.size,
        rhs=np.concatenate([[budget], inst.theta[index]]),
        lower=np.zeros(n),
        upper=np.full(n, np.inf),
        name="defend_set",
    )


def can_defend(inst: Instance, nodes: Iterable[int], budget: float | None = None) -> PureStrategy | None:
    budget = inst.resource if budget is None else budget
    index = _node_list(inst, nodes)
    if index.size == 0:
        return PureStrategy.zeros(inst.node_count)
    if inst.is_isolated:
        if within_budget(float(inst.theta[index].sum()), budget):
            return PureStrategy.defending(inst, index)
        return None
    solution = solve(build_defend_set_lp(inst, index, budget))
    if solution.status is LpStatus.INFEASIBLE:
        return None
    if not solution.is_optimal:
        raise SolverError(f"Defend-set LP is {solution.status.value}.")
    allocation = np.clip(solution.x, 0.0, None)
    # r_u enters pi_u with coefficient one, so topping up r_u closes any solver shortfall.
    deficit = inst.theta[index] - defending_power(inst, allocation)[index]
    allocation[index] += np.clip(deficit, 0.0, None)
    return PureStrategy(allocation)


def longest_defendable_prefix(
    inst: Instance, order: Sequence[int] | np.ndarray, budget: float | None = None
) -> tuple[int, PureStrategy]:
    """Binary search for the longest prefix of ``order`` one pure strategy defends.

    Defendability is monotone in the prefix length: dropping a node only removes
    a constraint from the defend-set LP.
    """
    order = np.asarray(order, dtype=np.int64)
    best = (0, PureStrategy.zeros(inst.node_count))
    lo, hi = 0, order.size
    while lo < hi:
        mid = (lo + hi + 1) // 2
        witness = can_defend(inst, order[:mid], budget)
        logger.debug("prefix %d of %d: %s", mid, order.size, "infeasible" if witness is None else "feasible")
        if witness is None:
            hi = mid - 1
        else:
            lo = mid
            best = (mid, witness)
    return best


def build_fractional_lp(inst: Instance, budget: float) -> LpProblem:
    """Variables ``(r_0..r_{n-1}, L)``; minimize L under the fractional-loss rows."""
    if budget < 0:
        raise ContractError("Budget must be nonnegative.")
    n = inst.node_count
    scale = sp.diags(inst.alpha / inst.theta)
    loss_rows = sp.hstack([scale @ inst.power_matrix, sp.csr_matrix(np.ones((n, 1)))])
    budget_row = sp.csr_matrix(np.concatenate([np.ones(n), [0.0]])[None, :])
    objective = np.zeros(n + 1)
    objective[n] = 1.0
    return LpProblem(
        objective=objective,
        matrix=sp.vstack([budget_row, loss_rows]).tocsr(),
        senses=(LE,) + (GE,) * n,
        rhs=np.concatenate([[budget], inst.alpha]),
        lower=np.zeros(n + 1),
        upper=np.full(n + 1, np.inf),
        name="fractional",
    )


def build_prob_lp(inst: Instance, statuses: np.ndarray | Sequence[Sequence[int]]) -> LpProblem:
    """Variables ``(p_0..p_{k-1}, L)`` over the given support statuses."""
    statuses = np.asarray(statuses, dtype=np.float64)
    if statuses.ndim != 2 or statuses.shape[1] != inst.node_count or statuses.shape[0] == 0:
        raise ContractError("Statuses must be a non-empty k x n 0/1 matrix.")
    k = statuses.shape[0]
    coverage = sp.hstack(
        [sp.csr_matrix(statuses.T * inst.alpha[:, None]), sp.csr_matrix(np.ones((inst.node_count, 1)))]
    )
    total = sp.csr_matrix(np.concatenate([np.ones(k), [0.0]])[None, :])
    objective = np.zeros(k + 1)
    objective[k] = 1.0
    return LpProblem(
        objective=objective,
        matrix=sp.vstack([total, coverage]).tocsr(),
        senses=(EQ,) + (GE,) * inst.node_count,
        rhs=np.concatenate([[1.0], inst.alpha]),
        lower=np.zeros(k + 1),
        upper=np.full(k + 1, np.inf),
        name="probabilities",
    )
