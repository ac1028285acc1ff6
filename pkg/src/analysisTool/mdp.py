"""Quantized (q, e) Markov decision process and its solvers.

States are grid points (i, j) with q = i * q_step and e = j * e_step, flattened
as s = i * n_e + j. An action is an energy level a <= j, i.e. transmit
T = a * e_step. The post-service queue (q - g(T))^+ is rounded to the nearest
data level before the arrival is added, and both buffers clip at the top of
their grids, so every transition row is an exact convolution of the arrival
and harvest pmfs.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from src.misc.errors import ConfigError, ContractViolation, DomainError, MultichainError
from src.modelTool.distributions import DiscretePmf, DistributionSpec
from src.modelTool.rate_functions import RateFunction
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.simulator import ScenarioConfig

logger = logging.getLogger(__name__)

GRID_TOLERANCE = 1e-9
DEFAULT_TOLERANCE = 1e-6
MAX_ITERATIONS = 200_000
# Self-loop weight of the aperiodicity transform used by relative value iteration
APERIODICITY = 0.99
METHODS = ("policy-iteration", "relative-VI")
DISCRETIZATION_RULES = ("nearest",)
VANISHING_ALPHAS = (0.9, 0.99, 0.999)
VANISHING_GAP = 0.05
BOUNDARY_FRACTION = 0.1
BOUNDARY_LIMIT = 0.01


@dataclass(frozen=True, eq=False)
class MdpModel:
    q_levels: np.ndarray
    e_levels: np.ndarray
    q_step: float
    e_step: float
    arrival_pmf: np.ndarray
    harvest_pmf: np.ndarray
    rf: RateFunction
    cost: np.ndarray
    action_stride: int
    # arrival_kernel[r, i'] = P(min(r + X, top) = i'), harvest_kernel likewise on the energy grid
    arrival_kernel: np.ndarray
    harvest_kernel: np.ndarray
    # post_service[i, a]: data level left after transmitting energy level a from level i
    post_service: np.ndarray
    # feasible[j, a]: action a is allowed with energy level j
    feasible: np.ndarray

    @property
    def n_q(self) -> int:
        return len(self.q_levels)

    @property
    def n_e(self) -> int:
        return len(self.e_levels)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_q, self.n_e

    @property
    def n_states(self) -> int:
        return self.n_q * self.n_e

    def row_sum_error(self) -> float:
        """Largest deviation of any transition row sum from 1, over all states and actions."""
        err_q = np.abs(self.arrival_kernel.sum(axis=1) - 1.0).max()
        err_e = np.abs(self.harvest_kernel.sum(axis=1) - 1.0).max()
        return float((1.0 + err_q) * (1.0 + err_e) - 1.0)


@dataclass(frozen=True, eq=False)
class PolicyTable:
    """A solved policy on the grid together with its value function.

    For discounted solutions `values` is v_alpha. For average-cost solutions
    `gain` is set and `values` is the bias, pinned to 0 at the reference state.
    """

    q_levels: np.ndarray
    e_levels: np.ndarray
    q_step: float
    e_step: float
    actions: np.ndarray
    values: np.ndarray
    method: str
    alpha: Optional[float] = None
    gain: Optional[float] = None
    iterations: int = 0
    residuals: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def action_energy(self) -> np.ndarray:
        return self.e_levels[self.actions]


ValueFunction = PolicyTable


class Violation(NamedTuple):
    alpha: float
    kind: str
    q_level: float
    e_level: float
    amount: float


@dataclass(frozen=True)
class StructureReport:
    violations: Tuple[Violation, ...]
    vanishing_gaps: Dict[float, float]
    gaps_decreasing: bool

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame(list(self.violations), columns=list(Violation._fields))


def discretize(spec: DistributionSpec, step: float, upper: float) -> DiscretePmf:
    """Nearest-level discretization of spec on {0, step, ..., upper}; the top level takes the tail."""
    if not step > 0 or upper < 0:
        raise DomainError(f"need step > 0 and upper >= 0, got step={step}, upper={upper}")
    levels = np.arange(int(math.ceil(upper / step - GRID_TOLERANCE)) + 1) * step
    if spec.is_discrete:
        values, probs = spec.support()
        index = np.minimum(np.rint(values / step), len(levels) - 1).astype(int)
        mass = np.zeros(len(levels))
        np.add.at(mass, index, probs)
    else:
        midpoints = 0.5 * (levels[:-1] + levels[1:])
        cdf = np.asarray(spec.cdf(midpoints), dtype=float)
        mass = np.diff(np.concatenate(([0.0], cdf, [1.0])))
    mass = np.clip(mass, 0.0, None)
    mass /= mass.sum()
    keep = mass > 0
    return DiscretePmf(tuple(levels[keep]), tuple(mass[keep]))


def build_model(
    n_q: int,
    n_e: int,
    n_a: int,
    arrival: DistributionSpec,
    harvest: DistributionSpec,
    rf: RateFunction,
    q_step: float = 1.0,
    e_step: float = 1.0,
    discretization: Optional[str] = None,
    cost=None,
) -> MdpModel:
    """Build the quantized model with N_q data levels, N_e energy levels and N_a action levels.

    Arrival and harvest must be discrete with support on their grids unless
    `discretization` names a rule ("nearest"). The action levels are every
    ((N_e - 1) / (N_a - 1))-th energy level, plus T = e itself. `cost`
    defaults to q and may be a scalar or an (N_q, N_e) array.
    """
    if n_q < 1 or n_e < 1:
        raise ConfigError(f"grid sizes must be positive, got N_q={n_q}, N_e={n_e}", key="grid")
    if not (q_step > 0 and e_step > 0):
        raise ConfigError("grid steps must be positive", key="grid")
    stride = _action_stride(n_e, n_a)

    q_levels = np.arange(n_q) * q_step
    e_levels = np.arange(n_e) * e_step
    arrival_pmf = _increment_pmf(arrival, q_step, q_levels[-1], discretization, "arrival")
    harvest_pmf = _increment_pmf(harvest, e_step, e_levels[-1], discretization, "harvest")

    served = np.array([rf.evaluate(float(t)) for t in e_levels])
    remaining = np.maximum(q_levels[:, None] - served[None, :], 0.0)
    post_service = np.clip(np.rint(remaining / q_step).astype(int), 0, n_q - 1)

    levels = np.arange(n_e)
    feasible = (levels[None, :] <= levels[:, None]) & (
        (levels[None, :] % stride == 0) | (levels[None, :] == levels[:, None])
    )

    if cost is None:
        cost_grid = np.repeat(q_levels[:, None], n_e, axis=1).astype(float)
    else:
        cost_grid = np.broadcast_to(np.asarray(cost, dtype=float), (n_q, n_e)).copy()
    if np.any(cost_grid < 0) or not np.all(np.isfinite(cost_grid)):
        raise ConfigError("costs must be finite and nonnegative", key="cost")

    return MdpModel(
        q_levels=q_levels,
        e_levels=e_levels,
        q_step=float(q_step),
        e_step=float(e_step),
        arrival_pmf=arrival_pmf,
        harvest_pmf=harvest_pmf,
        rf=rf,
        cost=cost_grid,
        action_stride=stride,
        arrival_kernel=_shift_kernel(arrival_pmf, n_q),
        harvest_kernel=_shift_kernel(harvest_pmf, n_e),
        post_service=post_service,
        feasible=feasible,
    )


def build_model_from_scenario(cfg: ScenarioConfig, n_a: Optional[int] = None,
                              discretization: Optional[str] = None) -> MdpModel:
    """Grids from the scenario caps and quanta (steps default to 1).

    The data grid tops out at model_data_cap when the scenario sets one, so a
    scenario may simulate a larger (or unbounded) data buffer than it solves.
    """
    if cfg.fading is not None:
        raise ConfigError("the MDP models an unfaded link", key="fading")
    if cfg.sensing is not None:
        raise ConfigError("the MDP has no sensing cost", key="sensing")
    q_step = cfg.data_quantum or 1.0
    e_step = cfg.energy_quantum or 1.0
    data_top = cfg.model_data_cap if cfg.model_data_cap is not None else cfg.data_cap
    n_q = _level_count(data_top, q_step, "data_cap")
    n_e = _level_count(cfg.energy_cap, e_step, "energy_cap")
    return build_model(n_q, n_e, n_a or n_e, cfg.arrival, cfg.harvest, cfg.rf,
                       q_step, e_step, discretization)


def value_iterate(model: MdpModel, alpha: float, tol: float = DEFAULT_TOLERANCE,
                  max_iterations: int = MAX_ITERATIONS) -> PolicyTable:
    """Discounted value iteration from v_0 = 0.

    Stops when the sup-norm change drops below tol (1 - alpha) / (2 alpha),
    which puts the values within tol / 2 of the fixed point.
    """
    _check_alpha(alpha)
    stop = tol * (1.0 - alpha) / (2.0 * alpha)
    values = np.zeros(model.shape)
    residuals: List[float] = []
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        updated = _action_values(model, values, alpha).min(axis=2)
        change = float(np.max(np.abs(updated - values)))
        residuals.append(change)
        values = updated
        if change < stop:
            break
    else:
        logger.warning("value iteration hit %d sweeps at alpha=%g (last change %.3g)",
                       max_iterations, alpha, residuals[-1])
    actions = _extract(_action_values(model, values, alpha), tol)
    logger.info("value iteration, alpha=%g: %d sweeps", alpha, iteration)
    return _table(model, actions, values, "value-iteration", alpha=alpha,
                  iterations=iteration, residuals=tuple(residuals))


def discounted_policy_iterate(model: MdpModel, alpha: float, tol: float = DEFAULT_TOLERANCE,
                              max_iterations: int = 1_000) -> PolicyTable:
    """Discounted policy iteration with exact evaluation v = (I - alpha P)^-1 c."""
    _check_alpha(alpha)
    actions = greedy_grid_policy(model)
    identity = sparse.identity(model.n_states, format="csc")
    cost = model.cost.ravel()
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        transitions = transition_matrix(model, actions)
        values = spsolve((identity - alpha * transitions).tocsc(), cost).reshape(model.shape)
        qvalues = _action_values(model, values, alpha)
        improved = _improve(qvalues, actions, tol * (1.0 - alpha))
        if improved is None:
            break
        actions = improved
    else:
        logger.warning("discounted policy iteration hit %d rounds at alpha=%g", max_iterations, alpha)
    logger.info("discounted policy iteration, alpha=%g: %d rounds", alpha, iteration)
    return _table(model, _extract(qvalues, tol), values, "policy-iteration",
                  alpha=alpha, iterations=iteration)


def average_cost_solve(model: MdpModel, method: str = "policy-iteration", tol: float = DEFAULT_TOLERANCE,
                       reference: int = 0, max_iterations: Optional[int] = None) -> PolicyTable:
    """Minimize the long-run average cost.

    policy-iteration evaluates each policy exactly (bias pinned to 0 at
    `reference`) and switches an action only on strict improvement;
    relative-VI iterates on the aperiodic transform of the chain and stops
    when the gain bounds are closer than tol. Both extract the final policy
    with ties broken toward the smallest action.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}", key="method")
    if not 0 <= reference < model.n_states:
        raise DomainError(f"reference state {reference} outside the grid")
    if method == "policy-iteration":
        return _policy_iteration(model, tol, reference, max_iterations or 1_000)
    return _relative_value_iteration(model, tol, reference, max_iterations or MAX_ITERATIONS)


def greedy_grid_policy(model: MdpModel) -> np.ndarray:
    """Smallest action that empties the queue, else the largest feasible action."""
    drained = model.post_service == 0
    actions = np.empty(model.shape, dtype=int)
    for j in range(model.n_e):
        allowed = np.flatnonzero(model.feasible[j])
        hits = drained[:, allowed]
        actions[:, j] = np.where(hits.any(axis=1), allowed[np.argmax(hits, axis=1)], allowed[-1])
    return actions


def greedy_mismatches(model: MdpModel, table: PolicyTable) -> List[Tuple[int, int]]:
    """Grid states where the table's action differs from the Greedy grid policy."""
    rows, cols = np.nonzero(table.actions != greedy_grid_policy(model))
    return list(zip(rows.tolist(), cols.tolist()))


def transition_matrix(model: MdpModel, actions: np.ndarray) -> sparse.csr_matrix:
    """Sparse transition matrix of the stationary policy `actions`."""
    i, j = np.indices(model.shape)
    a = np.asarray(actions, dtype=int).ravel()
    i, j = i.ravel(), j.ravel()
    if a.shape != i.shape or np.any(a < 0) or np.any(a >= model.n_e) or not model.feasible[j, a].all():
        raise ContractViolation("policy has infeasible actions for this model")
    queue_rows = sparse.csr_matrix(model.arrival_kernel[model.post_service[i, a]])
    energy_rows = sparse.csr_matrix(model.harvest_kernel[j - a])
    spread_q = sparse.kron(sparse.identity(model.n_q), np.ones((1, model.n_e)), format="csr")
    spread_e = sparse.kron(np.ones((1, model.n_q)), sparse.identity(model.n_e), format="csr")
    return sparse.csr_matrix((queue_rows @ spread_q).multiply(energy_rows @ spread_e))


def stationary_distribution(transitions, tol: float = 1e-12, max_iterations: int = 1_000_000) -> np.ndarray:
    """Stationary pmf by powering the lazy chain (P + I) / 2 from the uniform start."""
    n = transitions.shape[0]
    lazy = 0.5 * (sparse.csr_matrix(transitions) + sparse.identity(n, format="csr"))
    forward = lazy.T.tocsr()
    pmf = np.full(n, 1.0 / n)
    for _ in range(max_iterations):
        updated = forward @ pmf
        if np.abs(updated - pmf).sum() < tol:
            pmf = updated
            break
        pmf = updated
    else:
        logger.warning("stationary distribution did not settle in %d steps", max_iterations)
    return pmf / pmf.sum()


def boundary_occupancy(model: MdpModel, table: PolicyTable, fraction: float = BOUNDARY_FRACTION) -> float:
    """Stationary probability that q sits in the top `fraction` of the data grid."""
    pmf = stationary_distribution(transition_matrix(model, table.actions)).reshape(model.shape)
    top = max(1, int(round(fraction * model.n_q)))
    occupancy = float(pmf[model.n_q - top:, :].sum())
    if occupancy >= BOUNDARY_LIMIT:
        logger.warning("%.2f%% of the stationary mass sits in the top %d data levels; "
                       "the clipped grid boundary is distorting this load", 100 * occupancy, top)
    return occupancy


def structure_checks(tables: Sequence[PolicyTable], gain: Optional[float] = None,
                     tol: float = DEFAULT_TOLERANCE) -> StructureReport:
    """Monotonicity of each discounted value function and the vanishing-discount gaps.

    Every v_alpha must be nondecreasing in q and nonincreasing in e. With the
    average-cost gain given, (1 - alpha) min v_alpha is compared with it and the
    gap at the largest alpha must stay within VANISHING_GAP.
    """
    violations: List[Violation] = []
    gaps: Dict[float, float] = {}
    for table in tables:
        if table.alpha is None:
            continue
        v = table.values
        slack = 2.0 * tol + 1e-9 * float(np.abs(v).max())
        dq = np.diff(v, axis=0)
        for i, j in zip(*np.nonzero(dq < -slack)):
            violations.append(Violation(table.alpha, "decreasing_in_q", float(table.q_levels[i + 1]),
                                        float(table.e_levels[j]), float(-dq[i, j])))
        de = np.diff(v, axis=1)
        for i, j in zip(*np.nonzero(de > slack)):
            violations.append(Violation(table.alpha, "increasing_in_e", float(table.q_levels[i]),
                                        float(table.e_levels[j + 1]), float(de[i, j])))
        if gain is not None:
            scaled = (1.0 - table.alpha) * float(v.min())
            gaps[table.alpha] = abs(scaled - gain) / gain if gain > 0 else abs(scaled)

    ordered = [gaps[a] for a in sorted(gaps)]
    decreasing = all(later <= earlier for earlier, later in zip(ordered, ordered[1:]))
    if gaps:
        alpha = max(gaps)
        if gaps[alpha] > VANISHING_GAP:
            violations.append(Violation(alpha, "vanishing_discount", math.nan, math.nan, gaps[alpha]))
        if not decreasing:
            logger.warning("vanishing-discount gaps are not decreasing: %s", gaps)
    return StructureReport(tuple(violations), gaps, decreasing)


def optimal_policy_for(cfg: ScenarioConfig, method: str = "policy-iteration") -> MdpTablePolicy:
    """Solve the average-cost MDP that matches a quantized scenario."""
    for key in ("data_quantum", "energy_quantum"):
        if getattr(cfg, key) is None:
            raise ConfigError("MDP_OPTIMAL needs a quantized scenario", key=key)
    model = build_model_from_scenario(cfg)
    table = average_cost_solve(model, method)
    boundary_occupancy(model, table)
    return MdpTablePolicy(table)


def policy_table_frame(table: PolicyTable) -> pd.DataFrame:
    i, j = np.indices(table.actions.shape)
    return pd.DataFrame({
        "q_level": table.q_levels[i.ravel()],
        "e_level": table.e_levels[j.ravel()],
        "action": table.action_energy.ravel(),
        "value": table.values.ravel(),
    })


def _policy_iteration(model: MdpModel, tol: float, reference: int, max_iterations: int) -> PolicyTable:
    actions = greedy_grid_policy(model)
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        gain, bias = _evaluate_average(model, actions, reference)
        qvalues = _action_values(model, bias, 1.0)
        improved = _improve(qvalues, actions, tol)
        if improved is None:
            break
        actions = improved
    else:
        logger.warning("policy iteration hit %d rounds", max_iterations)

    final = _extract(qvalues, tol)
    if not np.array_equal(final, actions):
        tied_gain, tied_bias = _evaluate_average(model, final, reference)
        if tied_gain <= gain + tol:
            gain, bias, actions = tied_gain, tied_bias, final
    logger.info("policy iteration: gain %.9g after %d rounds", gain, iteration)
    return _table(model, actions, bias, "policy-iteration", gain=gain, iterations=iteration)


def _relative_value_iteration(model: MdpModel, tol: float, reference: int, max_iterations: int) -> PolicyTable:
    tau = APERIODICITY
    values = np.zeros(model.shape)
    lower, upper = -math.inf, math.inf
    residuals: List[float] = []
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        updated = _action_values(model, values, tau).min(axis=2) + (1.0 - tau) * values
        difference = updated - values
        lower, upper = float(difference.min()), float(difference.max())
        residuals.append(upper - lower)
        values = updated - updated.flat[reference]
        if upper - lower < tol:
            break
    else:
        logger.warning("relative value iteration hit %d sweeps (span %.3g)", max_iterations, upper - lower)
    gain = 0.5 * (lower + upper)
    actions = _extract(_action_values(model, values, tau), tol)
    logger.info("relative value iteration: gain %.9g after %d sweeps", gain, iteration)
    return _table(model, actions, tau * values, "relative-VI", gain=gain,
                  iterations=iteration, residuals=tuple(residuals))


def _evaluate_average(model: MdpModel, actions: np.ndarray, reference: int) -> Tuple[float, np.ndarray]:
    """Solve g + h = c + P h with h[reference] = 0; the reference column carries g."""
    n = model.n_states
    system = (sparse.identity(n, format="csr") - transition_matrix(model, actions)).tolil()
    system[:, reference] = np.ones((n, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            solution = spsolve(system.tocsc(), model.cost.ravel())
        except MatrixRankWarning as exc:
            raise MultichainError("policy evaluation system is singular") from exc
    if not np.all(np.isfinite(solution)):
        raise MultichainError("policy evaluation produced non-finite values")
    gain = float(solution[reference])
    bias = solution.copy()
    bias[reference] = 0.0
    return gain, bias.reshape(model.shape)


def _action_values(model: MdpModel, values: np.ndarray, weight: float) -> np.ndarray:
    """cost(i, j) + weight * E[values(next)] for every (i, j, a); inf where a is infeasible."""
    expected = model.arrival_kernel @ values @ model.harvest_kernel.T
    n_e = model.n_e
    qvalues = np.full((model.n_q, n_e, n_e), np.inf)
    for a in range(n_e):
        qvalues[:, a:, a] = expected[model.post_service[:, a]][:, :n_e - a]
    qvalues[:, ~model.feasible] = np.inf
    return model.cost[:, :, None] + weight * qvalues


def _extract(qvalues: np.ndarray, tol: float) -> np.ndarray:
    """argmin over actions with near-ties resolved to the smallest action."""
    best = qvalues.min(axis=2)
    slack = 10.0 * tol + 1e-9 * np.abs(best)
    return np.argmax(qvalues <= (best + slack)[:, :, None], axis=2)


def _improve(qvalues: np.ndarray, actions: np.ndarray, tol: float) -> Optional[np.ndarray]:
    """Switch actions only where some action is strictly better; None if nothing changes."""
    current = np.take_along_axis(qvalues, actions[:, :, None], axis=2)[:, :, 0]
    best = qvalues.min(axis=2)
    better = best < current - (tol + 1e-9 * np.abs(current))
    if not better.any():
        return None
    return np.where(better, np.argmin(qvalues, axis=2), actions)


def _table(model: MdpModel, actions: np.ndarray, values: np.ndarray, method: str, **kwargs) -> PolicyTable:
    return PolicyTable(
        q_levels=model.q_levels,
        e_levels=model.e_levels,
        q_step=model.q_step,
        e_step=model.e_step,
        actions=np.asarray(actions, dtype=int),
        values=np.asarray(values, dtype=float),
        method=method,
        **kwargs,
    )


def _increment_pmf(spec: DistributionSpec, step: float, upper: float, rule: Optional[str], key: str) -> np.ndarray:
    """pmf over grid increments: pmf[d] = P(V = d * step)."""
    if rule is None:
        if not spec.is_discrete:
            raise ConfigError(f"{type(spec).__name__} is continuous; name a discretization rule", key=key)
        values, probs = spec.support()
        index = np.rint(values / step)
        if np.any(np.abs(values - index * step) > GRID_TOLERANCE * np.maximum(1.0, values)):
            raise ConfigError(f"support is not on the grid with step {step}", key=key)
    elif rule in DISCRETIZATION_RULES:
        values, probs = discretize(spec, step, upper).support()
        index = np.rint(values / step)
    else:
        raise ConfigError(f"unknown discretization rule {rule!r}", key="discretization")
    pmf = np.zeros(int(index.max()) + 1)
    np.add.at(pmf, index.astype(int), probs)
    return pmf


def _shift_kernel(pmf: np.ndarray, n: int) -> np.ndarray:
    kernel = np.zeros((n, n))
    rows = np.arange(n)
    for d, p in enumerate(pmf):
        if p > 0:
            kernel[rows, np.minimum(rows + d, n - 1)] += p
    return kernel


def _action_stride(n_e: int, n_a: int) -> int:
    if not 1 <= n_a <= n_e:
        raise ConfigError(f"need 1 <= N_a <= N_e, got N_a={n_a}, N_e={n_e}", key="n_a")
    if n_a == 1:
        return n_e
    if (n_e - 1) % (n_a - 1):
        raise ConfigError(f"N_a - 1 must divide N_e - 1 (got N_a={n_a}, N_e={n_e})", key="n_a")
    return (n_e - 1) // (n_a - 1)


def _level_count(cap: float, step: float, key: str) -> int:
    if not math.isfinite(cap):
        raise ConfigError("the MDP needs a finite buffer", key=key)
    count = cap / step
    if abs(count - round(count)) > GRID_TOLERANCE * max(1.0, count):
        raise ConfigError(f"cap {cap} is not a multiple of the grid step {step}", key=key)
    return int(round(count)) + 1


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise DomainError(f"discount factor must lie in (0, 1), got {alpha}")
