import logging
import math
from dataclasses import dataclass

import numpy as np

from src.misc.errors import ConfigError, DomainError
from src.simulatorTool.node import NodeState
from src.simulatorTool.simulator import ScenarioConfig, Simulator
from src.simulatorTool.throughput_optimal import ThroughputOptimal

logger = logging.getLogger(__name__)

MIN_RETURNS = 30


@dataclass(frozen=True)
class HittingTimeReport:
    """Sample moments of the return time tau to (q, e) = (0, cap)."""

    returns: int
    mean_tau: float
    mean_tau_sq: float
    se_tau: float
    se_tau_sq: float
    horizon: int
    inconclusive: bool

    def as_dict(self) -> dict:
        return {
            "returns": self.returns,
            "mean_tau": self.mean_tau,
            "mean_tau_sq": self.mean_tau_sq,
            "se_tau": self.se_tau,
            "se_tau_sq": self.se_tau_sq,
            "horizon": self.horizon,
            "inconclusive": self.inconclusive,
        }


def hitting_time_stats(cfg: ScenarioConfig, tolerance: float = 1e-9, replication: int = 0,
                       min_returns: int = MIN_RETURNS) -> HittingTimeReport:
    """Run one replication from (0, cap) and collect successive return times to it.

    A slot counts as a visit when q <= tolerance and e >= cap - tolerance.
    The moment bounds these estimates check hold for the TO policy only.
    """
    if not isinstance(cfg.policy, ThroughputOptimal):
        raise DomainError(f"hitting-time moments are defined for TO, not {cfg.policy}")
    if not math.isfinite(cfg.energy_cap):
        raise ConfigError("hitting times need a finite energy buffer", key="energy_cap")
    q, e = Simulator().traces(cfg, replication, NodeState(q=0.0, e=cfg.energy_cap))
    visits = np.flatnonzero((q <= tolerance) & (e >= cfg.energy_cap - tolerance))
    taus = np.diff(visits).astype(float)

    returns = len(taus)
    if returns == 0:
        logger.warning("no return to (0, %g) within %d slots", cfg.energy_cap, cfg.horizon)
        return HittingTimeReport(0, math.nan, math.nan, math.nan, math.nan, cfg.horizon, True)

    squares = taus ** 2
    spread = returns > 1
    report = HittingTimeReport(
        returns=returns,
        mean_tau=float(taus.mean()),
        mean_tau_sq=float(squares.mean()),
        se_tau=float(taus.std(ddof=1) / math.sqrt(returns)) if spread else math.nan,
        se_tau_sq=float(squares.std(ddof=1) / math.sqrt(returns)) if spread else math.nan,
        horizon=cfg.horizon,
        inconclusive=returns < min_returns,
    )
    if report.inconclusive:
        logger.warning("only %d returns observed (need %d): INCONCLUSIVE", returns, min_returns)
    return report
