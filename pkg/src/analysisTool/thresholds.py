import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import pandas as pd

from src.modelTool.distributions import expected_g
from src.modelTool.rate_functions import g_eval, waterfill_level, waterfill_rate
from src.simulatorTool.simulator import ScenarioConfig

logger = logging.getLogger(__name__)

JENSEN_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ThresholdReport:
    """Stability boundaries of a scenario, all in bits/slot.

    g_of_EY bounds every policy (and is what TO reaches); to_boundary is the
    TO boundary g(E[Y] - eps) at the scenario's eps; E_g_of_Y is the Greedy and
    unbuffered boundary. The fading fields are None for unfaded scenarios and
    fading_to_linear_boundary is only reported for linear g.
    """

    g_of_EY: float
    to_boundary: float
    E_g_of_Y: float
    E_g_of_hY: Optional[float] = None
    E_g_of_hEY: Optional[float] = None
    fading_to_linear_boundary: Optional[float] = None
    wf_level: Optional[float] = None
    wf_boundary: Optional[float] = None
    linear: bool = False
    degenerate_harvest: bool = False

    def jensen_holds(self) -> bool:
        """E[g(Y)] <= g(E[Y]); equality for linear g or constant Y, strict otherwise."""
        gap = self.g_of_EY - self.E_g_of_Y
        slack = JENSEN_TOLERANCE * max(1.0, abs(self.g_of_EY))
        if self.linear or self.degenerate_harvest:
            return abs(gap) <= slack
        return gap > 0

    def as_frame(self) -> pd.DataFrame:
        rows = [(key, value) for key, value in asdict(self).items()
                if value is not None and not isinstance(value, bool)]
        return pd.DataFrame(rows, columns=["key", "value"])


def thresholds(cfg: ScenarioConfig) -> ThresholdReport:
    rf = cfg.rf
    harvest = cfg.harvest
    ey = harvest.mean()
    budget = max(ey - cfg.epsilon, 0.0)
    degenerate = harvest.is_discrete and int((harvest.support()[1] > 0).sum()) == 1

    fading_fields = {}
    if cfg.fading is not None:
        gains, probs = cfg.fading.support()
        fading_fields["E_g_of_hY"] = expected_g(harvest, rf, cfg.fading)
        fading_fields["E_g_of_hEY"] = float(sum(
            p * g_eval(rf, float(h) * ey) for h, p in zip(gains, probs) if p > 0
        ))
        if rf.is_linear:
            h_max = float(gains[probs > 0].max())
            fading_fields["fading_to_linear_boundary"] = rf.evaluate(h_max * ey)
        h0 = waterfill_level(cfg.fading, budget)
        fading_fields["wf_level"] = h0
        fading_fields["wf_boundary"] = waterfill_rate(cfg.fading, h0, rf)

    report = ThresholdReport(
        g_of_EY=g_eval(rf, ey),
        to_boundary=g_eval(rf, budget),
        E_g_of_Y=expected_g(harvest, rf),
        linear=rf.is_linear,
        degenerate_harvest=degenerate,
        **fading_fields,
    )
    if not report.jensen_holds():
        logger.warning("Jensen ordering fails for %s: E[g(Y)] = %.6g, g(E[Y]) = %.6g",
                       cfg.scenario_id, report.E_g_of_Y, report.g_of_EY)
    if not math.isfinite(report.E_g_of_Y):
        logger.warning("E[g(Y)] is not finite for %s", cfg.scenario_id)
    logger.info("thresholds for %s: g(E[Y]) = %.4f, E[g(Y)] = %.4f",
                cfg.scenario_id, report.g_of_EY, report.E_g_of_Y)
    return report
