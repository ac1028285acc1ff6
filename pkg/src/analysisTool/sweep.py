import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.analysisTool.mdp import optimal_policy_for
from src.misc.errors import ConfigError
from src.simulatorTool.energy_policy import EnergyPolicy
from src.simulatorTool.greedy import ConstantPower
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.simulator import MetricsReport, ScenarioConfig, run

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [
    "scenario_id", "figure_tag", "policy", "rate_function", "ex_mean", "ey_mean",
    "replication", "mean_queue", "ci_half_width", "slope", "verdict", "mean_waste",
    "drop_fraction", "sensing_outage_fraction", "seed",
]
AGGREGATE = "all"
FAILED = "FAILED"

SENSING_COLUMNS = [
    "c", "sensing_mean", "frontier", "energy_feasible", "rate_at_c", "predicted_feasible",
    "sensing_outage_fraction", "mean_queue", "ci_half_width", "verdict",
]


def sweep(template: ScenarioConfig, policies: Sequence[EnergyPolicy], loads: Sequence[float],
          jobs: int = 1) -> pd.DataFrame:
    """Run every (policy, E[X]) cell and tabulate one row per replication plus one aggregate row.

    All cells share the template seed, so policies see the same X, Y, Z and h
    draws (common random numbers). Rows are ordered by policy, load and
    replication whatever the number of worker processes. A cell that raises
    is logged and reported with verdict FAILED.
    """
    loads = [float(x) for x in loads]
    if not loads or any(b <= a for a, b in zip(loads, loads[1:])):
        raise ConfigError("the load grid must be nonempty and strictly increasing", key="sweep")
    if jobs < 1:
        raise ConfigError("jobs must be at least 1", key="jobs")

    cells = [(template.with_policy(policy), load) for policy in policies for load in loads]
    logger.info("sweep %s: %d cells on %d worker(s)", template.scenario_id, len(cells), jobs)

    if jobs == 1:
        outcomes = [_run_cell(cfg, load) for cfg, load in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, *zip(*cells)))

    rows: List[Dict[str, Any]] = []
    for (cfg, load), outcome in zip(cells, outcomes):
        if isinstance(outcome, MetricsReport):
            rows.extend(report_rows(cfg, outcome))
        else:
            rows.append(_failed_row(cfg, load))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def report_rows(cfg: ScenarioConfig, report: MetricsReport) -> List[Dict[str, Any]]:
    """CSV rows of one cell: its replications, then the aggregate."""
    base = {
        "scenario_id": cfg.scenario_id,
        "figure_tag": cfg.figure_tag,
        "policy": report.policy,
        "rate_function": str(cfg.rf),
        "ex_mean": report.ex_mean,
        "ey_mean": report.ey_mean,
        "seed": cfg.seed,
    }
    rows = [
        {
            **base,
            "replication": rep.replication,
            "mean_queue": rep.mean_queue,
            "ci_half_width": math.nan,
            "slope": rep.slope,
            "verdict": str(rep.verdict),
            "mean_waste": rep.mean_waste,
            "drop_fraction": rep.drop_fraction,
            "sensing_outage_fraction": rep.sensing_outage_fraction,
        }
        for rep in report.replications
    ]
    rows.append({
        **base,
        "replication": AGGREGATE,
        "mean_queue": report.mean_queue,
        "ci_half_width": report.ci_half_width,
        "slope": report.slope,
        "verdict": str(report.stability_verdict),
        "mean_waste": report.mean_waste,
        "drop_fraction": report.drop_fraction,
        "sensing_outage_fraction": report.sensing_outage_fraction,
    })
    return rows


def aggregate_rows(frame: pd.DataFrame) -> pd.DataFrame:
    return frame[frame["replication"].astype(str) == AGGREGATE].reset_index(drop=True)


def sensing_sweep(template: ScenarioConfig, c_values: Sequence[float], jobs: int = 1) -> pd.DataFrame:
    """Constant-power runs with a fixed sensing cost.

    Next to each empirical outage fraction it reports the energy frontier
    E[Y] - eps - E[Z] (sensing never starves once c is below it) and g(c).
    A run is predicted feasible with a stable queue when c is below the
    frontier and E[X] < g(c).
    """
    if template.sensing is None:
        raise ConfigError("a sensing sweep needs a sensing cost distribution", key="sensing")
    sensing_mean = template.sensing.mean()
    frontier = template.ey - template.epsilon - sensing_mean
    cells = [template.with_policy(ConstantPower(float(c))) for c in c_values]
    if jobs == 1:
        outcomes = [_run_cell(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, cells))

    rows = []
    for c, outcome in zip(c_values, outcomes):
        failed = not isinstance(outcome, MetricsReport)
        rate = template.rf.evaluate(float(c))
        rows.append({
            "c": float(c),
            "sensing_mean": sensing_mean,
            "frontier": frontier,
            "energy_feasible": bool(c < frontier),
            "rate_at_c": rate,
            "predicted_feasible": bool(c < frontier and template.ex < rate),
            "sensing_outage_fraction": np.nan if failed else outcome.sensing_outage_fraction,
            "mean_queue": np.nan if failed else outcome.mean_queue,
            "ci_half_width": np.nan if failed else outcome.ci_half_width,
            "verdict": FAILED if failed else str(outcome.stability_verdict),
        })
    return pd.DataFrame(rows, columns=SENSING_COLUMNS)


def _run_cell(cfg: ScenarioConfig, load: Optional[float] = None):
    try:
        if load is not None:
            cfg = cfg.with_arrival_mean(load)
        if isinstance(cfg.policy, MdpTablePolicy) and cfg.policy.table is None:
            cfg = cfg.with_policy(optimal_policy_for(cfg))
        report = run(cfg)
    except Exception as exc:
        logger.error("cell %s / E[X]=%s failed: %s", cfg.policy, load, exc)
        return exc
    logger.info("cell %s / E[X]=%g: mean queue %.4g (%s)",
                cfg.policy, cfg.ex, report.mean_queue, report.stability_verdict)
    return report


def _failed_row(cfg: ScenarioConfig, load: float) -> Dict[str, Any]:
    return {
        "scenario_id": cfg.scenario_id,
        "figure_tag": cfg.figure_tag,
        "policy": str(cfg.policy),
        "rate_function": str(cfg.rf),
        "ex_mean": load,
        "ey_mean": cfg.ey,
        "replication": AGGREGATE,
        "mean_queue": math.nan,
        "ci_half_width": math.nan,
        "slope": math.nan,
        "verdict": FAILED,
        "mean_waste": math.nan,
        "drop_fraction": math.nan,
        "sensing_outage_fraction": math.nan,
        "seed": cfg.seed,
    }
