from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from src.misc.errors import ConfigError, ContractViolation
from src.modelTool.distributions import DiscretePmf, DistributionSpec
from src.modelTool.rate_functions import RateFunction, waterfill_level
from src.modelTool.streams import Process, SampleStream, substream_id
from src.simulatorTool.energy_policy import DecisionContext, EnergyPolicy, slot_waste
from src.simulatorTool.node import FEASIBILITY_SLACK, BufferCaps, NodeState, advance
from src.simulatorTool.stability import Verdict, classify_stability

logger = logging.getLogger(__name__)

DEFAULT_EPSILON_FRACTION = 0.01
CONFIDENCE = 0.95
# Variates are drawn in blocks of this size; part of the reproducibility contract
BLOCK = 65_536

PATH_COLUMNS = ["k", "q", "e", "h", "T", "served", "x", "y", "z", "outage",
                "dropped", "energy_overflow", "waste"]


@dataclass(frozen=True)
class ScenarioConfig:
    arrival: DistributionSpec
    harvest: DistributionSpec
    rf: RateFunction
    policy: EnergyPolicy
    sensing: Optional[DistributionSpec] = None
    fading: Optional[DiscretePmf] = None
    energy_cap: float = math.inf
    data_cap: float = math.inf
    horizon: int = 100_000
    warmup: Optional[int] = None
    replications: int = 10
    seed: int = 1
    epsilon: Optional[float] = None
    data_quantum: Optional[float] = None
    energy_quantum: Optional[float] = None
    model_data_cap: Optional[float] = None
    scenario_id: str = "scenario"
    figure_tag: str = ""

    def __post_init__(self) -> None:
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 10)
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", DEFAULT_EPSILON_FRACTION * self.harvest.mean())
        if self.horizon < 1 or not (0 <= self.warmup < self.horizon):
            raise ConfigError(f"need 0 <= warmup < horizon, got warmup={self.warmup}, horizon={self.horizon}",
                              key="warmup")
        if not (self.energy_cap > 0 and self.data_cap > 0):
            raise ConfigError("buffer caps must be positive", key="energy_cap")
        if self.replications < 1:
            raise ConfigError("need at least one replication", key="replications")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative", key="seed")
        if self.model_data_cap is not None and not (0 < self.model_data_cap < math.inf):
            raise ConfigError("the model data grid needs a finite positive top", key="model_data_cap")
        if self.fading is not None and not isinstance(self.fading, DiscretePmf):
            raise ConfigError("fading must be a discrete pmf", key="fading")
        if self.policy.requires_fading and self.fading is None:
            raise ConfigError(f"{self.policy.name} needs a fading distribution", key="fading")
        for name in ("data_quantum", "energy_quantum"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError("grid steps must be positive", key=name)

    @property
    def caps(self) -> BufferCaps:
        return BufferCaps(self.data_cap, self.energy_cap, self.data_quantum, self.energy_quantum)

    @property
    def ey(self) -> float:
        return self.harvest.mean()

    @property
    def ex(self) -> float:
        return self.arrival.mean()

    def with_policy(self, policy: EnergyPolicy) -> ScenarioConfig:
        return replace(self, policy=policy)

    def with_arrival_mean(self, mean: float) -> ScenarioConfig:
        return replace(self, arrival=self.arrival.rescaled(mean))


@dataclass(frozen=True)
class ReplicationResult:
    replication: int
    mean_queue: float
    slope: float
    verdict: Verdict
    mean_waste: float
    drop_fraction: float
    sensing_outage_fraction: float


@dataclass(frozen=True)
class MetricsReport:
    policy: str
    ex_mean: float
    ey_mean: float
    mean_queue: float
    ci_half_width: float
    mean_waste: float
    drop_fraction: float
    sensing_outage_fraction: float
    stability_verdict: Verdict
    slope: float
    replications: Tuple[ReplicationResult, ...] = field(default=())


@dataclass
class _ReplicationRun:
    q_trace: np.ndarray
    result: ReplicationResult
    final_state: NodeState
    rows: Optional[List[tuple]] = None
    e_trace: Optional[np.ndarray] = None


class Simulator:
    """Slotted-time kernel for one node: observe, pay Z, decide T, serve g(hT), add X, add Y.

    A slot whose stored energy cannot cover Z is a sensing outage: no packet
    arrives and the policy is not asked to transmit.
    """

    def start(self, cfg: ScenarioConfig) -> MetricsReport:
        self._initialize(cfg)
        runs = []
        trace_sum = np.zeros(cfg.horizon)
        for replication in range(cfg.replications):
            run = self._run_replication(replication)
            trace_sum += run.q_trace
            runs.append(run.result)
            run.q_trace = None
        return self._calculate_metrics(runs, trace_sum / cfg.replications)

    def path(self, cfg: ScenarioConfig, replication: int = 0,
             initial: Optional[NodeState] = None) -> pd.DataFrame:
        self._initialize(cfg)
        run = self._run_replication(replication, initial, record=True)
        return pd.DataFrame(run.rows, columns=PATH_COLUMNS)

    def traces(self, cfg: ScenarioConfig, replication: int = 0,
               initial: Optional[NodeState] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(q_k, e_k) at the start of every slot of one replication."""
        self._initialize(cfg)
        run = self._run_replication(replication, initial, trace_energy=True)
        return run.q_trace, run.e_trace

    def _initialize(self, cfg: ScenarioConfig) -> None:
        self.cfg = cfg
        self.caps = cfg.caps
        ey = cfg.ey
        h0 = math.inf
        h_max, p_h_max = 1.0, 1.0
        if cfg.fading is not None:
            values, probs = cfg.fading.support()
            positive = probs > 0
            h_max = float(values[positive].max())
            p_h_max = float(probs[values == h_max].sum())
            budget = cfg.policy.power_budget(ey)
            if budget is not None:
                h0 = waterfill_level(cfg.fading, budget)
        self.context_constants = dict(ey=ey, h0=h0, h_max=h_max, p_h_max=p_h_max, rf=cfg.rf)
        if cfg.ex >= cfg.rf.evaluate(max(ey - cfg.epsilon, 0.0)):
            logger.info("E[X] = %.4g is at or above g(E[Y] - eps) for %s: overload run", cfg.ex, cfg.policy)

    def _open_streams(self, replication: int) -> Dict[Process, SampleStream]:
        cfg = self.cfg
        sources = {Process.ARRIVAL: cfg.arrival, Process.HARVEST: cfg.harvest,
                   Process.SENSING: cfg.sensing, Process.FADING: cfg.fading}
        return {
            process: SampleStream(spec, cfg.seed, substream_id(process, replication))
            for process, spec in sources.items() if spec is not None
        }

    def _run_replication(self, replication: int, initial: Optional[NodeState] = None,
                         record: bool = False, trace_energy: bool = False) -> _ReplicationRun:
        cfg = self.cfg
        caps = self.caps
        rf = cfg.rf
        g = rf.evaluate
        decide = cfg.policy.decide
        streams = self._open_streams(replication)
        sensing = Process.SENSING in streams
        fading = Process.FADING in streams

        state = initial or NodeState()
        q, e = state.q, state.e
        y_prev = 0.0
        ctx = DecisionContext(q=q, e=e, **self.context_constants)

        horizon, warmup = cfg.horizon, cfg.warmup
        q_trace = np.empty(horizon)
        e_trace = np.empty(horizon) if trace_energy else None
        rows: Optional[List[tuple]] = [] if record else None
        waste_total = arrived = dropped_total = overflow_total = dropped_measured = 0.0
        outages = 0

        for start in range(0, horizon, BLOCK):
            n = min(BLOCK, horizon - start)
            xs = streams[Process.ARRIVAL].sample_block(n).tolist()
            ys = streams[Process.HARVEST].sample_block(n).tolist()
            zs = streams[Process.SENSING].sample_block(n).tolist() if sensing else None
            hs = streams[Process.FADING].sample_block(n).tolist() if fading else None
            for i in range(n):
                k = start + i
                q_trace[k] = q
                if e_trace is not None:
                    e_trace[k] = e
                h = hs[i] if fading else 1.0
                z_spent = 0.0
                outage = False
                e_start = e
                if sensing:
                    if e >= zs[i]:
                        z_spent = zs[i]
                        e -= z_spent
                    else:
                        outage = True

                if outage:
                    # no packet, no transmission
                    T = served = waste = x = 0.0
                else:
                    ctx.q, ctx.e, ctx.h, ctx.y_prev = q, e, h, y_prev
                    T = decide(ctx)
                    if T < 0.0 or T > e + FEASIBILITY_SLACK:
                        raise ContractViolation(f"{cfg.policy} chose T = {T} with e = {e} at slot {k}")
                    served = g(h * T)
                    if served > q:
                        served = q
                    waste = slot_waste(rf, q, h, T)
                    x = xs[i]
                y = ys[i]

                if rows is not None:
                    q_before = q
                q, e, dropped, overflow = advance(q, e, T, served, x, y, caps)
                y_prev = y
                dropped_total += dropped
                overflow_total += overflow

                if k >= warmup:
                    waste_total += waste
                    arrived += x
                    dropped_measured += dropped
                    outages += outage
                if rows is not None:
                    rows.append((k, q_before, e_start, h, T, served, x, y, z_spent, outage,
                                 dropped, overflow, waste))

        measured = horizon - warmup
        stability = classify_stability(q_trace, cfg.ex)
        result = ReplicationResult(
            replication=replication,
            mean_queue=float(q_trace[warmup:].mean()),
            slope=stability.slope,
            verdict=stability.verdict,
            mean_waste=waste_total / measured,
            drop_fraction=dropped_measured / arrived if arrived > 0 else 0.0,
            sensing_outage_fraction=outages / measured if sensing else 0.0,
        )
        final_state = NodeState(q=q, e=e, k=state.k + horizon,
                                dropped_bits=state.dropped_bits + dropped_total,
                                energy_overflow=state.energy_overflow + overflow_total)
        return _ReplicationRun(q_trace=q_trace, result=result, final_state=final_state, rows=rows,
                               e_trace=e_trace)

    def _calculate_metrics(self, runs: List[ReplicationResult], mean_trace: np.ndarray) -> MetricsReport:
        cfg = self.cfg
        queues = np.array([r.mean_queue for r in runs])
        ci = 0.0
        if len(runs) > 1:
            ci = float(norm.ppf(0.5 + CONFIDENCE / 2) * queues.std(ddof=1) / math.sqrt(len(runs)))
        stability = classify_stability(mean_trace, cfg.ex)
        return MetricsReport(
            policy=str(cfg.policy),
            ex_mean=cfg.ex,
            ey_mean=cfg.ey,
            mean_queue=float(queues.mean()),
            ci_half_width=ci,
            mean_waste=float(np.mean([r.mean_waste for r in runs])),
            drop_fraction=float(np.mean([r.drop_fraction for r in runs])),
            sensing_outage_fraction=float(np.mean([r.sensing_outage_fraction for r in runs])),
            stability_verdict=stability.verdict,
            slope=stability.slope,
            replications=tuple(runs),
        )


def run(cfg: ScenarioConfig) -> MetricsReport:
    return Simulator().start(cfg)


def simulate_path(cfg: ScenarioConfig, replication: int = 0,
                  initial: Optional[NodeState] = None) -> pd.DataFrame:
    """Per-slot path of one replication: the state at the start of slot k and what happened in it."""
    return Simulator().path(cfg, replication, initial)
