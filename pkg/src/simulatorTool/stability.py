from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np
from scipy.stats import linregress

# Growth-rate thresholds, as fractions of E[X]
THETA_UNSTABLE = 0.05
THETA_STABLE = 0.005
MIN_TRACE_LENGTH = 100_000
PLATEAU_WINDOWS = 10
PLATEAU_RELATIVE = 0.25


class Verdict(str, Enum):
    STABLE = "STABLE"
    UNSTABLE = "UNSTABLE"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class StabilityResult:
    verdict: Verdict
    slope: float
    early_mean: float
    late_mean: float


def classify_stability(trace: Union[Sequence[float], np.ndarray], arrival_mean: float) -> StabilityResult:
    """Classify a queue trace by the drift of its last half.

    UNSTABLE if the fitted slope exceeds THETA_UNSTABLE * E[X]; STABLE if it
    stays below THETA_STABLE * E[X] and the windowed means of the last half
    plateau; INCONCLUSIVE otherwise, and always for traces shorter than
    MIN_TRACE_LENGTH slots.
    """
    q = np.asarray(trace, dtype=float)
    if len(q) < 2 * PLATEAU_WINDOWS:
        return StabilityResult(Verdict.INCONCLUSIVE, 0.0, float(q.mean()) if len(q) else 0.0,
                               float(q.mean()) if len(q) else 0.0)

    tail = q[len(q) // 2:]
    slope = float(linregress(np.arange(len(tail), dtype=float), tail).slope)

    window_means = np.array([w.mean() for w in np.array_split(tail, PLATEAU_WINDOWS)])
    half = PLATEAU_WINDOWS // 2
    early, late = float(window_means[:half].mean()), float(window_means[half:].mean())
    noise = float(window_means.std(ddof=1)) * np.sqrt(2.0 / half)
    plateau = abs(late - early) <= PLATEAU_RELATIVE * abs(float(tail.mean())) + 2.0 * noise + 1e-12

    scale = arrival_mean if arrival_mean > 0 else 1.0
    if slope > THETA_UNSTABLE * scale:
        verdict = Verdict.UNSTABLE
    elif slope < THETA_STABLE * scale and plateau:
        verdict = Verdict.STABLE
    else:
        verdict = Verdict.INCONCLUSIVE
    if len(q) < MIN_TRACE_LENGTH:
        verdict = Verdict.INCONCLUSIVE
    return StabilityResult(verdict, slope, early, late)
