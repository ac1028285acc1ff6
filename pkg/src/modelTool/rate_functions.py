import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from scipy.optimize import bisect

from src.misc.errors import ConfigError, DomainError

# exp() overflows a double past this argument
_MAX_EXP_ARG = 709.0


class RateFunction(ABC):
    """Abstract bits-per-slot transmission function g with inverse f = g^-1.

    Every family satisfies g(0) = 0 and is nondecreasing and concave on [0, inf).
    """

    @abstractmethod
    def evaluate(self, x: float) -> float:
        """Return g(x) for x >= 0 (no domain check, used in the slot loop)."""
        raise NotImplementedError()

    @abstractmethod
    def inverse(self, r: float) -> float:
        """Return f(r), the energy needed to serve r bits; inf on overflow."""
        raise NotImplementedError()

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        raise NotImplementedError()

    @property
    def is_linear(self) -> bool:
        return False

    def __call__(self, x: float) -> float:
        return self.evaluate(x)


@dataclass(frozen=True)
class Linear(RateFunction):
    gamma: float

    def __post_init__(self) -> None:
        _check_coefficient(self.gamma, "gamma")

    def evaluate(self, x: float) -> float:
        return self.gamma * x

    def inverse(self, r: float) -> float:
        return r / self.gamma

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "linear", "coefficient": self.gamma}

    @property
    def is_linear(self) -> bool:
        return True

    def __str__(self) -> str:
        return f"linear({self.gamma:g})"


@dataclass(frozen=True)
class LogE(RateFunction):
    """log(1 + beta*x), natural base."""

    beta: float

    def __post_init__(self) -> None:
        _check_coefficient(self.beta, "beta")

    def evaluate(self, x: float) -> float:
        return math.log1p(self.beta * x)

    def inverse(self, r: float) -> float:
        if r > _MAX_EXP_ARG:
            return math.inf
        return math.expm1(r) / self.beta

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "log_e", "coefficient": self.beta}

    def __str__(self) -> str:
        return f"log_e({self.beta:g})"


@dataclass(frozen=True)
class Log2(RateFunction):
    """log2(1 + beta*x)."""

    beta: float

    def __post_init__(self) -> None:
        _check_coefficient(self.beta, "beta")

    def evaluate(self, x: float) -> float:
        return math.log1p(self.beta * x) / math.log(2.0)

    def inverse(self, r: float) -> float:
        arg = r * math.log(2.0)
        if arg > _MAX_EXP_ARG:
            return math.inf
        return math.expm1(arg) / self.beta

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "log2", "coefficient": self.beta}

    def __str__(self) -> str:
        return f"log2({self.beta:g})"


@dataclass(frozen=True)
class ShannonHalfLog(RateFunction):
    """(1/2) * log(1 + beta*x), the AWGN capacity form."""

    beta: float

    def __post_init__(self) -> None:
        _check_coefficient(self.beta, "beta")

    def evaluate(self, x: float) -> float:
        return 0.5 * math.log1p(self.beta * x)

    def inverse(self, r: float) -> float:
        if 2.0 * r > _MAX_EXP_ARG:
            return math.inf
        return math.expm1(2.0 * r) / self.beta

    def to_dict(self) -> Dict[str, Any]:
        return {"family": "shannon_half_log", "coefficient": self.beta}

    def __str__(self) -> str:
        return f"shannon_half_log({self.beta:g})"


_FAMILIES = {
    "linear": Linear,
    "log_e": LogE,
    "log2": Log2,
    "shannon_half_log": ShannonHalfLog,
}


def rate_function_from_dict(data: Dict[str, Any]) -> RateFunction:
    family = data.get("family")
    if family not in _FAMILIES:
        raise ConfigError(f"unknown rate function family {family!r}", key="rate_function.family")
    unknown = set(data) - {"family", "coefficient"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", key="rate_function")
    try:
        return _FAMILIES[family](float(data.get("coefficient", 1.0)))
    except DomainError as exc:
        raise ConfigError(str(exc), key="rate_function.coefficient") from exc


def g_eval(rf: RateFunction, x: float) -> float:
    """Bits served by spending energy x in one slot."""
    if x < 0:
        raise DomainError(f"rate function argument must be nonnegative, got {x}")
    return rf.evaluate(x)


def g_inverse(rf: RateFunction, r: float) -> float:
    """Energy needed to serve r bits in one slot."""
    if r < 0:
        raise DomainError(f"rate must be nonnegative, got {r}")
    t = rf.inverse(r)
    if math.isinf(t):
        raise DomainError(f"rate {r} lies outside the representable range of {rf}")
    return t


def waterfill_level(fading, budget: float) -> float:
    """Water level h0 with sum_h p(h) * (1/h0 - 1/h)^+ = budget.

    Zero-gain states never receive power. Bisection runs on the water level
    w = 1/h0, where the expected power is continuous and increasing.
    """
    values, probs = _positive_support(fading)
    if budget <= 0:
        raise DomainError(f"power budget must be positive, got {budget}")

    inv_gain = 1.0 / values

    def excess_power(w: float) -> float:
        return float(np.sum(probs * np.maximum(w - inv_gain, 0.0))) - budget

    lower = float(inv_gain.min())
    upper = float(inv_gain.max()) + budget / float(probs.sum())
    w = bisect(excess_power, lower, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return 1.0 / w


def waterfill_allocation(fading, h0: float) -> Dict[float, float]:
    """Per-state transmit energy (1/h0 - 1/h)^+; zero-gain states get 0."""
    values, probs = fading.support()
    return {float(h): (max(1.0 / h0 - 1.0 / h, 0.0) if h > 0 else 0.0) for h in values}


def waterfill_rate(fading, h0: float, rf: RateFunction) -> float:
    """Average rate sum_h p(h) g(h T(h)) achieved by the water-filling allocation."""
    allocation = waterfill_allocation(fading, h0)
    values, probs = fading.support()
    return float(sum(p * rf.evaluate(h * allocation[float(h)]) for h, p in zip(values, probs)))


def _positive_support(fading):
    values, probs = fading.support()
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    mask = (values > 0) & (probs > 0)
    if not mask.any():
        raise DomainError("fading distribution has no strictly positive gain")
    return values[mask], probs[mask]


def _check_coefficient(value: float, name: str) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value}")
