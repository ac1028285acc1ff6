import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional

from src.misc.errors import DomainError
from src.modelTool.rate_functions import Linear, RateFunction


@dataclass(slots=True)
class DecisionContext:
    """Observables a policy reads in one slot.

    The simulator keeps one context per run and overwrites q, e, h and y_prev
    every slot; the scenario constants (ey, h0, h_max, p_h_max, rf) stay fixed.
    """

    q: float
    e: float
    h: float = 1.0
    y_prev: float = 0.0
    ey: float = 1.0
    h0: float = math.inf
    h_max: float = 1.0
    p_h_max: float = 1.0
    rf: RateFunction = Linear(1.0)

    def validate(self) -> None:
        for name in ("q", "e", "h", "y_prev", "ey"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise DomainError(f"decision context field {name} must be finite and nonnegative, got {value}")


class EnergyPolicy(ABC):
    """Abstract energy-management rule: maps (q, e, h) to transmit energy T."""

    name: str = ""
    requires_fading: bool = False

    @abstractmethod
    def decide(self, ctx: DecisionContext) -> float:
        """Return T with 0 <= T <= ctx.e."""
        raise NotImplementedError()

    @abstractmethod
    def parameters(self) -> Dict[str, Any]:
        raise NotImplementedError()

    def power_budget(self, ey: float) -> Optional[float]:
        """Average power the water level is computed for, or None if unused."""
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, **self.parameters()}

    def __str__(self) -> str:
        return self.name


def decide(policy: EnergyPolicy, ctx: DecisionContext) -> float:
    ctx.validate()
    return policy.decide(ctx)


def wasted_energy(policy: EnergyPolicy, ctx: DecisionContext, T: float) -> float:
    """Energy spent beyond what serving min(q, g(hT)) bits required."""
    return slot_waste(ctx.rf, ctx.q, ctx.h, T)


def slot_waste(rf: RateFunction, q: float, h: float, T: float) -> float:
    if T <= 0:
        return 0.0
    if h <= 0:
        return T
    served = min(q, rf.evaluate(h * T))
    return max(0.0, T - rf.inverse(served) / h)
