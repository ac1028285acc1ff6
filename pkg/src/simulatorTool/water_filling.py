from dataclasses import dataclass
from typing import Optional

from src.misc.errors import DomainError
from src.simulatorTool.energy_policy import DecisionContext, EnergyPolicy
from src.simulatorTool.throughput_optimal import DEFAULT_INNER, DEFAULT_SURPLUS_WEIGHT


@dataclass(frozen=True)
class WaterFilling(EnergyPolicy):
    """WF: T(h) = (1/h0 - 1/h)^+ for the level h0 meeting E[T] = E[Y] - epsilon.

    Clipped to the stored energy.
    """

    epsilon: float
    name = "WF"
    requires_fading = True

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")

    def decide(self, ctx: DecisionContext) -> float:
        if ctx.h <= ctx.h0:
            return 0.0
        return min(ctx.e, 1.0 / ctx.h0 - 1.0 / ctx.h)

    def power_budget(self, ey: float) -> Optional[float]:
        return ey - self.epsilon

    def parameters(self):
        return {"epsilon": self.epsilon}


@dataclass(frozen=True)
class ModifiedWaterFilling(EnergyPolicy):
    """MWF: min(f(q), e, (1/h0 - 1/h + inner * (e - c q)^+)^+)."""

    epsilon: float
    c: float = DEFAULT_SURPLUS_WEIGHT
    inner: float = DEFAULT_INNER
    name = "MWF"
    requires_fading = True

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.c <= 0:
            raise DomainError(f"MWF constant c must be positive, got {self.c}")

    def decide(self, ctx: DecisionContext) -> float:
        if ctx.h <= 0:
            return 0.0
        level = 1.0 / ctx.h0 - 1.0 / ctx.h + self.inner * max(ctx.e - self.c * ctx.q, 0.0)
        return min(ctx.rf.inverse(ctx.q), ctx.e, max(level, 0.0))

    def power_budget(self, ey: float) -> Optional[float]:
        return ey - self.epsilon

    def parameters(self):
        return {"epsilon": self.epsilon, "c": self.c, "inner": self.inner}
