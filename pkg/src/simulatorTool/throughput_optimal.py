from dataclasses import dataclass

from src.misc.errors import DomainError
from src.simulatorTool.energy_policy import DecisionContext, EnergyPolicy

DEFAULT_OUTER = 0.99
DEFAULT_INNER = 0.001
DEFAULT_SURPLUS_WEIGHT = 0.1


@dataclass(frozen=True)
class ThroughputOptimal(EnergyPolicy):
    """TO: T = min(e, E[Y] - epsilon)."""

    epsilon: float
    name = "TO"

    def __post_init__(self) -> None:
        _check_epsilon(self.epsilon)

    def decide(self, ctx: DecisionContext) -> float:
        return min(ctx.e, max(ctx.ey - self.epsilon, 0.0))

    def parameters(self):
        return {"epsilon": self.epsilon}


@dataclass(frozen=True)
class UnfadedThroughputOptimal(ThroughputOptimal):
    """TO used on a fading channel without channel state information."""

    name = "UNFADED_TO"


@dataclass(frozen=True)
class ModifiedThroughputOptimal(EnergyPolicy):
    """MTO: min(f(q), e, outer * (E[Y] + inner * (e - c q)^+))."""

    c: float = DEFAULT_SURPLUS_WEIGHT
    outer: float = DEFAULT_OUTER
    inner: float = DEFAULT_INNER
    name = "MTO"

    def __post_init__(self) -> None:
        if self.c <= 0:
            raise DomainError(f"MTO constant c must be positive, got {self.c}")
        if self.outer <= 0 or self.inner < 0:
            raise DomainError("MTO coefficients must be positive")

    def decide(self, ctx: DecisionContext) -> float:
        boost = self.inner * max(ctx.e - self.c * ctx.q, 0.0)
        return min(ctx.rf.inverse(ctx.q), ctx.e, self.outer * (ctx.ey + boost))

    def parameters(self):
        return {"c": self.c, "outer": self.outer, "inner": self.inner}


@dataclass(frozen=True)
class FadingThroughputOptimalLinear(EnergyPolicy):
    """Fading TO for linear g: spend only in the best channel state h_max.

    The energy (E[Y] - epsilon) / P(h = h_max) keeps the average power at
    E[Y] - epsilon.
    """

    epsilon: float
    name = "FADING_TO_LINEAR"
    requires_fading = True

    def __post_init__(self) -> None:
        _check_epsilon(self.epsilon)

    def decide(self, ctx: DecisionContext) -> float:
        if ctx.h < ctx.h_max:
            return 0.0
        return min(ctx.e, max(ctx.ey - self.epsilon, 0.0) / ctx.p_h_max)

    def parameters(self):
        return {"epsilon": self.epsilon}


def _check_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
