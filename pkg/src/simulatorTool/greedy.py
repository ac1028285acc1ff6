from dataclasses import dataclass

from src.misc.errors import DomainError
from src.simulatorTool.energy_policy import DecisionContext, EnergyPolicy


@dataclass(frozen=True)
class Greedy(EnergyPolicy):
    """T = min(e, f(q) / h): exactly the energy that empties the queue.

    With h = 1 this is min(e, f(q)); a zero-gain slot transmits nothing.
    """

    name = "GREEDY"

    def decide(self, ctx: DecisionContext) -> float:
        if ctx.q <= 0 or ctx.h <= 0:
            return 0.0
        return min(ctx.e, ctx.rf.inverse(ctx.q) / ctx.h)

    def parameters(self):
        return {}


@dataclass(frozen=True)
class Unbuffered(EnergyPolicy):
    """Spend what was harvested: T_k = Y_{k-1}, the last harvest already in the buffer."""

    name = "UNBUFFERED"

    def decide(self, ctx: DecisionContext) -> float:
        return min(ctx.e, ctx.y_prev)

    def parameters(self):
        return {}


@dataclass(frozen=True)
class ConstantPower(EnergyPolicy):
    """T = min(e, c)."""

    c_power: float
    name = "CONST_POWER"

    def __post_init__(self) -> None:
        if self.c_power < 0:
            raise DomainError(f"constant power must be nonnegative, got {self.c_power}")

    def decide(self, ctx: DecisionContext) -> float:
        return min(ctx.e, self.c_power)

    def parameters(self):
        return {"c_power": self.c_power}
