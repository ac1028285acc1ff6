from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from src.misc.errors import ConfigError, DomainError
from src.simulatorTool.energy_policy import DecisionContext, EnergyPolicy

if TYPE_CHECKING:
    from src.analysisTool.mdp import PolicyTable

GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MdpTablePolicy(EnergyPolicy):
    """Looks the action up in a solved PolicyTable.

    The state must already lie on the table's grid; the simulator keeps it
    there when the scenario sets data_quantum/energy_quantum to the table steps.
    A queue above the top data level uses the top row, the table's own
    boundary rule.
    """

    table: Optional["PolicyTable"] = field(default=None, compare=False)
    name = "MDP_OPTIMAL"

    def decide(self, ctx: DecisionContext) -> float:
        if self.table is None:
            raise ConfigError("MDP_OPTIMAL has not been solved for this scenario", key="policy")
        i = _grid_index(ctx.q, self.table.q_step, len(self.table.q_levels), "q", clamp_top=True)
        j = _grid_index(ctx.e, self.table.e_step, len(self.table.e_levels), "e")
        return min(ctx.e, float(self.table.action_energy[i, j]))

    def parameters(self):
        return {}


def _grid_index(value: float, step: float, count: int, label: str, clamp_top: bool = False) -> int:
    if step <= 0:
        index = 0
    else:
        index = int(round(value / step))
    if abs(value - index * step) > GRID_TOLERANCE * max(1.0, value):
        raise DomainError(f"{label} = {value} is not on the solved grid (step {step}, {count} levels)")
    if index >= count:
        if not clamp_top:
            raise DomainError(f"{label} = {value} is above the solved grid (step {step}, {count} levels)")
        index = count - 1
    return index
