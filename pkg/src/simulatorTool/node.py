import math
from dataclasses import dataclass
from typing import Optional, Tuple

from src.misc.errors import ContractViolation, DomainError
from src.modelTool.rate_functions import RateFunction

# Slack allowed when checking T <= e after floating-point arithmetic
FEASIBILITY_SLACK = 1e-12
# Off-grid energy closer than this (relative) to a level is moved onto it
GRID_SNAP = 1e-9


@dataclass(frozen=True)
class BufferCaps:
    """Data/energy buffer sizes (inf for unbounded) and the optional grid steps.

    With data_quantum set the post-service queue is rounded to the nearest
    level; energy_quantum only snaps away floating-point drift, so
    policies that spend off-grid amounts keep their exact energy.
    """

    data_cap: float = math.inf
    energy_cap: float = math.inf
    data_quantum: Optional[float] = None
    energy_quantum: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.data_cap > 0 and self.energy_cap > 0):
            raise DomainError("buffer caps must be positive")
        if self.data_quantum is not None and not self.data_quantum > 0:
            raise DomainError("data quantum must be positive")
        if self.energy_quantum is not None and not self.energy_quantum > 0:
            raise DomainError("energy quantum must be positive")


@dataclass(frozen=True)
class NodeState:
    """Queue backlog q (bits), stored energy e and slot index k.

    dropped_bits and energy_overflow accumulate what the caps clipped away.
    """

    q: float = 0.0
    e: float = 0.0
    k: int = 0
    dropped_bits: float = 0.0
    energy_overflow: float = 0.0


def advance(q: float, e: float, T: float, served: float, x: float, y: float,
            caps: BufferCaps) -> Tuple[float, float, float, float]:
    """One slot of the queue and energy recursions.

    Returns (q', e', bits dropped, energy overflow).
    """
    q_post = q - served
    if q_post < 0.0:
        q_post = 0.0
    if caps.data_quantum is not None:
        q_post = round(q_post / caps.data_quantum) * caps.data_quantum
    q_next = q_post + x
    dropped = 0.0
    if q_next > caps.data_cap:
        dropped = q_next - caps.data_cap
        q_next = caps.data_cap
    e_next = e - T + y
    if caps.energy_quantum is not None:
        level = round(e_next / caps.energy_quantum) * caps.energy_quantum
        if abs(e_next - level) <= GRID_SNAP * max(1.0, abs(e_next)):
            e_next = level
    overflow = 0.0
    if e_next > caps.energy_cap:
        overflow = e_next - caps.energy_cap
        e_next = caps.energy_cap
    return q_next, e_next, dropped, overflow


def step(state: NodeState, T: float, x: float, y: float, h: float, caps: BufferCaps,
         rf: RateFunction) -> NodeState:
    """q' = min(cap, (q - g(hT))^+ + x), e' = min(cap, e - T + y)."""
    if T < 0 or T > state.e + FEASIBILITY_SLACK:
        raise ContractViolation(f"transmit energy {T} outside [0, e = {state.e}]")
    served = min(state.q, rf.evaluate(h * T))
    q_next, e_next, dropped, overflow = advance(state.q, state.e, T, served, x, y, caps)
    return NodeState(
        q=q_next,
        e=e_next,
        k=state.k + 1,
        dropped_bits=state.dropped_bits + dropped,
        energy_overflow=state.energy_overflow + overflow,
    )
