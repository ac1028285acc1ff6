from typing import Any, Dict, Union

from src.misc.errors import ConfigError, DomainError
from src.simulatorTool.energy_policy import EnergyPolicy
from src.simulatorTool.greedy import ConstantPower, Greedy, Unbuffered
from src.simulatorTool.optimal_table import MdpTablePolicy
from src.simulatorTool.throughput_optimal import (
    FadingThroughputOptimalLinear,
    ModifiedThroughputOptimal,
    ThroughputOptimal,
    UnfadedThroughputOptimal,
)
from src.simulatorTool.water_filling import ModifiedWaterFilling, WaterFilling

POLICY_CLASSES = {
    "TO": ThroughputOptimal,
    "GREEDY": Greedy,
    "MTO": ModifiedThroughputOptimal,
    "UNBUFFERED": Unbuffered,
    "UNFADED_TO": UnfadedThroughputOptimal,
    "FADING_TO_LINEAR": FadingThroughputOptimalLinear,
    "WF": WaterFilling,
    "MWF": ModifiedWaterFilling,
    "CONST_POWER": ConstantPower,
    "MDP_OPTIMAL": MdpTablePolicy,
}

_TAKES_EPSILON = {"TO", "UNFADED_TO", "FADING_TO_LINEAR", "WF", "MWF"}
_PARAMETERS = {
    "TO": {"epsilon"},
    "GREEDY": set(),
    "MTO": {"c", "outer", "inner"},
    "UNBUFFERED": set(),
    "UNFADED_TO": {"epsilon"},
    "FADING_TO_LINEAR": {"epsilon"},
    "WF": {"epsilon"},
    "MWF": {"epsilon", "c", "inner"},
    "CONST_POWER": {"c_power"},
    "MDP_OPTIMAL": set(),
}


def make_policy(name: str, default_epsilon: float, **params: Any) -> EnergyPolicy:
    """Build a policy by its CSV name; epsilon falls back to default_epsilon."""
    key = name.upper()
    if key not in POLICY_CLASSES:
        raise ConfigError(f"unknown policy {name!r}; expected one of {sorted(POLICY_CLASSES)}", key="policy")
    unknown = set(params) - _PARAMETERS[key]
    if unknown:
        raise ConfigError(f"unknown parameters {sorted(unknown)} for {key}", key="policy")
    if key in _TAKES_EPSILON and params.get("epsilon") is None:
        params["epsilon"] = default_epsilon
    if key == "CONST_POWER" and "c_power" not in params:
        raise ConfigError("CONST_POWER needs c_power", key="policy.c_power")
    try:
        return POLICY_CLASSES[key](**{k: float(v) for k, v in params.items()})
    except DomainError as exc:
        raise ConfigError(str(exc), key="policy") from exc


def policy_from_dict(data: Union[str, Dict[str, Any]], default_epsilon: float) -> EnergyPolicy:
    if isinstance(data, str):
        return make_policy(data, default_epsilon)
    if not isinstance(data, dict) or "name" not in data:
        raise ConfigError("policy entries are names or objects with a 'name' key", key="policy")
    params = {k: v for k, v in data.items() if k != "name"}
    return make_policy(str(data["name"]), default_epsilon, **params)
