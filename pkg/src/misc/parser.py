import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src.misc.errors import ConfigError
from src.misc.presets import PRESET_NOTES, preset_dict
from src.modelTool.distributions import DiscretePmf, distribution_from_dict
from src.modelTool.rate_functions import rate_function_from_dict
from src.simulatorTool.policies import policy_from_dict
from src.simulatorTool.simulator import DEFAULT_EPSILON_FRACTION, ScenarioConfig

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
CONFIG_KEYS = {
    "version", "preset", "scenario_id", "figure_tag", "arrival", "harvest", "sensing",
    "fading", "rate_function", "policy", "policies", "epsilon",
    "energy_cap", "data_cap", "data_quantum", "energy_quantum", "horizon", "warmup",
    "model_data_cap", "replications", "seed", "sweep",
}
SWEEP_KEYS = {"loads", "c_values"}
POLICY_KEYS = ("policy", "policies")


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed configuration: one scenario per listed policy, plus the optional sweep grids."""

    scenarios: Tuple[ScenarioConfig, ...]
    loads: Tuple[float, ...] = ()
    c_values: Tuple[float, ...] = ()
    preset: Optional[str] = None
    resolved: Dict[str, Any] = field(default_factory=dict, compare=False)
    warnings: Tuple[str, ...] = ()

    @property
    def template(self) -> ScenarioConfig:
        return self.scenarios[0]

    @property
    def policies(self):
        return [s.policy for s in self.scenarios]


class Parser:
    """Reads versioned JSON scenario files (or presets) into validated ScenarioConfigs."""

    def parse_config(self, text: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                              key="config") from exc
        if not isinstance(data, dict):
            raise ConfigError("the top level must be an object", key="config")
        return self.from_dict(data, overrides)

    def load_config(self, path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}", key="config") from exc
        return self.parse_config(text, overrides)

    def load_preset(self, name: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        return self.from_dict({"preset": name}, overrides)

    def from_dict(self, data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
        merged = self._merge(data, overrides or {})
        version = merged.get("version")
        if version != CONFIG_VERSION:
            raise ConfigError(f"expected version {CONFIG_VERSION}, got {version!r}", key="version")
        scenarios = self._scenarios(merged)
        loads, c_values = self._sweep(merged.get("sweep"))

        warnings: List[str] = []
        preset = merged.get("preset")
        if preset in PRESET_NOTES:
            warnings.append(PRESET_NOTES[preset])
        for scenario in scenarios:
            to_boundary = scenario.rf.evaluate(max(scenario.ey - scenario.epsilon, 0.0))
            if scenario.ex >= to_boundary:
                warnings.append(f"{scenario.policy}: E[X] = {scenario.ex:.4g} >= g(E[Y] - eps) = "
                                f"{to_boundary:.4g}; the queue cannot be stable (overload run)")
        for message in warnings:
            logger.warning(message)

        return ExperimentConfig(
            scenarios=scenarios,
            loads=loads,
            c_values=c_values,
            preset=preset,
            resolved=merged,
            warnings=tuple(warnings),
        )

    def _merge(self, data: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
        _reject_unknown(data)
        _reject_unknown(overrides)
        name = overrides.get("preset", data.get("preset"))
        merged: Dict[str, Any] = preset_dict(name) if name is not None else {}
        for layer in (data, overrides):
            if any(key in layer for key in POLICY_KEYS):
                for key in POLICY_KEYS:
                    merged.pop(key, None)
            merged.update(copy.deepcopy(layer))
        if name is not None:
            merged["preset"] = name
        return merged

    def _scenarios(self, merged: Dict[str, Any]) -> Tuple[ScenarioConfig, ...]:
        arrival = distribution_from_dict(_required(merged, "arrival"), "arrival")
        harvest = distribution_from_dict(_required(merged, "harvest"), "harvest")
        sensing = _optional_distribution(merged, "sensing")
        fading = _optional_distribution(merged, "fading")
        if fading is not None and not isinstance(fading, DiscretePmf):
            raise ConfigError("fading must use the 'discrete' family", key="fading")
        rate = _required(merged, "rate_function")
        if not isinstance(rate, dict):
            raise ConfigError("expected an object with a 'family' key", key="rate_function")
        rf = rate_function_from_dict(rate)

        epsilon = _number(merged, "epsilon", DEFAULT_EPSILON_FRACTION * harvest.mean())
        if "policies" in merged and "policy" in merged:
            raise ConfigError("give either 'policy' or 'policies'", key="policies")
        if "policies" in merged:
            entries = merged["policies"]
            if not isinstance(entries, list) or not entries:
                raise ConfigError("expected a nonempty list", key="policies")
        else:
            entries = [_required(merged, "policy")]
        policies = [policy_from_dict(entry, epsilon) for entry in entries]

        horizon = _integer(merged, "horizon", 100_000)
        common = dict(
            arrival=arrival,
            harvest=harvest,
            rf=rf,
            sensing=sensing,
            fading=fading,
            energy_cap=_cap(merged, "energy_cap"),
            data_cap=_cap(merged, "data_cap"),
            horizon=horizon,
            warmup=_integer(merged, "warmup", horizon // 10),
            replications=_integer(merged, "replications", 10),
            seed=_integer(merged, "seed", 1),
            epsilon=epsilon,
            data_quantum=_number(merged, "data_quantum", None),
            energy_quantum=_number(merged, "energy_quantum", None),
            model_data_cap=_number(merged, "model_data_cap", None),
            scenario_id=str(merged.get("scenario_id", "scenario")),
            figure_tag=str(merged.get("figure_tag", "")),
        )
        return tuple(ScenarioConfig(policy=policy, **common) for policy in policies)

    def _sweep(self, sweep: Any) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        if sweep is None:
            return (), ()
        if isinstance(sweep, list):
            sweep = {"loads": sweep}
        if not isinstance(sweep, dict):
            raise ConfigError("expected a list of loads or an object", key="sweep")
        unknown = set(sweep) - SWEEP_KEYS
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", key="sweep")
        grids = []
        for key in ("loads", "c_values"):
            values = sweep.get(key, [])
            try:
                values = tuple(float(v) for v in values)
            except (TypeError, ValueError) as exc:
                raise ConfigError("expected a list of numbers", key=f"sweep.{key}") from exc
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError("grid must be strictly increasing", key=f"sweep.{key}")
            grids.append(values)
        return grids[0], grids[1]


_default_parser = Parser()


def parse_config(text: str, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    return _default_parser.parse_config(text, overrides)


def _reject_unknown(data: Dict[str, Any]) -> None:
    for key in data:
        if key not in CONFIG_KEYS:
            raise ConfigError("unknown configuration key", key=key)


def _required(data: Dict[str, Any], key: str) -> Any:
    if data.get(key) is None:
        raise ConfigError("missing required key", key=key)
    return data[key]


def _optional_distribution(data: Dict[str, Any], key: str):
    if data.get(key) is None:
        return None
    return distribution_from_dict(data[key], key)


def _number(data: Dict[str, Any], key: str, default):
    value = data.get(key)
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    return float(value)


def _integer(data: Dict[str, Any], key: str, default: int) -> int:
    value = data.get(key)
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return int(value)


def _cap(data: Dict[str, Any], key: str) -> float:
    value = data.get(key)
    if value is None or value == "inf":
        return math.inf
    return _number(data, key, math.inf)
