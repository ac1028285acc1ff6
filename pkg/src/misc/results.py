import json
import math
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from src.simulatorTool.simulator import ScenarioConfig


def scenario_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Configuration-file form of a scenario (replayable through the parser)."""
    return {
        "version": 1,
        "scenario_id": cfg.scenario_id,
        "figure_tag": cfg.figure_tag,
        "arrival": cfg.arrival.to_dict(),
        "harvest": cfg.harvest.to_dict(),
        "sensing": cfg.sensing.to_dict() if cfg.sensing is not None else None,
        "fading": cfg.fading.to_dict() if cfg.fading is not None else None,
        "rate_function": cfg.rf.to_dict(),
        "policy": cfg.policy.to_dict(),
        "epsilon": cfg.epsilon,
        "energy_cap": _json_number(cfg.energy_cap),
        "data_cap": _json_number(cfg.data_cap),
        "data_quantum": cfg.data_quantum,
        "energy_quantum": cfg.energy_quantum,
        "model_data_cap": cfg.model_data_cap,
        "horizon": cfg.horizon,
        "warmup": cfg.warmup,
        "replications": cfg.replications,
        "seed": cfg.seed,
    }


@dataclass
class RunManifest:
    """Everything needed to replay a run; the only artifact that carries wall-clock times."""

    command: str
    config_path: Optional[str]
    preset: Optional[str]
    scenarios: List[Dict[str, Any]]
    seed: int
    output_path: str
    tool_version: str
    started_at: str = field(default_factory=lambda: _now())
    finished_at: Optional[str] = None
    python_version: str = field(default_factory=platform.python_version)
    exit_code: Optional[int] = None

    def finish(self, exit_code: int) -> None:
        self.finished_at = _now()
        self.exit_code = exit_code

    def write(self, path: Optional[Union[str, Path]] = None) -> Path:
        target = Path(path) if path is not None else manifest_path(self.output_path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return target


def manifest_path(output_path: Union[str, Path]) -> Path:
    return Path(f"{output_path}.manifest.json")


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, lineterminator="\n")
    return target


def _json_number(value: float):
    return "inf" if math.isinf(value) else value


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
