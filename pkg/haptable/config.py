"""Engine configuration: defaults < JSON config file < command-line flags."""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from haptable.electro import ElectroParams
from haptable.errors import ConfigurationError
from haptable.gesture.settings import GestureSettings
from haptable.knob import KnobSettings
from haptable.platesim import PlateLayout
from haptable.sensitivity import SensitivityCurve
from haptable.vibmap import FrequencyAxis, GridSpec

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "HAPTABLE_CONFIG"


class SweepSection(BaseModel):
    start: float = 0.0
    step: float = 1.0
    count: int = 626
    sweep_limit: float = 625.0

    def axis(self) -> FrequencyAxis:
        return FrequencyAxis(start=self.start, step=self.step, count=self.count)


class FlowSection(BaseModel):
    part_duration: float = 1.5
    ramp: float = 0.05
    sample_rate: int = 44100
    drive: float = 100.0
    max_drive: float = 100.0
    workers: int = 1

    @field_validator("part_duration", "sample_rate", "drive", "max_drive")
    @classmethod
    def _positive(cls, value):
        if not value > 0:
            raise ValueError("must be positive")
        return value


class HandSection(BaseModel):
    side: float = 120.0
    subgrid: int = 15
    jnd_multiple: float = 3.0
    min_freq: float = 20.0
    max_freq: float = 625.0


class EngineConfig(BaseModel):
    """Every tunable of the engine, grouped by concern"""

    model_config = ConfigDict(extra="forbid")

    plate: PlateLayout = PlateLayout()
    grid: GridSpec = GridSpec()
    sweep: SweepSection = SweepSection()
    sensitivity: SensitivityCurve = SensitivityCurve()
    flow: FlowSection = FlowSection()
    hand: HandSection = HandSection()
    knob: KnobSettings = KnobSettings()
    gesture: GestureSettings = GestureSettings()
    electro: ElectroParams = ElectroParams()
    seed: int = 0


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Dict[str, Any]] = None) -> EngineConfig:
    """Build the configuration from defaults, an optional JSON file and flag overrides.

    When ``path`` is None the HAPTABLE_CONFIG environment variable is consulted.
    ``overrides`` is a nested dict of section -> field -> value.
    """
    path = path or os.environ.get(CONFIG_ENV_VAR)
    data: Dict[str, Any] = {}
    if path:
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read configuration {path}: {e}")
        logger.info("loaded configuration %s", path)
    if overrides:
        data = _merge(data, overrides)
    try:
        return EngineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e.errors()[0]['loc']}: {e.errors()[0]['msg']}")
