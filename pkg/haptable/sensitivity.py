"""Vibrotactile detection threshold curve and sensation-level arithmetic."""
import math
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

DEFAULT_ANCHORS: List[Tuple[float, float]] = [(10.0, 10.0), (100.0, 0.6), (250.0, 0.1), (625.0, 0.5)]


class SensitivityCurve(BaseModel):
    """Absolute detection threshold (um peak) versus frequency.

    Anchors are joined piecewise-linearly in log-log space and held flat
    outside the anchored range.
    """

    model_config = ConfigDict(frozen=True)

    anchors: List[Tuple[float, float]] = DEFAULT_ANCHORS
    jnd_db: float = 1.5
    margin_db: float = 0.0

    @field_validator("anchors")
    @classmethod
    def _check_anchors(cls, value: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
        if len(value) < 1:
            raise ValueError("at least one anchor is required")
        freqs = [f for f, _ in value]
        if any(f <= 0 for f in freqs) or any(t <= 0 for _, t in value):
            raise ValueError("anchor frequencies and thresholds must be positive")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("anchor frequencies must be strictly ascending")
        return value

    @field_validator("jnd_db")
    @classmethod
    def _positive_jnd(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("jnd_db must be positive")
        return value

    def threshold(self, freq: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Threshold displacement in um at ``freq`` Hz"""
        log_f = np.log10([f for f, _ in self.anchors])
        log_t = np.log10([t for _, t in self.anchors])
        # 0 Hz has no log; clamp to the lowest anchor like any other out-of-range frequency
        f = np.maximum(np.asarray(freq, dtype=float), self.anchors[0][0])
        result = 10.0 ** np.interp(np.log10(f), log_f, log_t)
        return float(result) if np.ndim(result) == 0 else result

    def sensation_level(self, displacement: Union[float, np.ndarray],
                        freq: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """dB above threshold; -inf for zero displacement"""
        with np.errstate(divide="ignore"):
            level = 20.0 * np.log10(np.asarray(displacement, dtype=float) / self.threshold(freq))
        return float(level) if np.ndim(level) == 0 else level

    def feasibility_floor(self, freq: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Displacement the active point must reach to count as felt"""
        return self.threshold(freq) * 10.0 ** (self.margin_db / 20.0)


def equalize_amplitudes(sens: SensitivityCurve, drive: float,
                        parts: Sequence[Tuple[float, float]]) -> List[float]:
    """Drive amplitudes giving every part the same sensation level.

    ``parts`` holds (FRF magnitude at the active point, frequency) pairs. The
    weakest part keeps ``drive``; the others are attenuated down to its level.
    """
    levels = [sens.sensation_level(drive * mag, freq) for mag, freq in parts]
    target = min(levels)
    return [drive * 10.0 ** ((target - level) / 20.0) if math.isfinite(level) else 0.0 for level in levels]
