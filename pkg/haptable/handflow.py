"""Directional flow under a hand: 3x3 squares, 15x15 subgrids, activity at 3 JND.

Squares are indexed [row, col] with row 0 at the top of the region (smallest
y) and col 0 at the left (smallest x). A square is active when at least half
of its subgrid points sit at or above the required sensation level.
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from haptable.errors import ConfigurationError, ExtrapolationError, PlanningError
from haptable.flowlut import DEFAULT_PART_DURATION, DEFAULT_RAMP, DEFAULT_SAMPLE_RATE, FlowPart, FlowStimulus, render_stimulus
from haptable.sensitivity import SensitivityCurve
from haptable.vibmap import ACTUATORS, VibrationMap, bilinear_weights, interpolate_field
from haptable.waveform import Waveform

logger = logging.getLogger(__name__)

Direction = Literal["L->R", "R->L", "U->D", "D->U"]
DIRECTIONS: Tuple[str, ...] = ("L->R", "R->L", "U->D", "D->U")
LEVEL_FLOOR_DB = -120.0
# Sensation levels this close below the requirement still count as meeting it
LEVEL_TOLERANCE_DB = 1e-9

# Region centres (mm): the preliminary study region and the four test regions
REGION_PRESETS: Dict[str, Tuple[float, float]] = {
    "prelim": (371.73, 223.645),
    "R1": (161.73, 163.645),
    "R2": (221.73, 313.645),
    "R3": (521.73, 163.645),
    "R4": (581.73, 283.645),
}


class HandRegion(BaseModel):
    model_config = ConfigDict(frozen=True)

    center: Tuple[float, float]
    side: float = 120.0
    subgrid: int = 15

    @property
    def square_side(self) -> float:
        return self.side / 3

    @property
    def pass_count(self) -> int:
        return math.ceil(self.subgrid * self.subgrid / 2)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        cx, cy = self.center
        half = self.side / 2
        return cx - half, cy - half, cx + half, cy + half

    def subgrid_points(self) -> np.ndarray:
        """Cell-centre points, shape (3, 3, subgrid**2, 2) indexed [row, col, point]"""
        x0, y0, _, _ = self.bounds
        cell = self.square_side / self.subgrid
        offsets = (np.arange(self.subgrid) + 0.5) * cell
        points = np.empty((3, 3, self.subgrid * self.subgrid, 2))
        for row in range(3):
            for col in range(3):
                ys, xs = np.meshgrid(y0 + row * self.square_side + offsets,
                                     x0 + col * self.square_side + offsets, indexing="ij")
                points[row, col, :, 0] = xs.ravel()
                points[row, col, :, 1] = ys.ravel()
        return points


def region_preset(name: str, side: float = 120.0, subgrid: int = 15) -> HandRegion:
    if name not in REGION_PRESETS:
        raise ConfigurationError(f"unknown region preset {name!r}, expected one of {', '.join(REGION_PRESETS)}")
    return HandRegion(center=REGION_PRESETS[name], side=side, subgrid=subgrid)


def _check_region(vmap: VibrationMap, region: HandRegion) -> np.ndarray:
    x0, y0, x1, y1 = region.bounds
    try:
        bilinear_weights(vmap.grid, np.array([[x0, y0], [x1, y0], [x0, y1], [x1, y1]]))
    except ExtrapolationError:
        raise ExtrapolationError(f"hand region centred at {region.center} extends beyond the instrumented grid")
    return region.subgrid_points()


def _levels(vmap: VibrationMap, sens: SensitivityCurve, points: np.ndarray, actuator: str,
            bins: Sequence[int], drive: float) -> np.ndarray:
    """Sensation levels of the flattened subgrid points, shape (points, bins)"""
    mags = interpolate_field(vmap, actuator, points.reshape(-1, 2), bins)
    freqs = vmap.freq_axis.values[list(bins)]
    levels = sens.sensation_level(np.maximum(mags, 0.0) * drive, freqs[None, :])
    return np.maximum(np.atleast_2d(levels), LEVEL_FLOOR_DB)


def subgrid_levels(vmap: VibrationMap, sens: SensitivityCurve, region: HandRegion, actuator: str, freq: float,
                   drive: float) -> np.ndarray:
    """Sensation level (dB) at every subgrid point, shape (3, 3, subgrid**2)"""
    points = _check_region(vmap, region)
    levels = _levels(vmap, sens, points, actuator, [vmap.freq_axis.bin_of(freq)], drive)
    return levels[:, 0].reshape(3, 3, -1)


def _required_level(sens: SensitivityCurve, jnd_multiple: float) -> float:
    return jnd_multiple * sens.jnd_db - LEVEL_TOLERANCE_DB


def pass_counts(vmap: VibrationMap, sens: SensitivityCurve, region: HandRegion, actuator: str, freq: float,
                drive: float, jnd_multiple: float = 3.0) -> np.ndarray:
    levels = subgrid_levels(vmap, sens, region, actuator, freq, drive)
    return np.sum(levels >= _required_level(sens, jnd_multiple), axis=2)


def square_activity(vmap: VibrationMap, sens: SensitivityCurve, region: HandRegion, actuator: str, freq: float,
                    drive: float, jnd_multiple: float = 3.0) -> np.ndarray:
    """3x3 boolean map of squares felt at the given excitation"""
    return pass_counts(vmap, sens, region, actuator, freq, drive, jnd_multiple) >= region.pass_count


# --------------------------------------------------------------------------- planning rules

def _source_destination(direction: str, part: int) -> Tuple[str, int, int]:
    """(axis, source line, destination line) for one part; axis 'col' for horizontal flow"""
    if direction not in DIRECTIONS:
        raise ConfigurationError(f"unknown direction {direction!r}, expected one of {', '.join(DIRECTIONS)}")
    axis = "col" if direction in ("L->R", "R->L") else "row"
    source, destination = (0, 2) if direction in ("L->R", "U->D") else (2, 0)
    if part == 2:
        source, destination = destination, source
    return axis, source, destination


def check_plan_rules(direction: str, part: int, activity: np.ndarray) -> List[str]:
    """Rule violations of one part's activity map (empty when the part is acceptable)"""
    activity = np.asarray(activity, dtype=bool)
    axis, source, destination = _source_destination(direction, part)
    lines = activity.T if axis == "col" else activity
    violations = []
    if not lines[source].any():
        violations.append("source side silent")
    if lines[destination].any():
        violations.append("destination side active")
    # mirror about the centre line parallel to the flow
    if axis == "col" and not np.array_equal(activity[0], activity[2]):
        violations.append("top/bottom unbalanced")
    if axis == "row" and not np.array_equal(activity[:, 0], activity[:, 2]):
        violations.append("left/right unbalanced")
    return violations


def _violation_counts(direction: str, part: int, activity: np.ndarray) -> np.ndarray:
    """Vectorised rule check; activity (..., 3, 3) -> violation count (...)"""
    axis, source, destination = _source_destination(direction, part)
    if axis == "col":
        src = activity[..., :, source].any(axis=-1)
        dst = activity[..., :, destination].any(axis=-1)
        balanced = np.all(activity[..., 0, :] == activity[..., 2, :], axis=-1)
    else:
        src = activity[..., source, :].any(axis=-1)
        dst = activity[..., destination, :].any(axis=-1)
        balanced = np.all(activity[..., :, 0] == activity[..., :, 2], axis=-1)
    return (~src).astype(int) + dst.astype(int) + (~balanced).astype(int)


class HandFlowPart(BaseModel):
    actuator: str
    freq: float
    drive: float
    activity: List[List[bool]]
    pass_counts: List[List[int]]


class HandFlowPlan(BaseModel):
    direction: Direction
    region: HandRegion
    jnd_multiple: float = 3.0
    parts: List[HandFlowPart]

    def activity(self, part: int) -> np.ndarray:
        return np.array(self.parts[part - 1].activity, dtype=bool)


def plan_hand_flow(vmap: VibrationMap, sens: SensitivityCurve, region: HandRegion, direction: str,
                   drive: float = 100.0, actuators: Sequence[str] = ACTUATORS, min_freq: float = 20.0,
                   max_freq: float = 625.0, jnd_multiple: float = 3.0) -> HandFlowPlan:
    """First acceptable (actuator, frequency) per part, searching ascending frequency then PA..PALL"""
    _source_destination(direction, 1)
    points = _check_region(vmap, region)
    freqs = vmap.freq_axis.values
    bins = [int(b) for b in np.nonzero((freqs >= min_freq - 1e-9) & (freqs <= max_freq + 1e-9))[0]]
    if not bins:
        raise ConfigurationError(f"no frequency bins between {min_freq} and {max_freq} Hz")
    required = _required_level(sens, jnd_multiple)

    # counts[bin, actuator, row, col]
    counts = np.zeros((len(bins), len(actuators), 3, 3), dtype=np.int64)
    for a, actuator in enumerate(actuators):
        levels = _levels(vmap, sens, points, actuator, bins, drive)
        passing = (levels >= required).reshape(3, 3, -1, len(bins))
        counts[:, a] = np.moveaxis(passing.sum(axis=2), -1, 0)
    activity = counts >= region.pass_count

    parts: List[HandFlowPart] = []
    near_misses: List[Dict[str, object]] = []
    for part in (1, 2):
        violations = _violation_counts(direction, part, activity)
        flat = violations.ravel()
        ok = np.nonzero(flat == 0)[0]
        if ok.size == 0:
            # stable sort keeps the search order among equally bad candidates
            for k in np.argsort(flat, kind="stable")[:3]:
                b, a = divmod(int(k), len(actuators))
                near_misses.append({"part": part, "actuator": actuators[a], "freq": float(freqs[bins[b]]),
                                    "violations": check_plan_rules(direction, part, activity[b, a])})
            continue
        b, a = divmod(int(ok[0]), len(actuators))
        logger.debug("part %d: %d acceptable candidates", part, ok.size)
        parts.append(HandFlowPart(actuator=actuators[a], freq=float(freqs[bins[b]]), drive=drive,
                                  activity=activity[b, a].tolist(), pass_counts=counts[b, a].tolist()))
    if near_misses:
        raise PlanningError(f"no excitation satisfies the {direction} rules over {len(bins)} bins x "
                            f"{len(actuators)} actuators", near_misses)

    plan = HandFlowPlan(direction=direction, region=region, jnd_multiple=jnd_multiple, parts=parts)
    logger.info("hand flow %s at %s: part1 %s %.0f Hz, part2 %s %.0f Hz", direction, region.center,
                parts[0].actuator, parts[0].freq, parts[1].actuator, parts[1].freq)
    return plan


def render_hand_flow(plan: HandFlowPlan,
                     durations: Tuple[float, float] = (DEFAULT_PART_DURATION, DEFAULT_PART_DURATION),
                     sample_rate: int = DEFAULT_SAMPLE_RATE, ramp: float = DEFAULT_RAMP) -> Waveform:
    stimulus = FlowStimulus(
        parts=[FlowPart(actuator=p.actuator, freq=p.freq, amplitude=p.drive, duration=d, ramp=ramp)
               for p, d in zip(plan.parts, durations)],
        sample_rate=sample_rate, source=None, destination=None)
    return render_stimulus(stimulus)


# --------------------------------------------------------------------------- export

def save_plan(plan: HandFlowPlan, path: Union[str, Path]) -> None:
    Path(path).write_text(plan.model_dump_json(indent=2))
    logger.info("wrote hand flow plan %s", path)


def load_plan(path: Union[str, Path]) -> HandFlowPlan:
    return HandFlowPlan.model_validate(json.loads(Path(path).read_text()))


def activity_frame(plan: HandFlowPlan) -> pd.DataFrame:
    """Long-format activity grid: one row per (part, row, col)"""
    records = [{"part": k, "row": r, "col": c, "active": int(part.activity[r][c]), "pass_count": part.pass_counts[r][c]}
               for k, part in enumerate(plan.parts, start=1) for r in range(3) for c in range(3)]
    return pd.DataFrame.from_records(records, columns=["part", "row", "col", "active", "pass_count"])


def levels_frame(vmap: VibrationMap, sens: SensitivityCurve, plan: HandFlowPlan) -> pd.DataFrame:
    """Subgrid sensation levels of both parts as x, y, level rows for heat-map plots"""
    points = plan.region.subgrid_points().reshape(-1, 2)
    frames = []
    for k, part in enumerate(plan.parts, start=1):
        levels = subgrid_levels(vmap, sens, plan.region, part.actuator, part.freq, part.drive).ravel()
        frames.append(pd.DataFrame({"part": k, "x": points[:, 0], "y": points[:, 1], "level_db": levels}))
    return pd.concat(frames, ignore_index=True)
