"""Excitation lookup tables and two-part point-to-point vibrotactile flow.

For an ordered pair (active, passive) the table stores the excitation that
maximises the FRF difference magnitude(active) - magnitude(passive) over every
frequency bin and actuator case. A flow from A to B plays the (A, B) excitation
first and the (B, A) excitation second, with drive levels equalised in
sensation level.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from tqdm import tqdm

from haptable.errors import ConfigurationError, GeometryError, InfeasibleFlowError, MapFormatError
from haptable.sensitivity import SensitivityCurve, equalize_amplitudes
from haptable.vibmap import (ACTUATORS, FrequencyAxis, VibrationMap, bilinear_weights, grid_index_at,
                             interpolate_magnitudes, point_coordinates)
from haptable.waveform import Waveform, concatenate

logger = logging.getLogger(__name__)

PointRef = Union[int, Tuple[float, float]]

DEFAULT_DRIVE = 100.0
DEFAULT_PART_DURATION = 1.5
DEFAULT_RAMP = 0.05
DEFAULT_SAMPLE_RATE = 44100
LOOKUP_COLUMNS = ["active", "passive", "max_diff", "freq", "actuator", "feasible"]


class LookupRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    active: Optional[int] = None
    passive: Optional[int] = None
    max_diff: float
    freq: float
    actuator: str
    feasible: bool


class ExcitationLookup(BaseModel):
    """Dense (P, P) tables indexed by 0-based active/passive point; the diagonal is unused"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    point_count: int
    max_diff: np.ndarray
    freq: np.ndarray
    actuator: np.ndarray
    feasible: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "ExcitationLookup":
        shape = (self.point_count, self.point_count)
        for name, dtype in (("max_diff", float), ("freq", float), ("actuator", np.int64), ("feasible", bool)):
            array = np.array(getattr(self, name), dtype=dtype)
            if array.shape != shape:
                raise ValueError(f"lookup table {name} has shape {array.shape}, expected {shape}")
            array.flags.writeable = False
            object.__setattr__(self, name, array)
        return self

    def record(self, active: int, passive: int) -> LookupRecord:
        for index in (active, passive):
            if not 1 <= index <= self.point_count:
                raise GeometryError(f"grid index {index} out of range 1..{self.point_count}")
        if active == passive:
            raise GeometryError("flow undefined for coincident points")
        a, p = active - 1, passive - 1
        return LookupRecord(active=active, passive=passive, max_diff=float(self.max_diff[a, p]),
                            freq=float(self.freq[a, p]), actuator=ACTUATORS[int(self.actuator[a, p])],
                            feasible=bool(self.feasible[a, p]))

    def same_as(self, other: "ExcitationLookup") -> bool:
        return (self.point_count == other.point_count
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ("max_diff", "freq", "actuator", "feasible")))


def _resolve_point(vmap: VibrationMap, ref: PointRef) -> Tuple[float, float]:
    if isinstance(ref, (int, np.integer)):
        return point_coordinates(vmap, int(ref))
    point = (float(ref[0]), float(ref[1]))
    bilinear_weights(vmap.grid, np.asarray([point]))
    return point


def _magnitudes_at(vmap: VibrationMap, ref: PointRef) -> np.ndarray:
    if isinstance(ref, (int, np.integer)):
        return vmap.magnitudes[int(ref) - 1]
    return interpolate_magnitudes(vmap, ref)


def difference_curves(vmap: VibrationMap, active: PointRef, passive: PointRef) -> np.ndarray:
    """Per-actuator FRF difference active - passive, shape (5, bins)"""
    return _magnitudes_at(vmap, active) - _magnitudes_at(vmap, passive)


def _best_excitations(active: np.ndarray, passives: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Argmax of active - passive for each passive curve set.

    active: (5, B), passives: (Q, 5, B). Flattening bin-major makes the first
    maximum the lowest bin, then the lowest actuator.
    """
    diff = active[None, :, :] - passives
    q, actuators, bins = diff.shape
    flat = diff.transpose(0, 2, 1).reshape(q, bins * actuators)
    best = np.argmax(flat, axis=1)
    return flat[np.arange(q), best], best // actuators, best % actuators


def _feasibility(active: np.ndarray, max_diff: np.ndarray, bins: np.ndarray, acts: np.ndarray,
                 freqs: np.ndarray, sens: SensitivityCurve, drive: float) -> np.ndarray:
    displacement = active[acts, bins] * drive
    return (max_diff > 0) & (displacement >= sens.feasibility_floor(freqs))


def pair_record(active: np.ndarray, passive: np.ndarray, freq_axis: FrequencyAxis, sens: SensitivityCurve,
                drive: float = DEFAULT_DRIVE) -> LookupRecord:
    """Lookup record for one pair of (5, bins) curve sets, used for off-grid points"""
    max_diff, bins, acts = _best_excitations(np.asarray(active), np.asarray(passive)[None])
    freqs = freq_axis.values[bins]
    feasible = _feasibility(np.asarray(active), max_diff, bins, acts, freqs, sens, drive)
    return LookupRecord(max_diff=float(max_diff[0]), freq=float(freqs[0]), actuator=ACTUATORS[int(acts[0])],
                        feasible=bool(feasible[0]))


def build_lookup(vmap: VibrationMap, sens: SensitivityCurve, drive: float = DEFAULT_DRIVE, workers: int = 1,
                 progress: bool = False) -> ExcitationLookup:
    """Exhaustive excitation table over every ordered pair of grid points.

    Rows are independent; ``workers`` > 1 spreads them over threads with an
    identical result.
    """
    mags = vmap.magnitudes
    count = vmap.grid.point_count
    axis_values = vmap.freq_axis.values

    def row(a: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        max_diff, bins, acts = _best_excitations(mags[a], mags)
        freqs = axis_values[bins]
        feasible = _feasibility(mags[a], max_diff, bins, acts, freqs, sens, drive)
        feasible[a] = False
        return max_diff, freqs, acts, feasible

    bar = tqdm(total=count, desc="lookup", disable=not progress)
    rows = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(row, range(count)):
                rows.append(result)
                bar.update(1)
    else:
        for a in range(count):
            rows.append(row(a))
            bar.update(1)
    bar.close()

    lut = ExcitationLookup(point_count=count,
                           max_diff=np.stack([r[0] for r in rows]),
                           freq=np.stack([r[1] for r in rows]),
                           actuator=np.stack([r[2] for r in rows]),
                           feasible=np.stack([r[3] for r in rows]))
    logger.info("built lookup over %d ordered pairs (%d feasible)", count * (count - 1), int(lut.feasible.sum()))
    return lut


# --------------------------------------------------------------------------- persistence

def lookup_to_frame(lut: ExcitationLookup) -> pd.DataFrame:
    active, passive = np.nonzero(~np.eye(lut.point_count, dtype=bool))
    return pd.DataFrame({
        "active": active + 1,
        "passive": passive + 1,
        "max_diff": lut.max_diff[active, passive],
        "freq": lut.freq[active, passive],
        "actuator": np.array(ACTUATORS, dtype=object)[lut.actuator[active, passive]],
        "feasible": lut.feasible[active, passive],
    }, columns=LOOKUP_COLUMNS)


def save_lookup(lut: ExcitationLookup, path: Union[str, Path]) -> None:
    lookup_to_frame(lut).to_csv(path, index=False)
    logger.info("wrote lookup table %s", path)


def load_lookup(path: Union[str, Path]) -> ExcitationLookup:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MapFormatError(f"cannot read lookup table {path}: {e}")
    if list(frame.columns) != LOOKUP_COLUMNS:
        raise MapFormatError(f"malformed header in {path}: expected {','.join(LOOKUP_COLUMNS)}")
    if frame.empty:
        raise MapFormatError(f"lookup table {path} has no records")
    count = int(max(frame["active"].max(), frame["passive"].max()))
    if len(frame) != count * (count - 1):
        raise MapFormatError(f"missing record: found {len(frame)} of {count * (count - 1)} ordered pairs")
    unknown = set(frame["actuator"]) - set(ACTUATORS)
    if unknown:
        raise MapFormatError(f"unknown actuator {sorted(unknown)[0]!r} in {path}")

    a = frame["active"].to_numpy() - 1
    p = frame["passive"].to_numpy() - 1
    max_diff = np.zeros((count, count))
    freq = np.zeros((count, count))
    actuator = np.zeros((count, count), dtype=np.int64)
    feasible = np.zeros((count, count), dtype=bool)
    max_diff[a, p] = frame["max_diff"].to_numpy()
    freq[a, p] = frame["freq"].to_numpy()
    actuator[a, p] = [ACTUATORS.index(name) for name in frame["actuator"]]
    feasible[a, p] = frame["feasible"].astype(bool).to_numpy()
    return ExcitationLookup(point_count=count, max_diff=max_diff, freq=freq, actuator=actuator, feasible=feasible)


# --------------------------------------------------------------------------- flow stimuli

class FlowPart(BaseModel):
    model_config = ConfigDict(frozen=True)

    actuator: str
    freq: float
    amplitude: float
    duration: float = DEFAULT_PART_DURATION
    ramp: float = DEFAULT_RAMP


class FlowStimulus(BaseModel):
    """Two-part flow plan. Part 1 localises on the source, part 2 on the destination."""

    model_config = ConfigDict(frozen=True)

    parts: List[FlowPart]
    sample_rate: int = DEFAULT_SAMPLE_RATE
    source: Optional[Tuple[float, float]] = None
    destination: Optional[Tuple[float, float]] = None
    sensation_levels: List[float] = []
    records: List[LookupRecord] = []

    @property
    def channel_plan(self) -> List[Tuple[float, float, str]]:
        """(start s, stop s, actuator) for each part on the single piezo channel"""
        plan, start = [], 0.0
        for part in self.parts:
            plan.append((start, start + part.duration, part.actuator))
            start += part.duration
        return plan


def plan_point_flow(lut: Optional[ExcitationLookup], vmap: VibrationMap, sens: SensitivityCurve,
                    source: PointRef, destination: PointRef,
                    durations: Tuple[float, float] = (DEFAULT_PART_DURATION, DEFAULT_PART_DURATION),
                    drive: float = DEFAULT_DRIVE, ramp: float = DEFAULT_RAMP, max_drive: float = DEFAULT_DRIVE,
                    sample_rate: int = DEFAULT_SAMPLE_RATE) -> FlowStimulus:
    """Plan a flow from ``source`` to ``destination``.

    Points are 1-based grid indices or (x, y) mm. Grid-node pairs are read
    from ``lut``; anything else is evaluated on interpolated curves.
    """
    if drive > max_drive:
        raise ConfigurationError(f"drive {drive} V exceeds the maximum drive {max_drive} V")
    src, dst = _resolve_point(vmap, source), _resolve_point(vmap, destination)
    if np.allclose(src, dst, rtol=0.0, atol=1e-9):
        raise GeometryError("flow undefined for coincident points")

    src_index, dst_index = grid_index_at(vmap, src), grid_index_at(vmap, dst)
    src_mags, dst_mags = _magnitudes_at(vmap, src), _magnitudes_at(vmap, dst)
    if lut is not None and src_index is not None and dst_index is not None:
        if lut.point_count != vmap.grid.point_count:
            raise ConfigurationError("lookup table and vibration map disagree on the grid size")
        first, second = lut.record(src_index, dst_index), lut.record(dst_index, src_index)
    else:
        first = pair_record(src_mags, dst_mags, vmap.freq_axis, sens, drive)
        second = pair_record(dst_mags, src_mags, vmap.freq_axis, sens, drive)
    for record, label in ((first, "source"), (second, "destination")):
        if not record.feasible:
            raise InfeasibleFlowError(f"no discriminating excitation localises the {label} point")

    axis = vmap.freq_axis
    mag1 = float(src_mags[ACTUATORS.index(first.actuator), axis.bin_of(first.freq)])
    mag2 = float(dst_mags[ACTUATORS.index(second.actuator), axis.bin_of(second.freq)])
    amplitudes = equalize_amplitudes(sens, drive, [(mag1, first.freq), (mag2, second.freq)])
    levels = [float(sens.sensation_level(amp * mag, rec.freq))
              for amp, mag, rec in zip(amplitudes, (mag1, mag2), (first, second))]

    parts = [FlowPart(actuator=rec.actuator, freq=rec.freq, amplitude=amp, duration=d, ramp=ramp)
             for rec, amp, d in zip((first, second), amplitudes, durations)]
    logger.info("flow %s -> %s: part1 %s %.0f Hz, part2 %s %.0f Hz", src, dst,
                first.actuator, first.freq, second.actuator, second.freq)
    return FlowStimulus(parts=parts, sample_rate=sample_rate, source=src, destination=dst,
                        sensation_levels=levels, records=[first, second])


def trapezoid(t: np.ndarray, duration: float, ramp: float) -> np.ndarray:
    """Linear attack/release envelope rising from 0 to 1 over ``ramp`` seconds"""
    if ramp <= 0:
        return np.ones_like(t)
    return np.clip(np.minimum(np.minimum(1.0, t / ramp), (duration - t) / ramp), 0.0, 1.0)


def render_parts(parts: Sequence[FlowPart], sample_rate: int) -> Waveform:
    pieces, start = [], 0.0
    for part in parts:
        if part.ramp > part.duration / 2:
            raise ConfigurationError(f"ramp {part.ramp} s exceeds half the part duration {part.duration} s")
        n = int(round(part.duration * sample_rate))
        t = np.arange(n) / sample_rate
        signal = part.amplitude * trapezoid(t, part.duration, part.ramp) * np.sin(2 * np.pi * part.freq * t)
        pieces.append(Waveform(sample_rate=sample_rate, time=start + t, piezo=signal, electro=np.zeros(n),
                               routing=np.full(n, ACTUATORS.index(part.actuator))))
        start += n / sample_rate
    return concatenate(pieces)


def render_stimulus(plan: FlowStimulus, sample_rate: Optional[int] = None) -> Waveform:
    """Back-to-back ramped tones on the piezo channel, routed per part"""
    return render_parts(plan.parts, sample_rate or plan.sample_rate)
