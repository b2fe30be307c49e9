"""Virtual haptic knob rendered on the electrostatic channel.

The thumb is the pivot and the index finger sweeps the arc; the knob angle is
the unwrapped direction of the index finger seen from the thumb, measured from
the first sample. Sector k spans [k*w, (k+1)*w) degrees with w = 360/sectors.
"""
import json
import logging
import math
from collections import deque
from itertools import product
from pathlib import Path
from typing import Deque, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator

from haptable.errors import ConfigurationError, GeometryError, MapFormatError, ScenarioTimeoutError, StreamError
from haptable.waveform import IDLE, Waveform

logger = logging.getLogger(__name__)

Condition = Literal["V", "HD", "HD+CF", "HD+VF", "HD+BF"]
STUDY_CONDITIONS: Tuple[str, ...] = ("V", "HD", "HD+CF", "HD+VF")
CONDITIONS: Tuple[str, ...] = STUDY_CONDITIONS + ("HD+BF",)
SECTOR_PRESETS = (8, 16, 32)
DISTANCE_PRESETS = (135.0, 270.0, 450.0)
TRAJECTORY_COLUMNS = ["t", "thumb_x", "thumb_y", "index_x", "index_y"]

BOUNDARY_EPS = 1e-6
MIN_FINGER_GAP = 1e-9


class KnobSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    detent_amplitude: float = 100.0
    detent_duration: float = 0.02
    detent_style: Literal["pulse", "gap"] = "pulse"
    carrier_freq: float = 180.0
    # 100 Vpp
    carrier_amplitude: float = 50.0
    vf_min_freq: float = 60.0
    vf_max_freq: float = 180.0
    omega_max: float = 360.0
    hysteresis: float = 2.0
    velocity_window: int = 5
    frame_period: float = 1.0 / 60.0
    sample_rate: int = 44100

    @field_validator("velocity_window", "sample_rate")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value


class KnobSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    sector_count: int = 8
    center: Tuple[float, float] = (371.73, 223.645)
    radius: float = 60.0
    menu_length: Optional[int] = None
    # +1 counter-clockwise, -1 clockwise
    orientation: Literal[1, -1] = 1

    @field_validator("sector_count")
    @classmethod
    def _sectors(cls, value: int) -> int:
        if value < 2:
            raise ValueError("a knob needs at least two sectors")
        return value

    @property
    def sector_width(self) -> float:
        return 360.0 / self.sector_count


class KnobSample(BaseModel):
    t: float
    thumb: Tuple[float, float]
    index: Tuple[float, float]


class Crossing(BaseModel):
    t: float
    boundary: int
    direction: int
    sector: int


class WaveformSegment(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float
    samples: np.ndarray
    amplitude: float
    frequency: float
    shape: str


class KnobSession:
    """Streaming knob state: feed samples in time order, collect electrostatic segments"""

    def __init__(self, spec: KnobSpec, condition: str, settings: Optional[KnobSettings] = None,
                 start_sector: int = 0):
        if condition not in CONDITIONS:
            raise ConfigurationError(f"unknown knob condition {condition!r}, expected one of {', '.join(CONDITIONS)}")
        self.spec = spec
        self.condition = condition
        self.settings = settings or KnobSettings()
        self._offset = start_sector * spec.sector_width
        self.angle = self._offset
        self.velocity = 0.0
        self.sector = start_sector
        self.crossings: List[Crossing] = []
        self.segments: List[WaveformSegment] = []
        self._raw: Optional[float] = None
        self._unwrapped = 0.0
        self._start: Optional[float] = None
        self._last_t: Optional[float] = None
        self._t0: Optional[float] = None
        # index of the next output sample on the session clock
        self._clock = 0
        self._interval = self.settings.frame_period
        self._rates: Deque[float] = deque(maxlen=self.settings.velocity_window)
        # the start behaves as a forward entry into the start sector across its lower boundary
        self._last_boundary = start_sector
        self._last_direction = 1
        self._pulse_until = -math.inf
        self._phase = 0.0

    # ------------------------------------------------------------------ geometry

    def _finger_angle(self, sample: KnobSample) -> float:
        dx = sample.index[0] - sample.thumb[0]
        dy = sample.index[1] - sample.thumb[1]
        if math.hypot(dx, dy) < MIN_FINGER_GAP:
            raise GeometryError(f"thumb and index finger coincide at t={sample.t}")
        return math.degrees(math.atan2(dy, dx))

    def _update_angle(self, raw: float) -> float:
        if self._raw is None:
            self._start = raw
            self._unwrapped = raw
        else:
            delta = (raw - self._raw + 180.0) % 360.0 - 180.0
            self._unwrapped += delta
        self._raw = raw
        return self._offset + self.spec.orientation * (self._unwrapped - self._start)

    def _threshold(self, boundary: int, direction: int) -> float:
        edge = boundary * self.spec.sector_width
        if boundary == self._last_boundary and direction != self._last_direction:
            return edge + direction * self.settings.hysteresis
        return edge - BOUNDARY_EPS

    def _cross(self, t: float) -> List[Crossing]:
        found = []
        while True:
            up = self.sector + 1
            if self.angle >= self._threshold(up, 1):
                self.sector, boundary, direction = up, up, 1
            elif self.angle < self._threshold(self.sector, -1):
                boundary, direction = self.sector, -1
                self.sector -= 1
            else:
                return found
            self._last_boundary, self._last_direction = boundary, direction
            crossing = Crossing(t=t, boundary=boundary, direction=direction, sector=self.sector)
            self.crossings.append(crossing)
            found.append(crossing)

    # ------------------------------------------------------------------ output

    def _vf_frequency(self) -> float:
        s = self.settings
        return s.vf_min_freq + (s.vf_max_freq - s.vf_min_freq) * min(abs(self.velocity) / s.omega_max, 1.0)

    def _boundary_proximity(self) -> float:
        w = self.spec.sector_width
        offset = self.angle - math.floor(self.angle / w) * w
        distance = min(offset, w - offset)
        return 1.0 - min(distance / (w / 2), 1.0)

    def _segment(self, end: float) -> WaveformSegment:
        s = self.settings
        start = self._clock
        n = max(int(round((end - self._t0) * s.sample_rate)) - start, 0)
        self._clock = start + n
        t = self._t0 + start / s.sample_rate
        times = t + np.arange(n) / s.sample_rate
        if self.condition == "V":
            return WaveformSegment(t=t, samples=np.zeros(n), amplitude=0.0, frequency=0.0, shape="silence")

        detent = times < self._pulse_until
        if self.condition == "HD":
            samples = np.where(detent, s.detent_amplitude, 0.0)
            return WaveformSegment(t=t, samples=samples, amplitude=s.detent_amplitude if detent.any() else 0.0,
                                   frequency=0.0, shape="pulse" if detent.any() else "silence")

        if self.condition == "HD+VF":
            freq, amplitude = self._vf_frequency(), s.carrier_amplitude
        elif self.condition == "HD+BF":
            freq, amplitude = s.carrier_freq, s.carrier_amplitude * self._boundary_proximity()
        else:
            freq, amplitude = s.carrier_freq, s.carrier_amplitude
        phase = self._phase + 2 * np.pi * freq * np.arange(n) / s.sample_rate
        self._phase = (self._phase + 2 * np.pi * freq * n / s.sample_rate) % (2 * np.pi)
        samples = amplitude * np.sin(phase)
        if s.detent_style == "pulse":
            samples = np.where(detent, s.detent_amplitude, samples)
        else:
            samples = np.where(detent, 0.0, samples)
        return WaveformSegment(t=t, samples=samples, amplitude=amplitude, frequency=freq, shape="sine")

    # ------------------------------------------------------------------ stream

    def step(self, sample: KnobSample) -> WaveformSegment:
        """Consume one finger sample and emit the segment for [t, t + dt).

        dt is the latest sample interval (the frame period until a second
        sample arrives). Segments sit on one sample clock started at the first
        timestamp, so consecutive segments join without gaps or overlap.
        """
        if self._last_t is not None and sample.t <= self._last_t:
            raise StreamError(f"timestamp {sample.t} does not follow {self._last_t}")
        raw = self._finger_angle(sample)
        if self._last_t is None:
            self._t0 = sample.t
        else:
            self._interval = sample.t - self._last_t
        previous = self.angle
        self.angle = self._update_angle(raw)
        if self._last_t is not None:
            self._rates.append((self.angle - previous) / (sample.t - self._last_t))
            self.velocity = float(np.mean(self._rates))
        crossings = self._cross(sample.t)
        if crossings and self.condition != "V":
            self._pulse_until = sample.t + self.settings.detent_duration
        self._last_t = sample.t
        segment = self._segment(sample.t + self._interval)
        self.segments.append(segment)
        return segment

    def current_item(self) -> int:
        """Menu item under the knob; sectors map one-to-one onto items"""
        if self.spec.menu_length is None:
            return self.sector % self.spec.sector_count
        return min(max(self.sector, 0), self.spec.menu_length - 1)

    def waveform(self) -> Waveform:
        if not self.segments:
            return Waveform(sample_rate=self.settings.sample_rate, time=np.empty(0), piezo=np.empty(0),
                            electro=np.empty(0), routing=np.empty(0, dtype=np.int64))
        rate = self.settings.sample_rate
        times = np.concatenate([seg.t + np.arange(len(seg.samples)) / rate for seg in self.segments])
        electro = np.concatenate([seg.samples for seg in self.segments])
        return Waveform(sample_rate=rate, time=times, piezo=np.zeros(len(electro)), electro=electro,
                        routing=np.full(len(electro), IDLE))


def knob_step(session: KnobSession, sample: KnobSample) -> Tuple[KnobSession, WaveformSegment]:
    segment = session.step(sample)
    return session, segment


# --------------------------------------------------------------------------- trajectories

def load_trajectory(path: Union[str, Path]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MapFormatError(f"cannot read trajectory {path}: {e}")
    missing = set(TRAJECTORY_COLUMNS) - set(frame.columns)
    if missing:
        raise MapFormatError(f"trajectory {path} lacks columns {sorted(missing)}")
    return frame[TRAJECTORY_COLUMNS]


def save_trajectory(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    frame[TRAJECTORY_COLUMNS].to_csv(path, index=False)


def samples_from_frame(frame: pd.DataFrame) -> List[KnobSample]:
    return [KnobSample(t=row.t, thumb=(row.thumb_x, row.thumb_y), index=(row.index_x, row.index_y))
            for row in frame.itertuples(index=False)]


def trajectory_from_angles(spec: KnobSpec, times: np.ndarray, angles: np.ndarray,
                           start_angle: float = 0.0) -> pd.DataFrame:
    """Finger positions for a sequence of knob angles (degrees, in the knob's orientation)"""
    direction = np.radians(start_angle + spec.orientation * np.asarray(angles, dtype=float))
    cx, cy = spec.center
    return pd.DataFrame({
        "t": np.asarray(times, dtype=float),
        "thumb_x": np.full(len(times), cx),
        "thumb_y": np.full(len(times), cy),
        "index_x": cx + spec.radius * np.cos(direction),
        "index_y": cy + spec.radius * np.sin(direction),
    }, columns=TRAJECTORY_COLUMNS)


def constant_speed_trajectory(spec: KnobSpec, distance: float, speed: float, frame_period: float = 1.0 / 60.0,
                              hold: float = 0.5) -> pd.DataFrame:
    """Sweep ``distance`` degrees at ``speed`` deg/s, then rest for ``hold`` seconds"""
    count = int(math.ceil(distance / speed / frame_period + hold / frame_period)) + 1
    times = np.arange(count) * frame_period
    return trajectory_from_angles(spec, times, np.minimum(speed * times, distance))


def speed_ramp_trajectory(spec: KnobSpec, duration: float, max_speed: float,
                          frame_period: float = 1.0 / 60.0) -> pd.DataFrame:
    """Uniformly accelerating rotation from rest to ``max_speed`` deg/s"""
    times = np.arange(int(round(duration / frame_period)) + 1) * frame_period
    return trajectory_from_angles(spec, times, 0.5 * (max_speed / duration) * times ** 2)


def overshoot_trajectory(spec: KnobSpec, distance: float, overshoot: float, speed: float,
                         frame_period: float = 1.0 / 60.0, pause: float = 0.2, hold: float = 0.5) -> pd.DataFrame:
    """Run ``overshoot`` degrees past the target, pause, come back to the target sector centre"""
    settle = distance + spec.sector_width / 2
    peak = distance + overshoot
    t_out = peak / speed
    t_back = t_out + pause
    t_end = t_back + (peak - settle) / speed
    times = np.arange(int(math.ceil((t_end + hold) / frame_period)) + 1) * frame_period
    angles = np.where(times <= t_out, speed * times,
                      np.where(times <= t_back, peak, np.maximum(peak - speed * (times - t_back), settle)))
    return trajectory_from_angles(spec, times, angles)


# --------------------------------------------------------------------------- scenarios

class KnobTrial(BaseModel):
    model_config = ConfigDict(frozen=True)

    condition: Condition
    sectors: int
    distance: float

    def target_sector(self) -> int:
        width = 360.0 / self.sectors
        target = self.distance / width
        if abs(target - round(target)) > 1e-9:
            raise ConfigurationError(f"distance {self.distance} is not a whole number of {width} degree sectors")
        return int(round(target))


def trial_matrix(conditions: Sequence[str] = STUDY_CONDITIONS, sectors: Sequence[int] = SECTOR_PRESETS,
                 distances: Sequence[float] = DISTANCE_PRESETS) -> List[KnobTrial]:
    return [KnobTrial(condition=c, sectors=n, distance=d) for c, n, d in product(conditions, sectors, distances)]


def load_presets(path: Union[str, Path]) -> List[KnobTrial]:
    try:
        data = json.loads(Path(path).read_text())
        return [KnobTrial.model_validate(item) for item in data]
    except (OSError, json.JSONDecodeError, ValueError) as e:
        raise ConfigurationError(f"invalid knob presets {path}: {e}")


class ScenarioMetrics(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    completion_time: float
    overshoot_count: int
    recovery_time: float
    crossing_count: int
    detent_count: int
    waveform: Waveform

    def summary(self) -> dict:
        return self.model_dump(exclude={"waveform"})


def run_knob_scenario(spec: KnobSpec, condition: str, trajectory: Union[pd.DataFrame, str, Path],
                      target_sector: int, start_sector: int = 0,
                      settings: Optional[KnobSettings] = None) -> ScenarioMetrics:
    """Replay a trajectory and score the selection.

    Completion is the final entry into the target sector; an overshoot is an
    exit from the target sector past it; recovery runs from the first
    overshoot to the final entry.
    """
    frame = trajectory if isinstance(trajectory, pd.DataFrame) else load_trajectory(trajectory)
    session = KnobSession(spec, condition, settings, start_sector=start_sector)
    samples = samples_from_frame(frame)
    for sample in samples:
        session.step(sample)

    t0 = samples[0].t if samples else 0.0
    beyond = 1 if target_sector >= start_sector else -1
    entries = [c for c in session.crossings if c.sector == target_sector]
    misses = [c for c in session.crossings if c.sector == target_sector + beyond and c.direction == beyond]
    detents = len(session.crossings) if condition != "V" else 0
    if session.sector != target_sector or not (entries or start_sector == target_sector):
        partial = {"overshoot_count": len(misses), "crossing_count": len(session.crossings),
                   "final_sector": session.sector}
        raise ScenarioTimeoutError(f"trajectory ends in sector {session.sector}, never settling in {target_sector}",
                                   partial)
    final_entry = entries[-1].t if entries else t0
    recovery = final_entry - misses[0].t if misses else 0.0
    metrics = ScenarioMetrics(completion_time=final_entry - t0, overshoot_count=len(misses), recovery_time=recovery,
                              crossing_count=len(session.crossings), detent_count=detents,
                              waveform=session.waveform())
    logger.info("knob %s %d sectors: completion %.3f s, %d overshoots", condition, spec.sector_count,
                metrics.completion_time, metrics.overshoot_count)
    return metrics
