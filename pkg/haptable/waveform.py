"""Two-channel output buffers (one piezo signal, one electrostatic signal) and their analysis."""
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.io import wavfile
from scipy.signal import find_peaks

from haptable.errors import MapFormatError
from haptable.vibmap import ACTUATORS, actuator_index

logger = logging.getLogger(__name__)

IDLE = -1
PCM_FULL_SCALE = 32767


class Waveform(BaseModel):
    """Sampled output of the two physical channels.

    ``routing`` holds the actuator index driven by the piezo channel at each
    sample (-1 when the relay bank is idle), so a single piezo signal is active
    at any instant by construction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sample_rate: int
    time: np.ndarray
    piezo: np.ndarray
    electro: np.ndarray
    routing: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "Waveform":
        n = len(self.time)
        if any(len(a) != n for a in (self.piezo, self.electro, self.routing)):
            raise ValueError("waveform channels must have equal length")
        for name in ("time", "piezo", "electro"):
            array = np.array(getattr(self, name), dtype=float)
            array.flags.writeable = False
            object.__setattr__(self, name, array)
        routing = np.array(self.routing, dtype=np.int64)
        routing.flags.writeable = False
        object.__setattr__(self, "routing", routing)
        return self

    @property
    def duration(self) -> float:
        return len(self.time) / self.sample_rate

    def actuator_signal(self, actuator: str) -> np.ndarray:
        """The piezo channel as seen by one actuator (zero while routed elsewhere)"""
        return np.where(self.routing == actuator_index(actuator), self.piezo, 0.0)

    def per_actuator(self) -> Dict[str, np.ndarray]:
        return {actuator: self.actuator_signal(actuator) for actuator in ACTUATORS}

    def segment(self, start: float, stop: float) -> np.ndarray:
        """Piezo samples with start <= t < stop"""
        mask = (self.time >= start - 1e-12) & (self.time < stop - 1e-12)
        return self.piezo[mask]

    def to_frame(self) -> pd.DataFrame:
        names = np.array(ACTUATORS + ("",), dtype=object)
        return pd.DataFrame({
            "time": self.time,
            "piezo": self.piezo,
            "electro": self.electro,
            "actuator": names[self.routing],
        })


def silent_waveform(sample_rate: int, samples: int, start: float = 0.0) -> Waveform:
    return Waveform(sample_rate=sample_rate, time=start + np.arange(samples) / sample_rate,
                    piezo=np.zeros(samples), electro=np.zeros(samples), routing=np.full(samples, IDLE))


def concatenate(waveforms: Sequence[Waveform]) -> Waveform:
    if not waveforms:
        raise ValueError("nothing to concatenate")
    rate = waveforms[0].sample_rate
    return Waveform(sample_rate=rate,
                    time=np.concatenate([w.time for w in waveforms]),
                    piezo=np.concatenate([w.piezo for w in waveforms]),
                    electro=np.concatenate([w.electro for w in waveforms]),
                    routing=np.concatenate([w.routing for w in waveforms]))


def save_waveform_csv(waveform: Waveform, path: Union[str, Path]) -> None:
    waveform.to_frame().to_csv(path, index=False)
    logger.info("wrote waveform %s (%d samples)", path, len(waveform.time))


def load_waveform_csv(path: Union[str, Path], sample_rate: int) -> Waveform:
    try:
        frame = pd.read_csv(path, float_precision="round_trip", keep_default_na=False)
    except (OSError, pd.errors.ParserError) as e:
        raise MapFormatError(f"cannot read waveform {path}: {e}")
    missing = {"time", "piezo", "electro", "actuator"} - set(frame.columns)
    if missing:
        raise MapFormatError(f"waveform {path} lacks columns {sorted(missing)}")
    lookup = {name: i for i, name in enumerate(ACTUATORS)}
    lookup[""] = IDLE
    try:
        routing = frame["actuator"].astype(str).map(lookup).to_numpy(dtype=np.int64)
    except (TypeError, ValueError):
        raise MapFormatError(f"waveform {path} names an unknown actuator")
    return Waveform(sample_rate=sample_rate, time=frame["time"].to_numpy(), piezo=frame["piezo"].to_numpy(),
                    electro=frame["electro"].to_numpy(), routing=routing)


def save_waveform_pcm(waveform: Waveform, path: Union[str, Path], full_scale: float) -> None:
    """16-bit stereo WAV: left = piezo, right = electrostatic; ``full_scale`` volts map to int16 max"""
    stereo = np.stack([waveform.piezo, waveform.electro], axis=1) / full_scale
    pcm = np.round(np.clip(stereo, -1.0, 1.0) * PCM_FULL_SCALE).astype(np.int16)
    wavfile.write(str(path), waveform.sample_rate, pcm)
    logger.info("wrote PCM %s", path)


def dominant_frequency(signal: np.ndarray, sample_rate: int) -> float:
    """Frequency of the largest non-DC FFT bin"""
    spectrum = np.abs(np.fft.rfft(np.asarray(signal, dtype=float)))
    freqs = np.fft.rfftfreq(len(signal), d=1.0 / sample_rate)
    spectrum[0] = 0.0
    return float(freqs[int(np.argmax(spectrum))])


def envelope_peaks(signal: np.ndarray, sample_rate: int, start: float = 0.0,
                   floor: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Times and values of the local maxima of |signal|, a peak-tracking envelope estimate"""
    magnitude = np.abs(np.asarray(signal, dtype=float))
    # flat tops count once, at their middle sample
    peaks, _ = find_peaks(magnitude)
    if floor is not None:
        peaks = peaks[magnitude[peaks] > floor]
    return start + peaks / sample_rate, magnitude[peaks]
