"""Streaming gesture recognition: gate window, then the static or dynamic classifier."""
import logging
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel

from haptable.errors import DegenerateContourError, StreamError, WristNotFoundError
from haptable.gesture.classifier import LinearModel, classify_dynamic, classify_static
from haptable.gesture.features import DYNAMIC_FRAMES, hand_descriptor
from haptable.gesture.frames import ContactFrame, largest_component, mask_to_frame, preprocess
from haptable.gesture.gate import gate
from haptable.gesture.settings import GestureSettings

logger = logging.getLogger(__name__)


class Recognition(BaseModel):
    kind: Literal["static", "dynamic"]
    label: str
    score: float
    # stream time of the frame that completed the decision
    timestamp: float
    latency: float


class GestureRecognizer:
    """Single-writer session: feed frames in timestamp order, read decisions back.

    A touch starts with the first frame holding contact and ends with the first
    empty frame. Each touch yields at most one recognition: dynamic as soon as
    the gate sees motion and four frames are available, static once a full
    gate window has stayed still.
    """

    def __init__(self, static_model: Optional[LinearModel] = None, dynamic_model: Optional[LinearModel] = None,
                 settings: Optional[GestureSettings] = None, background: Optional[np.ndarray] = None):
        self.static_model = static_model
        self.dynamic_model = dynamic_model
        self.settings = settings or GestureSettings()
        self.background = background
        self.window: List[ContactFrame] = []
        self.decided = False
        self.last_timestamp: Optional[float] = None
        self.history: List[Recognition] = []

    def reset(self) -> None:
        self.window = []
        self.decided = False

    def _as_frame(self, frame: Union[ContactFrame, np.ndarray], timestamp: float) -> ContactFrame:
        if isinstance(frame, ContactFrame):
            return frame
        frame = np.asarray(frame)
        if frame.dtype == bool:
            return mask_to_frame(frame, timestamp)
        if self.background is None:
            raise StreamError("raw frames need a background image")
        return preprocess(frame, self.background, self.settings, timestamp=timestamp, largest_only=False)

    def _emit(self, kind: str, label: str, score: float) -> Recognition:
        last = self.window[-1].timestamp
        result = Recognition(kind=kind, label=label, score=score, timestamp=last,
                             latency=last - self.window[0].timestamp)
        self.decided = True
        self.history.append(result)
        logger.info("recognised %s gesture %s (score %.3f)", kind, label, score)
        return result

    def push(self, frame: Union[ContactFrame, np.ndarray], timestamp: Optional[float] = None) -> Optional[Recognition]:
        """Add one frame; returns a recognition when this frame completes one"""
        if timestamp is None:
            timestamp = frame.timestamp if isinstance(frame, ContactFrame) else 0.0
        if self.last_timestamp is not None and timestamp <= self.last_timestamp:
            raise StreamError(f"timestamp {timestamp} does not follow {self.last_timestamp}")
        self.last_timestamp = timestamp
        contact = self._as_frame(frame, timestamp)

        if contact.empty:
            self.reset()
            return None
        if self.decided:
            return None
        self.window.append(contact)
        if len(self.window) < 2:
            return None

        decision = gate(self.window[:self.settings.gate_window], self.settings)
        if decision.kind == "dynamic":
            if len(self.window) < DYNAMIC_FRAMES:
                return None
            label, score = classify_dynamic(self.window[:DYNAMIC_FRAMES], self.dynamic_model, self.settings)
            return self._emit("dynamic", label, score)
        if len(self.window) < self.settings.gate_window:
            return None
        try:
            descriptor = hand_descriptor(largest_component(contact.mask), self.settings)
        except (WristNotFoundError, DegenerateContourError) as e:
            logger.warning("static pose at t=%.3f not classified: %s", timestamp, e)
            self.decided = True
            return None
        label, score = classify_static(descriptor, self.static_model)
        return self._emit("static", label, score)
