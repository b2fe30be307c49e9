"""Static/dynamic gate over a short window of contact frames."""
import logging
from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from haptable.errors import StreamError
from haptable.gesture.features import MaskLike, as_mask, track_contacts
from haptable.gesture.frames import contact_blobs
from haptable.gesture.settings import GestureSettings

logger = logging.getLogger(__name__)


class GateDecision(BaseModel):
    kind: Literal["static", "dynamic"]
    displacement: float
    rotation: float


def _orientation_change(first: np.ndarray, last: np.ndarray, min_elongation: float) -> float:
    a, b = contact_blobs(first), contact_blobs(last)
    if not a or not b or a[0].elongation <= min_elongation or b[0].elongation <= min_elongation:
        return 0.0
    change = (b[0].orientation - a[0].orientation + 90.0) % 180.0 - 90.0
    return abs(change)


def gate(frames: Sequence[MaskLike], settings: Optional[GestureSettings] = None) -> GateDecision:
    """Dynamic when any contact moves more than the displacement threshold or the main contact turns"""
    settings = settings or GestureSettings()
    if len(frames) < 2:
        raise StreamError("the gate needs at least two frames")
    masks = [as_mask(f) for f in frames]
    tracks = track_contacts(masks)
    displacement = max((float(np.max(np.hypot(*(t - t[0]).T))) for t in tracks), default=0.0)
    rotation = _orientation_change(masks[0], masks[-1], settings.gate_elongation)
    dynamic = displacement > settings.gate_displacement or rotation > settings.gate_rotation
    logger.debug("gate: displacement %.2f px, rotation %.2f deg", displacement, rotation)
    return GateDecision(kind="dynamic" if dynamic else "static", displacement=displacement, rotation=rotation)
