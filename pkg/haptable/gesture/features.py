"""Feature vectors for the static and dynamic classifiers."""
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from haptable.errors import DegenerateContourError, GeometryError, StreamError
from haptable.gesture.efd import DescriptorVector, efd
from haptable.gesture.frames import ContactFrame, contact_blobs, count_fingertips, largest_component
from haptable.gesture.geometry import mask_contour
from haptable.gesture.pose import canonicalize
from haptable.gesture.settings import GestureSettings

DYNAMIC_FRAMES = 4
TRAJECTORY_FEATURES = ("mean_step", "coherence", "radial", "radial_abs", "tangential_abs", "log_area")

MaskLike = Union[ContactFrame, np.ndarray]


def as_mask(frame: MaskLike) -> np.ndarray:
    return frame.mask if isinstance(frame, ContactFrame) else np.asarray(frame, dtype=bool)


def static_features(descriptor: DescriptorVector) -> np.ndarray:
    """Odd harmonics as they are, even harmonics by magnitude"""
    coeffs = descriptor.coefficients
    return np.concatenate([coeffs[0::2].ravel(), np.abs(coeffs[1::2]).ravel()])


def static_feature_size(harmonics: int) -> int:
    return 4 * harmonics


def hand_descriptor(mask: MaskLike, settings: Optional[GestureSettings] = None) -> DescriptorVector:
    """Canonicalise the hand, drop the wrist and describe the remaining outline"""
    settings = settings or GestureSettings()
    canonical = canonicalize(as_mask(mask), settings)
    return efd(mask_contour(canonical.hand), settings.harmonics)


def _blob_descriptor(mask: np.ndarray, harmonics: int) -> np.ndarray:
    try:
        return static_features(efd(mask_contour(largest_component(mask)), harmonics))
    except (GeometryError, DegenerateContourError):
        return np.zeros(static_feature_size(harmonics))


def track_contacts(masks: Sequence[np.ndarray]) -> List[np.ndarray]:
    """Follow each first-frame contact through the window by nearest centroid; tracks are (frames, 2)"""
    blobs = [contact_blobs(m) for m in masks]
    if not blobs or not blobs[0]:
        return []
    tracks = []
    for blob in blobs[0]:
        position = np.array(blob.centroid)
        track = [position]
        for later in blobs[1:]:
            if later:
                centroids = np.array([b.centroid for b in later])
                position = centroids[int(np.argmin(np.hypot(*(centroids - position).T)))]
            track.append(position)
        tracks.append(np.array(track))
    return tracks


def trajectory_summary(masks: Sequence[np.ndarray]) -> np.ndarray:
    """Motion of the contacts between the first and last frame of the window"""
    tracks = track_contacts(masks)
    if not tracks:
        return np.zeros(len(TRAJECTORY_FEATURES))
    starts = np.array([t[0] for t in tracks])
    steps = np.array([t[-1] - t[0] for t in tracks])
    lengths = np.hypot(steps[:, 0], steps[:, 1])
    mean_step = float(lengths.mean())
    coherence = float(np.hypot(*steps.mean(axis=0)) / mean_step) if mean_step > 0 else 0.0

    offsets = starts - starts.mean(axis=0)
    norms = np.hypot(offsets[:, 0], offsets[:, 1])
    units = np.where(norms[:, None] > 1e-9, offsets / np.maximum(norms, 1e-9)[:, None], 0.0)
    radial = np.sum(steps * units, axis=1)
    tangential = units[:, 0] * steps[:, 1] - units[:, 1] * steps[:, 0]
    areas = [b.area for b in contact_blobs(masks[0])]
    return np.array([mean_step, coherence, float(radial.mean()), float(np.abs(radial).mean()),
                     abs(float(tangential.mean())), math.log(float(np.mean(areas)))])


def dynamic_blocks(harmonics: int) -> Tuple[int, ...]:
    """Sizes of the descriptor, finger-count and trajectory blocks"""
    return static_feature_size(harmonics), 1, len(TRAJECTORY_FEATURES)


def dynamic_features(frames: Sequence[MaskLike], settings: Optional[GestureSettings] = None) -> np.ndarray:
    settings = settings or GestureSettings()
    if len(frames) < DYNAMIC_FRAMES:
        raise StreamError(f"dynamic gestures need {DYNAMIC_FRAMES} frames, got {len(frames)}")
    masks = [as_mask(f) for f in frames[:DYNAMIC_FRAMES]]
    return np.concatenate([
        _blob_descriptor(masks[0], settings.harmonics),
        [float(count_fingertips(masks[0], settings))],
        trajectory_summary(masks),
    ])


def block_weights(blocks: Sequence[int]) -> np.ndarray:
    """Per-feature weights giving every block the same total variance after standardisation"""
    return np.concatenate([np.full(size, 1.0 / math.sqrt(size)) for size in blocks])
