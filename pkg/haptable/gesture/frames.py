"""Contact images: background removal, high-pass filtering and blob extraction."""
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import cv2
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from haptable.errors import GeometryError, MapFormatError
from haptable.gesture.settings import GestureSettings

logger = logging.getLogger(__name__)


class ContactFrame(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    width: int = 640
    height: int = 480
    mask: np.ndarray
    timestamp: float = 0.0

    @model_validator(mode="after")
    def _check(self) -> "ContactFrame":
        mask = np.array(self.mask, dtype=bool)
        if mask.shape != (self.height, self.width):
            raise ValueError(f"mask shape {mask.shape} does not match {self.width}x{self.height}")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)
        return self

    @property
    def empty(self) -> bool:
        return not self.mask.any()


class Blob(BaseModel):
    area: int
    centroid: Tuple[float, float]
    orientation: float
    elongation: float


def _baseline(diff: np.ndarray, weights: np.ndarray, settings: GestureSettings) -> np.ndarray:
    """Low-pass estimate of ``diff`` from the pixels with weight 1 (normalised convolution)"""
    height, width = diff.shape
    size = (max(width // settings.baseline_downsample, 1), max(height // settings.baseline_downsample, 1))
    small = cv2.resize(diff * weights, size, interpolation=cv2.INTER_AREA)
    small_w = cv2.resize(weights, size, interpolation=cv2.INTER_AREA)
    num = cv2.GaussianBlur(small, (0, 0), settings.baseline_sigma)
    den = cv2.GaussianBlur(small_w, (0, 0), settings.baseline_sigma)
    low = np.where(den > 1e-3, num / np.maximum(den, 1e-3), 0.0).astype(np.float32)
    return cv2.resize(low, (width, height), interpolation=cv2.INTER_LINEAR)


def high_pass(raw: np.ndarray, background: np.ndarray, settings: GestureSettings) -> np.ndarray:
    """Background-subtracted image with slow illumination trends removed.

    The first pass finds bright contact regions; the second re-estimates the
    trend with those regions masked out so large palms do not lift it.
    """
    diff = raw.astype(np.float32) - background.astype(np.float32)
    ones = np.ones_like(diff)
    first = diff - _baseline(diff, ones, settings)
    contact = (first > settings.threshold).astype(np.uint8)
    contact = cv2.dilate(contact, np.ones((9, 9), np.uint8))
    return diff - _baseline(diff, ones - contact.astype(np.float32), settings)


def preprocess(raw: np.ndarray, background: np.ndarray, settings: Optional[GestureSettings] = None,
               timestamp: float = 0.0, largest_only: bool = True) -> ContactFrame:
    settings = settings or GestureSettings()
    if raw.shape != background.shape:
        raise GeometryError(f"frame {raw.shape} and background {background.shape} differ in size")
    if raw.ndim != 2:
        raise GeometryError("contact frames are single-channel images")
    binary = (high_pass(raw, background, settings) > settings.threshold).astype(np.uint8)
    count, labels, stats, _ = cv2.connectedComponentsWithStats(binary, connectivity=8)
    if count > 1 and largest_only:
        keep = 1 + int(np.argmax(stats[1:, cv2.CC_STAT_AREA]))
        mask = labels == keep
    else:
        mask = binary.astype(bool)
    height, width = raw.shape
    return ContactFrame(width=width, height=height, mask=mask, timestamp=timestamp)


def largest_component(mask: np.ndarray) -> np.ndarray:
    count, labels, stats, _ = cv2.connectedComponentsWithStats(mask.astype(np.uint8), connectivity=8)
    if count <= 1:
        return np.zeros(mask.shape, dtype=bool)
    return labels == 1 + int(np.argmax(stats[1:, cv2.CC_STAT_AREA]))


def _shape_axes(component: np.ndarray) -> Tuple[float, float]:
    m = cv2.moments(component, binaryImage=True)
    if m["m00"] == 0:
        return 0.0, 1.0
    mu20, mu02, mu11 = m["mu20"] / m["m00"], m["mu02"] / m["m00"], m["mu11"] / m["m00"]
    orientation = 0.5 * math.degrees(math.atan2(2 * mu11, mu20 - mu02))
    spread = math.sqrt(4 * mu11 ** 2 + (mu20 - mu02) ** 2)
    major, minor = (mu20 + mu02 + spread) / 2, (mu20 + mu02 - spread) / 2
    elongation = math.sqrt(major / minor) if minor > 1e-12 else float("inf")
    return orientation, elongation


def contact_blobs(mask: np.ndarray) -> List[Blob]:
    """Every connected contact region, largest first"""
    binary = np.asarray(mask).astype(np.uint8)
    count, labels, stats, centroids = cv2.connectedComponentsWithStats(binary, connectivity=8)
    blobs = []
    for label in range(1, count):
        component = (labels == label).astype(np.uint8)
        orientation, elongation = _shape_axes(component)
        blobs.append(Blob(area=int(stats[label, cv2.CC_STAT_AREA]),
                          centroid=(float(centroids[label][0]), float(centroids[label][1])),
                          orientation=orientation, elongation=elongation))
    blobs.sort(key=lambda b: -b.area)
    return blobs


def count_fingertips(mask: np.ndarray, settings: Optional[GestureSettings] = None) -> int:
    low, high = (settings or GestureSettings()).fingertip_area
    return sum(1 for blob in contact_blobs(mask) if low <= blob.area <= high)


# --------------------------------------------------------------------------- image files

def read_pgm(path: Union[str, Path]) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise MapFormatError(f"cannot read image {path}")
    return image


def write_pgm(path: Union[str, Path], image: np.ndarray) -> None:
    if not cv2.imwrite(str(path), np.asarray(image, dtype=np.uint8)):
        raise MapFormatError(f"cannot write image {path}")


def mask_to_frame(mask: np.ndarray, timestamp: float = 0.0) -> ContactFrame:
    height, width = mask.shape
    return ContactFrame(width=width, height=height, mask=mask, timestamp=timestamp)


def read_mask_csv(path: Union[str, Path]) -> np.ndarray:
    """Binary mask stored as a headerless CSV of 0/1 values, one image row per line"""
    try:
        values = pd.read_csv(path, header=None).to_numpy()
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MapFormatError(f"cannot read mask {path}: {e}")
    if not np.isin(values, (0, 1)).all():
        raise MapFormatError(f"mask {path} holds values other than 0 and 1")
    return values.astype(bool)


def write_mask_csv(path: Union[str, Path], mask: np.ndarray) -> None:
    pd.DataFrame(np.asarray(mask, dtype=np.uint8)).to_csv(path, header=False, index=False)


def read_frame(path: Union[str, Path]) -> np.ndarray:
    """PGM images load as grey levels, CSV files as binary masks"""
    return read_mask_csv(path) if Path(path).suffix.lower() == ".csv" else read_pgm(path)
