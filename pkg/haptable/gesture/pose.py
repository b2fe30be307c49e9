"""Hand pose: bounding circle, wrist arc and canonical orientation.

The reference edge is the bottom edge of the table image. A pose is canonical
when the line from the wrist-arc midpoint to the circle centre points straight
up the image, perpendicular to that edge.
"""
import logging
import math
from typing import Optional, Tuple

import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict

from haptable.errors import GeometryError, WristNotFoundError
from haptable.gesture.geometry import Circle, mask_contour, min_enclosing_circle
from haptable.gesture.settings import GestureSettings

logger = logging.getLogger(__name__)

REFERENCE_EDGE = "bottom"


class HandPose(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    contour: np.ndarray
    circle: Circle
    # inclusive contour indices; the arc may wrap past the end of the contour
    wrist_start: int
    wrist_end: int
    theta: float
    reference_edge: str = REFERENCE_EDGE

    @property
    def wrist_indices(self) -> np.ndarray:
        n = len(self.contour)
        length = (self.wrist_end - self.wrist_start) % n + 1
        return (self.wrist_start + np.arange(length)) % n

    @property
    def wrist_arc(self) -> np.ndarray:
        return self.contour[self.wrist_indices]

    @property
    def wrist_midpoint(self) -> Tuple[float, float]:
        return _arc_midpoint(self.circle, self.wrist_arc)


class CanonicalPose(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    theta: float
    pose: HandPose
    rotated: np.ndarray
    hand: np.ndarray


def _longest_run(flags: np.ndarray) -> Optional[Tuple[int, int]]:
    """(start, end) inclusive indices of the longest cyclic run of True"""
    n = len(flags)
    if not flags.any():
        return None
    shift = int(np.argmin(flags))
    rolled = np.roll(flags, -shift)
    best, best_len, start = None, 0, None
    for i, value in enumerate(np.append(rolled, False)):
        if value and start is None:
            start = i
        elif not value and start is not None:
            if i - start > best_len:
                best, best_len = (start, i - 1), i - start
            start = None
    return (best[0] + shift) % n, (best[1] + shift) % n


def _arc_angles(circle: Circle, arc: np.ndarray) -> np.ndarray:
    return np.unwrap(np.arctan2(arc[:, 1] - circle.cy, arc[:, 0] - circle.cx))


def _arc_midpoint(circle: Circle, arc: np.ndarray) -> Tuple[float, float]:
    angles = _arc_angles(circle, arc)
    mid = (angles[0] + angles[-1]) / 2
    return circle.cx + circle.r * math.cos(mid), circle.cy + circle.r * math.sin(mid)


def canonical_angle(circle: Circle, wrist_mid: Tuple[float, float]) -> float:
    """Counter-clockwise rotation (degrees) that points the wrist-to-centre line up the image"""
    dx = circle.cx - wrist_mid[0]
    dy = circle.cy - wrist_mid[1]
    # image y grows downwards
    heading = math.degrees(math.atan2(-dy, dx))
    return (90.0 - heading) % 360.0


def locate_pose(mask: np.ndarray, settings: Optional[GestureSettings] = None) -> HandPose:
    settings = settings or GestureSettings()
    contour = mask_contour(mask)
    if len(contour) < 3:
        raise WristNotFoundError("contour too small to carry a wrist arc")
    circle = min_enclosing_circle(contour, seed=settings.seed)
    distance = np.hypot(contour[:, 0] - circle.cx, contour[:, 1] - circle.cy)
    touching = distance >= circle.r - settings.wrist_tolerance
    if touching.all():
        raise WristNotFoundError("contour follows the bounding circle everywhere")
    run = _longest_run(touching)
    if run is None:
        raise WristNotFoundError("no contour segment meets the bounding circle")
    start, end = run
    n = len(contour)
    arc = contour[(start + np.arange((end - start) % n + 1)) % n]
    span = abs(math.degrees(_arc_angles(circle, arc)[-1] - _arc_angles(circle, arc)[0]))
    if span < settings.min_wrist_arc:
        raise WristNotFoundError(f"longest arc on the bounding circle spans {span:.1f} deg, "
                                 f"below {settings.min_wrist_arc} deg")
    theta = canonical_angle(circle, _arc_midpoint(circle, arc))
    return HandPose(contour=contour, circle=circle, wrist_start=start, wrist_end=end, theta=theta)


def rotate_mask(mask: np.ndarray, center: Tuple[float, float], angle: float) -> np.ndarray:
    """Rotate a binary mask counter-clockwise by ``angle`` degrees about ``center``"""
    height, width = mask.shape
    matrix = cv2.getRotationMatrix2D((float(center[0]), float(center[1])), angle, 1.0)
    rotated = cv2.warpAffine(mask.astype(np.uint8) * 255, matrix, (width, height), flags=cv2.INTER_NEAREST)
    return rotated > 127


def rotate_points(points: np.ndarray, center: Tuple[float, float], angle: float) -> np.ndarray:
    matrix = cv2.getRotationMatrix2D((float(center[0]), float(center[1])), angle, 1.0)
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return points @ matrix[:, :2].T + matrix[:, 2]


def remove_wrist(mask: np.ndarray, circle: Circle, arc_ends: np.ndarray) -> np.ndarray:
    """Drop the pixels cut off beyond the chord joining the wrist arc's ends"""
    (x1, y1), (x2, y2) = arc_ends
    height, width = mask.shape
    ys, xs = np.mgrid[0:height, 0:width]
    side = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
    center_side = (x2 - x1) * (circle.cy - y1) - (y2 - y1) * (circle.cx - x1)
    if center_side == 0:
        return mask.copy()
    return mask & (np.sign(side) == np.sign(center_side))


def canonicalize(mask: np.ndarray, settings: Optional[GestureSettings] = None) -> CanonicalPose:
    """Rotate the hand upright about its circle centre and strip the wrist.

    ``rotated`` keeps the wrist so it can be canonicalised again; ``hand`` is
    the wrist-free mask used for descriptors.
    """
    settings = settings or GestureSettings()
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise GeometryError("mask has no contact pixels")
    pose = locate_pose(mask, settings)
    theta = pose.theta
    offset = min(theta, 360.0 - theta)
    angle = 0.0 if offset < settings.rotation_snap else theta
    rotated = rotate_mask(mask, pose.circle.center, angle) if angle else mask.copy()
    arc = pose.wrist_arc
    ends = rotate_points(np.array([arc[0], arc[-1]]), pose.circle.center, angle)
    hand = remove_wrist(rotated, pose.circle, ends)
    logger.debug("canonical angle %.2f deg, wrist arc of %d points", theta, len(arc))
    return CanonicalPose(theta=theta, pose=pose, rotated=rotated, hand=hand)
