"""Minimum enclosing circle (randomised incremental construction) and contour extraction."""
import math
import random
from typing import List, Optional, Sequence, Tuple

import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict

from haptable.errors import GeometryError

Point = Tuple[float, float]

# Relative slack for "inside the circle" tests
_INSIDE_EPS = 1 + 1e-12


class Circle(BaseModel):
    model_config = ConfigDict(frozen=True)

    cx: float
    cy: float
    r: float

    @property
    def center(self) -> Point:
        return self.cx, self.cy

    def contains(self, p: Sequence[float], tolerance: float = 1e-9) -> bool:
        return math.hypot(p[0] - self.cx, p[1] - self.cy) <= self.r * _INSIDE_EPS + tolerance


def _inside(c: Circle, p: Point) -> bool:
    return math.hypot(p[0] - c.cx, p[1] - c.cy) <= c.r * _INSIDE_EPS


def diameter_circle(a: Point, b: Point) -> Circle:
    cx, cy = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
    return Circle(cx=cx, cy=cy, r=max(math.hypot(cx - a[0], cy - a[1]), math.hypot(cx - b[0], cy - b[1])))


def circumcircle(a: Point, b: Point, c: Point) -> Optional[Circle]:
    # computed about the bounding box centre for accuracy
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by)) * 2.0
    if d == 0.0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - p[0], y - p[1]) for p in (a, b, c))
    return Circle(cx=x, cy=y, r=r)


def _cross(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _circle_two_points(points: List[Point], p: Point, q: Point) -> Circle:
    circ = diameter_circle(p, q)
    left: Optional[Circle] = None
    right: Optional[Circle] = None
    for r in points:
        if _inside(circ, r):
            continue
        cross = _cross(p[0], p[1], q[0], q[1], r[0], r[1])
        c = circumcircle(p, q, r)
        if c is None:
            continue
        side = _cross(p[0], p[1], q[0], q[1], c.cx, c.cy)
        if cross > 0.0 and (left is None or side > _cross(p[0], p[1], q[0], q[1], left.cx, left.cy)):
            left = c
        elif cross < 0.0 and (right is None or side < _cross(p[0], p[1], q[0], q[1], right.cx, right.cy)):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left.r <= right.r else right


def _circle_one_point(points: List[Point], p: Point) -> Circle:
    c = Circle(cx=p[0], cy=p[1], r=0.0)
    for i, q in enumerate(points):
        if not _inside(c, q):
            c = diameter_circle(p, q) if c.r == 0.0 else _circle_two_points(points[:i + 1], p, q)
    return c


def enclosing_circle(points: Sequence[Sequence[float]], seed: int = 0) -> Circle:
    """Smallest circle containing every point; expected linear time, deterministic per seed"""
    shuffled = [(float(x), float(y)) for x, y in points]
    if not shuffled:
        raise GeometryError("cannot enclose an empty point set")
    random.Random(seed).shuffle(shuffled)
    c: Optional[Circle] = None
    for i, p in enumerate(shuffled):
        if c is None or not _inside(c, p):
            c = _circle_one_point(shuffled[:i + 1], p)
    return c


def mask_contour(mask: np.ndarray) -> np.ndarray:
    """Outer boundary of the largest region as an ordered (N, 2) float array of (x, y) pixels"""
    contours, _ = cv2.findContours(np.asarray(mask).astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_NONE)
    if not contours:
        raise GeometryError("mask has no contact pixels")
    largest = max(contours, key=lambda c: (cv2.contourArea(c), len(c)))
    return largest.reshape(-1, 2).astype(float)


def min_enclosing_circle(shape: np.ndarray, seed: int = 0) -> Circle:
    """Minimum enclosing circle of a binary mask's contour, or of an (N, 2) point array"""
    shape = np.asarray(shape)
    if shape.dtype == bool or (shape.ndim == 2 and shape.shape[1] != 2):
        points = mask_contour(shape)
    else:
        points = shape.astype(float)
    if len(points) == 0:
        raise GeometryError("cannot enclose an empty point set")
    # only hull vertices can touch the circle
    if len(points) >= 3:
        points = points[cv2.convexHull(points.astype(np.float32), returnPoints=False).ravel()]
    return enclosing_circle(points, seed)
