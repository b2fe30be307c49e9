"""Vibration map data model, persistence and bilinear interpolation.

A vibration map holds one displacement FRF magnitude curve (um/Vp) per grid
point and excitation case, all sharing one uniform frequency axis. Grid points
are numbered row-major from the top-left corner starting at 1.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from haptable.errors import ConfigurationError, ExtrapolationError, GeometryError, MapFormatError

logger = logging.getLogger(__name__)

Actuator = Literal["PA", "PB", "PC", "PD", "PALL"]
ACTUATORS: Tuple[str, ...] = ("PA", "PB", "PC", "PD", "PALL")
PATCH_IDS: Tuple[str, ...] = ("PA", "PB", "PC", "PD")
Provenance = Literal["synthetic", "measured", "fixture"]

FORMAT_MAGIC = "#haptable-vibmap 1"
NUMBERING = "row-major-top-left"

# Coordinates closer than this (mm, or grid units) are treated as coincident
SNAP_TOLERANCE = 1e-9


def _frozen_array(values) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True)
    array.flags.writeable = False
    return array


def actuator_index(actuator: str) -> int:
    try:
        return ACTUATORS.index(actuator)
    except ValueError:
        raise ConfigurationError(f"unknown actuator {actuator!r}, expected one of {', '.join(ACTUATORS)}")


class FrequencyAxis(BaseModel):
    """Uniform frequency axis in Hz"""

    model_config = ConfigDict(frozen=True)

    start: float = 0.0
    step: float = 1.0
    count: int = 626

    @field_validator("step")
    @classmethod
    def _positive_step(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("axis step must be positive")
        return value

    @field_validator("count")
    @classmethod
    def _positive_count(cls, value: int) -> int:
        if value < 1:
            raise ValueError("axis needs at least one bin")
        return value

    @property
    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count, dtype=float)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def bin_of(self, freq: float) -> int:
        """Index of the bin holding ``freq``; the frequency must sit on the axis."""
        position = (freq - self.start) / self.step
        index = int(round(position))
        if abs(position - index) > 1e-6 or not 0 <= index < self.count:
            raise ConfigurationError(f"frequency {freq} Hz is not a bin of the axis {self.start}..{self.stop} Hz")
        return index


class GridSpec(BaseModel):
    """Measurement grid; spacing and origin in mm"""

    model_config = ConfigDict(frozen=True)

    rows: int = 7
    cols: int = 12
    spacing: float = 60.0
    origin: Tuple[float, float] = (41.73, 43.645)

    @field_validator("rows", "cols")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("grid needs at least one row and one column")
        return value

    @field_validator("spacing")
    @classmethod
    def _positive_spacing(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("grid spacing must be positive")
        return value

    @property
    def point_count(self) -> int:
        return self.rows * self.cols

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the grid rectangle"""
        ox, oy = self.origin
        return ox, oy, ox + (self.cols - 1) * self.spacing, oy + (self.rows - 1) * self.spacing

    def coordinates(self, index: int) -> Tuple[float, float]:
        if not 1 <= index <= self.point_count:
            raise GeometryError(f"grid index {index} out of range 1..{self.point_count}")
        row, col = divmod(index - 1, self.cols)
        return self.origin[0] + col * self.spacing, self.origin[1] + row * self.spacing

    def all_coordinates(self) -> np.ndarray:
        return np.array([self.coordinates(i) for i in range(1, self.point_count + 1)], dtype=float)


class FrfCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    freq_axis_ref: FrequencyAxis
    magnitudes: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "FrfCurve":
        mags = _frozen_array(self.magnitudes)
        if mags.ndim != 1 or mags.shape[0] != self.freq_axis_ref.count:
            raise ValueError("curve length does not match its frequency axis")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ValueError("curve magnitudes must be finite and non-negative")
        object.__setattr__(self, "magnitudes", mags)
        return self


class VibrationMap(BaseModel):
    """Immutable FRF grid.

    ``magnitudes`` has shape (rows*cols, 5, bins); axis 1 follows ``ACTUATORS``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: GridSpec
    freq_axis: FrequencyAxis
    magnitudes: np.ndarray
    provenance: Provenance = "synthetic"

    @model_validator(mode="after")
    def _check(self) -> "VibrationMap":
        mags = _frozen_array(self.magnitudes)
        expected = (self.grid.point_count, len(ACTUATORS), self.freq_axis.count)
        if mags.shape != expected:
            raise ValueError(f"map magnitudes have shape {mags.shape}, expected {expected}")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ValueError("map magnitudes must be finite and non-negative")
        object.__setattr__(self, "magnitudes", mags)
        return self

    @property
    def curve_count(self) -> int:
        return self.magnitudes.shape[0] * self.magnitudes.shape[1]

    def curve(self, index: int, actuator: str) -> FrfCurve:
        if not 1 <= index <= self.grid.point_count:
            raise GeometryError(f"grid index {index} out of range 1..{self.grid.point_count}")
        return FrfCurve(freq_axis_ref=self.freq_axis,
                        magnitudes=self.magnitudes[index - 1, actuator_index(actuator)].copy())

    @property
    def curves(self) -> Dict[Tuple[int, str], FrfCurve]:
        return {(i, act): self.curve(i, act)
                for i in range(1, self.grid.point_count + 1) for act in ACTUATORS}

    def same_as(self, other: "VibrationMap") -> bool:
        return (self.grid == other.grid and self.freq_axis == other.freq_axis
                and self.provenance == other.provenance
                and np.array_equal(self.magnitudes, other.magnitudes))


def point_coordinates(vmap: Union[VibrationMap, GridSpec], index: int) -> Tuple[float, float]:
    grid = vmap.grid if isinstance(vmap, VibrationMap) else vmap
    return grid.coordinates(index)


def grid_index_at(vmap: VibrationMap, point: Sequence[float]) -> Optional[int]:
    """Grid index of the node at ``point``, or None when the point is off-grid"""
    grid = vmap.grid
    u = (point[0] - grid.origin[0]) / grid.spacing
    v = (point[1] - grid.origin[1]) / grid.spacing
    col, row = round(u), round(v)
    if abs(u - col) > SNAP_TOLERANCE or abs(v - row) > SNAP_TOLERANCE:
        return None
    if not (0 <= col < grid.cols and 0 <= row < grid.rows):
        return None
    return int(row * grid.cols + col + 1)


def _grid_unit(position: float, cells: int) -> Tuple[int, float]:
    """Split a grid-unit coordinate into (lower node, fraction), snapping onto nodes"""
    nearest = round(position)
    if abs(position - nearest) <= SNAP_TOLERANCE:
        position = float(nearest)
    if cells == 0:
        return 0, 0.0
    lower = min(int(math.floor(position)), cells - 1)
    return lower, position - lower


def bilinear_weights(grid: GridSpec, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Corner node indices (0-based, shape (n, 4)) and weights for each point.

    Raises ExtrapolationError for any point outside the grid rectangle.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    indices = np.empty((points.shape[0], 4), dtype=np.int64)
    weights = np.empty((points.shape[0], 4), dtype=float)
    max_u, max_v = grid.cols - 1, grid.rows - 1
    for k, (x, y) in enumerate(points):
        u = (x - grid.origin[0]) / grid.spacing
        v = (y - grid.origin[1]) / grid.spacing
        if not (-SNAP_TOLERANCE <= u <= max_u + SNAP_TOLERANCE and -SNAP_TOLERANCE <= v <= max_v + SNAP_TOLERANCE):
            raise ExtrapolationError(f"point ({x:.3f}, {y:.3f}) mm lies outside the instrumented grid")
        c0, fx = _grid_unit(min(max(u, 0.0), max_u), max_u)
        r0, fy = _grid_unit(min(max(v, 0.0), max_v), max_v)
        c1 = min(c0 + 1, max_u)
        r1 = min(r0 + 1, max_v)
        indices[k] = (r0 * grid.cols + c0, r0 * grid.cols + c1, r1 * grid.cols + c0, r1 * grid.cols + c1)
        weights[k] = ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)
    return indices, weights


def _blend(values: np.ndarray, indices: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # values: (points, ..., bins) node data; result keeps the trailing axes
    shape = (indices.shape[0],) + (1,) * (values.ndim - 1)
    result = values[indices[:, 0]] * weights[:, 0].reshape(shape)
    for corner in range(1, 4):
        result = result + values[indices[:, corner]] * weights[:, corner].reshape(shape)
    return result


def interpolate_magnitudes(vmap: VibrationMap, point: Sequence[float]) -> np.ndarray:
    """All five interpolated curves at ``point``, shape (5, bins)"""
    index = grid_index_at(vmap, point)
    if index is not None:
        return vmap.magnitudes[index - 1].copy()
    indices, weights = bilinear_weights(vmap.grid, np.asarray([point]))
    return _blend(vmap.magnitudes, indices, weights)[0]


def interpolate_frf(vmap: VibrationMap, point: Sequence[float], actuator: str = "PALL") -> FrfCurve:
    """Bilinear FRF estimate at an arbitrary point inside the grid rectangle"""
    mags = interpolate_magnitudes(vmap, point)[actuator_index(actuator)]
    return FrfCurve(freq_axis_ref=vmap.freq_axis, magnitudes=np.maximum(mags, 0.0))


def interpolate_field(vmap: VibrationMap, actuator: str, points: np.ndarray,
                      bins: Optional[Sequence[int]] = None) -> np.ndarray:
    """Interpolated magnitudes for many points and one actuator, shape (points, bins)"""
    indices, weights = bilinear_weights(vmap.grid, points)
    node_values = vmap.magnitudes[:, actuator_index(actuator), :]
    if bins is not None:
        node_values = node_values[:, list(bins)]
    return _blend(node_values, indices, weights)


# --------------------------------------------------------------------------- persistence

def save_map(vmap: VibrationMap, path: Union[str, Path]) -> None:
    grid, axis = vmap.grid, vmap.freq_axis
    lines: List[str] = [
        FORMAT_MAGIC,
        f"numbering {NUMBERING}",
        f"grid {grid.rows} {grid.cols} {grid.spacing!r}",
        f"origin {float(grid.origin[0])!r} {float(grid.origin[1])!r}",
        f"axis {axis.start!r} {axis.step!r} {axis.count}",
        f"provenance {vmap.provenance}",
    ]
    for point in range(grid.point_count):
        for a, actuator in enumerate(ACTUATORS):
            values = " ".join(repr(v) for v in vmap.magnitudes[point, a].tolist())
            lines.append(f"{point + 1} {actuator} {values}")
    Path(path).write_text("\n".join(lines) + "\n")
    logger.info("wrote vibration map %s (%d curves)", path, vmap.curve_count)


def _header_value(lines: List[str], position: int, key: str, fields: int) -> List[str]:
    if position >= len(lines):
        raise MapFormatError(f"malformed header: missing '{key}' line")
    parts = lines[position].split()
    if not parts or parts[0] != key or len(parts) != fields + 1:
        raise MapFormatError(f"malformed header: expected '{key}' with {fields} values on line {position + 1}")
    return parts[1:]


def load_map(path: Union[str, Path]) -> VibrationMap:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != FORMAT_MAGIC:
        raise MapFormatError("malformed header: not a haptable vibration map")
    try:
        numbering = _header_value(lines, 1, "numbering", 1)[0]
        rows, cols, spacing = _header_value(lines, 2, "grid", 3)
        ox, oy = _header_value(lines, 3, "origin", 2)
        start, step, count = _header_value(lines, 4, "axis", 3)
        provenance = _header_value(lines, 5, "provenance", 1)[0]
        grid = GridSpec(rows=int(rows), cols=int(cols), spacing=float(spacing), origin=(float(ox), float(oy)))
        axis = FrequencyAxis(start=float(start), step=float(step), count=int(count))
    except ValueError as e:
        raise MapFormatError(f"malformed header: {e}")
    if numbering != NUMBERING:
        raise MapFormatError(f"malformed header: unsupported numbering {numbering!r}")
    if provenance not in ("synthetic", "measured", "fixture"):
        raise MapFormatError(f"malformed header: unknown provenance {provenance!r}")

    magnitudes = np.full((grid.point_count, len(ACTUATORS), axis.count), np.nan)
    seen = set()
    for line_no, line in enumerate(lines[6:], start=7):
        if not line.strip():
            continue
        parts = line.split()
        try:
            point, actuator = int(parts[0]), parts[1]
        except (ValueError, IndexError):
            raise MapFormatError(f"malformed record on line {line_no}")
        if not 1 <= point <= grid.point_count:
            raise MapFormatError(f"record on line {line_no} names point {point} outside 1..{grid.point_count}")
        if actuator not in ACTUATORS:
            raise MapFormatError(f"record on line {line_no} names unknown actuator {actuator!r}")
        if (point, actuator) in seen:
            raise MapFormatError(f"duplicate curve for point {point} {actuator} on line {line_no}")
        values = parts[2:]
        if len(values) != axis.count:
            raise MapFormatError(
                f"axis mismatch on line {line_no}: {len(values)} values for a {axis.count}-bin axis")
        try:
            magnitudes[point - 1, ACTUATORS.index(actuator)] = [float(v) for v in values]
        except ValueError:
            raise MapFormatError(f"non-numeric magnitude on line {line_no}")
        seen.add((point, actuator))

    expected = grid.point_count * len(ACTUATORS)
    if len(seen) != expected:
        missing = next((p, a) for p in range(1, grid.point_count + 1) for a in ACTUATORS if (p, a) not in seen)
        raise MapFormatError(
            f"missing curve: found {len(seen)} of {expected} curves declared by a "
            f"{grid.rows}x{grid.cols} grid (first missing: point {missing[0]} {missing[1]})")
    try:
        vmap = VibrationMap(grid=grid, freq_axis=axis, magnitudes=magnitudes, provenance=provenance)
    except ValueError as e:
        raise MapFormatError(f"invalid map contents: {e}")
    logger.info("loaded vibration map %s (%s, %d curves)", path, provenance, vmap.curve_count)
    return vmap
