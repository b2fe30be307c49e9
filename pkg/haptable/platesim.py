"""Synthetic FRF oracle: modal superposition on a simply supported Kirchhoff plate.

Stands in for the laser vibrometer campaign. Each piezo patch is reduced to a
uniform pressure over its footprint, projected onto mass-normalised modes
sin(m*pi*x/a) * sin(n*pi*y/b). Geometry is given in mm, responses come out in
um per volt-peak.
"""
import json
import logging
import math
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from haptable.errors import ConfigurationError, GeometryError, ModeIndexError
from haptable.vibmap import (ACTUATORS, PATCH_IDS, FrequencyAxis, FrfCurve, GridSpec, VibrationMap,
                             actuator_index)

logger = logging.getLogger(__name__)

MM = 1e-3
UM_PER_M = 1e6
DEFAULT_SWEEP_LIMIT = 625.0


class PlateSpec(BaseModel):
    """Plate geometry and material. In-plane size defaults to the 3M SCT-3250 screen."""

    model_config = ConfigDict(frozen=True)

    length_x: float = 743.46
    length_y: float = 447.29
    thickness: float = 3.18
    bending_stiffness: float = 197.0
    areal_density: float = 7.95
    modal_damping_ratio: Union[float, List[List[float]]] = 0.01
    mode_counts: Tuple[int, int] = (12, 8)

    @field_validator("length_x", "length_y", "thickness", "bending_stiffness", "areal_density")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("physical plate quantities must be strictly positive")
        return value

    @field_validator("mode_counts")
    @classmethod
    def _mode_counts(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] < 1 or value[1] < 1:
            raise ValueError("mode counts must be at least 1")
        return value

    @model_validator(mode="after")
    def _damping(self) -> "PlateSpec":
        zeta = np.asarray(self.modal_damping_ratio, dtype=float)
        if zeta.ndim == 2 and zeta.shape != tuple(self.mode_counts):
            raise ValueError(f"per-mode damping must have shape {tuple(self.mode_counts)}")
        if zeta.ndim not in (0, 2):
            raise ValueError("damping is a scalar or an M x N table")
        if np.any(zeta <= 0) or np.any(zeta >= 1):
            raise ValueError("damping ratios must lie in (0, 1)")
        return self

    def damping_table(self) -> np.ndarray:
        m, n = self.mode_counts
        return np.broadcast_to(np.asarray(self.modal_damping_ratio, dtype=float), (m, n)).copy()

    def contains(self, point: Sequence[float]) -> bool:
        return 0.0 <= point[0] <= self.length_x and 0.0 <= point[1] <= self.length_y


class PatchSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: Literal["PA", "PB", "PC", "PD"]
    center: Tuple[float, float]
    size: Tuple[float, float] = (61.0, 35.0)
    force_scale: float = 0.1

    @field_validator("force_scale")
    @classmethod
    def _positive_force(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("force_scale must be positive")
        return value

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        cx, cy = self.center
        w, h = self.size
        return cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2


class PlateLayout(BaseModel):
    """Plate plus its patches, as read from a JSON configuration file"""

    plate: PlateSpec = PlateSpec()
    patches: Optional[List[PatchSpec]] = None

    def resolved_patches(self) -> List[PatchSpec]:
        return list(self.patches) if self.patches is not None else default_patches(self.plate)


def default_patches(spec: PlateSpec, inset: float = 30.0, force_scale: float = 0.1) -> List[PatchSpec]:
    """PA/PC on the left/right edges and PB/PD on the far/near edges, mirror pairs."""
    a, b = spec.length_x, spec.length_y
    return [
        PatchSpec(id="PA", center=(inset, b / 2), size=(35.0, 61.0), force_scale=force_scale),
        PatchSpec(id="PB", center=(a / 2, b - inset), size=(61.0, 35.0), force_scale=force_scale),
        PatchSpec(id="PC", center=(a - inset, b / 2), size=(35.0, 61.0), force_scale=force_scale),
        PatchSpec(id="PD", center=(a / 2, inset), size=(61.0, 35.0), force_scale=force_scale),
    ]


def load_layout(path: Union[str, Path]) -> PlateLayout:
    try:
        with open(path, "r") as f:
            return PlateLayout.model_validate(json.load(f))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ConfigurationError(f"invalid plate configuration {path}: {e}")


def mirror_point(spec: PlateSpec, point: Sequence[float], axis: Literal["x", "y"]) -> Tuple[float, float]:
    """Mirror image of ``point`` across the plate's vertical (x) or horizontal (y) centre line"""
    if axis == "x":
        return spec.length_x - point[0], point[1]
    return point[0], spec.length_y - point[1]


# --------------------------------------------------------------------------- modal basis

def _check_mode(spec: PlateSpec, m: int, n: int) -> None:
    max_m, max_n = spec.mode_counts
    if not (1 <= m <= max_m and 1 <= n <= max_n):
        raise ModeIndexError(f"mode ({m}, {n}) outside the retained range 1..{max_m} x 1..{max_n}")


def modal_frequency(spec: PlateSpec, m: int, n: int) -> float:
    """Natural frequency (Hz) of mode (m, n)"""
    _check_mode(spec, m, n)
    a, b = spec.length_x * MM, spec.length_y * MM
    return (math.pi / 2) * math.sqrt(spec.bending_stiffness / spec.areal_density) * ((m / a) ** 2 + (n / b) ** 2)


def _mode_indices(spec: PlateSpec) -> Tuple[np.ndarray, np.ndarray]:
    m, n = np.meshgrid(np.arange(1, spec.mode_counts[0] + 1), np.arange(1, spec.mode_counts[1] + 1), indexing="ij")
    return m.ravel(), n.ravel()


def _omegas(spec: PlateSpec, m: np.ndarray, n: np.ndarray) -> np.ndarray:
    a, b = spec.length_x * MM, spec.length_y * MM
    return math.pi ** 2 * math.sqrt(spec.bending_stiffness / spec.areal_density) * ((m / a) ** 2 + (n / b) ** 2)


def _mass_normalisation(spec: PlateSpec) -> float:
    return 2.0 / math.sqrt(spec.areal_density * spec.length_x * MM * spec.length_y * MM)


def _shapes(spec: PlateSpec, points: np.ndarray, m: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Mass-normalised mode shapes at the points, shape (points, modes)"""
    a, b = spec.length_x * MM, spec.length_y * MM
    x = points[:, 0:1] * MM
    y = points[:, 1:2] * MM
    return _mass_normalisation(spec) * np.sin(m * math.pi * x / a) * np.sin(n * math.pi * y / b)


def _patch_forcing(spec: PlateSpec, patch: PatchSpec, m: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Modal force per volt of a uniform pressure over the patch footprint"""
    a, b = spec.length_x * MM, spec.length_y * MM
    x1, y1, x2, y2 = (v * MM for v in patch.bounds)
    ix = (a / (m * math.pi)) * (np.cos(m * math.pi * x1 / a) - np.cos(m * math.pi * x2 / a))
    iy = (b / (n * math.pi)) * (np.cos(n * math.pi * y1 / b) - np.cos(n * math.pi * y2 / b))
    pressure = patch.force_scale / ((x2 - x1) * (y2 - y1))
    return pressure * _mass_normalisation(spec) * ix * iy


def _check_patches(spec: PlateSpec, patches: Iterable[PatchSpec]) -> None:
    for patch in patches:
        x1, y1, x2, y2 = patch.bounds
        if x1 < 0 or y1 < 0 or x2 > spec.length_x or y2 > spec.length_y:
            raise GeometryError(f"patch {patch.id} footprint extends outside the plate")


def _check_axis(freq_axis: FrequencyAxis, sweep_limit: float) -> np.ndarray:
    freqs = freq_axis.values
    if freqs[0] < 0 or freqs[-1] > sweep_limit + 1e-9:
        raise ConfigurationError(f"frequency axis {freqs[0]}..{freqs[-1]} Hz exceeds the sweep limit 0..{sweep_limit} Hz")
    return freqs


def _complex_responses(spec: PlateSpec, patches: Sequence[PatchSpec], points: np.ndarray,
                       freqs: np.ndarray) -> np.ndarray:
    """Complex displacement per volt (m/V), shape (patches, points, bins)"""
    m, n = _mode_indices(spec)
    omega_r = _omegas(spec, m, n)
    zeta = spec.damping_table().ravel()
    omega = 2 * math.pi * freqs
    receptance = 1.0 / (omega_r[:, None] ** 2 - omega[None, :] ** 2 + 2j * zeta[:, None] * omega_r[:, None] * omega[None, :])
    shapes = _shapes(spec, points, m, n)
    return np.stack([(shapes * _patch_forcing(spec, patch, m, n)) @ receptance for patch in patches])


def _curves_for(responses: np.ndarray, patches: Sequence[PatchSpec], actuator: str) -> np.ndarray:
    if actuator == "PALL":
        if not patches:
            raise ConfigurationError("PALL needs at least one patch in the layout")
        return np.abs(np.sum(responses, axis=0)) * UM_PER_M
    ids = [p.id for p in patches]
    if actuator not in ids:
        raise ConfigurationError(f"actuator {actuator} is not part of the patch layout")
    return np.abs(responses[ids.index(actuator)]) * UM_PER_M


def synthesize_frf(spec: PlateSpec, patches: Sequence[PatchSpec], point: Sequence[float], actuator: str,
                   freq_axis: FrequencyAxis, sweep_limit: float = DEFAULT_SWEEP_LIMIT) -> FrfCurve:
    """Magnitude FRF (um/Vp) at ``point`` for one actuator case.

    PALL is the magnitude of the coherent sum of the patch responses (parallel drive).
    """
    actuator_index(actuator)
    if not spec.contains(point):
        raise GeometryError(f"point ({point[0]}, {point[1]}) mm lies outside the plate")
    if actuator == "PALL" and not patches:
        raise ConfigurationError("PALL needs at least one patch in the layout")
    _check_patches(spec, patches)
    freqs = _check_axis(freq_axis, sweep_limit)
    responses = _complex_responses(spec, patches, np.asarray([point], dtype=float), freqs)
    return FrfCurve(freq_axis_ref=freq_axis, magnitudes=_curves_for(responses, patches, actuator)[0])


def generate_vibration_map(spec: PlateSpec, patches: Sequence[PatchSpec], grid: GridSpec,
                           freq_axis: FrequencyAxis, sweep_limit: float = DEFAULT_SWEEP_LIMIT) -> VibrationMap:
    """FRFs for every grid point and all five excitation cases"""
    points = grid.all_coordinates()
    if not all(spec.contains(p) for p in points):
        raise GeometryError("grid does not fit on the plate")
    if not patches:
        raise ConfigurationError("PALL needs at least one patch in the layout")
    _check_patches(spec, patches)
    freqs = _check_axis(freq_axis, sweep_limit)
    responses = _complex_responses(spec, patches, points, freqs)

    magnitudes = np.zeros((grid.point_count, len(ACTUATORS), freq_axis.count))
    present = {p.id for p in patches}
    for a, actuator in enumerate(ACTUATORS):
        if actuator != "PALL" and actuator not in present:
            logger.warning("patch %s missing from layout; its curves are left at zero", actuator)
            continue
        magnitudes[:, a, :] = _curves_for(responses, patches, actuator)
    logger.info("generated %dx%d vibration map over %d bins", grid.rows, grid.cols, freq_axis.count)
    return VibrationMap(grid=grid, freq_axis=freq_axis, magnitudes=magnitudes, provenance="synthetic")


def check_truncation(spec: PlateSpec, patches: Sequence[PatchSpec], points: np.ndarray,
                     freq_axis: FrequencyAxis, extra_modes: Tuple[int, int] = (4, 4),
                     tolerance: float = 0.01) -> Tuple[bool, float]:
    """Compare responses with and without ``extra_modes`` more modes.

    Only bins below half the lowest discarded modal frequency are compared; the
    error is relative to each curve's peak. Returns (within tolerance, worst error).
    """
    m, n = spec.mode_counts
    richer = spec.model_copy(update={"mode_counts": (m + extra_modes[0], n + extra_modes[1]),
                                     "modal_damping_ratio": _extend_damping(spec, extra_modes)})
    lowest_discarded = min(modal_frequency(richer, m + 1, 1), modal_frequency(richer, 1, n + 1))
    freqs = freq_axis.values
    keep = freqs < lowest_discarded / 2
    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    for actuator in ACTUATORS:
        if actuator != "PALL" and actuator not in {p.id for p in patches}:
            continue
        base = _curves_for(_complex_responses(spec, patches, points, freqs), patches, actuator)
        more = _curves_for(_complex_responses(richer, patches, points, freqs), patches, actuator)
        peak = np.max(base, axis=1, keepdims=True)
        peak[peak == 0] = 1.0
        worst = max(worst, float(np.max(np.abs(more - base)[:, keep] / peak, initial=0.0)))
    return worst <= tolerance, worst


def _extend_damping(spec: PlateSpec, extra: Tuple[int, int]) -> Union[float, List[List[float]]]:
    if np.ndim(spec.modal_damping_ratio) == 0:
        return spec.modal_damping_ratio
    table = spec.damping_table()
    padded = np.pad(table, ((0, extra[0]), (0, extra[1])), mode="edge")
    return padded.tolist()


def synthetic_map(seed: int, grid: Optional[GridSpec] = None, freq_axis: Optional[FrequencyAxis] = None,
                  spec: Optional[PlateSpec] = None) -> VibrationMap:
    """Seeded plate variant: per-mode damping in [0.005, 0.03] and per-patch force scales in [0.05, 0.2]"""
    rng = np.random.default_rng(seed)
    spec = spec or PlateSpec()
    zeta = rng.uniform(0.005, 0.03, size=spec.mode_counts).tolist()
    varied = spec.model_copy(update={"modal_damping_ratio": zeta})
    patches = [p.model_copy(update={"force_scale": float(rng.uniform(0.05, 0.2))}) for p in default_patches(varied)]
    return generate_vibration_map(varied, patches, grid or GridSpec(), freq_axis or FrequencyAxis())
