"""Elliptic Fourier descriptors of closed contours (Kuhl-Giardina), with normalisation."""
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from haptable.errors import DegenerateContourError


class DescriptorVector(BaseModel):
    """Rows are harmonics 1..H, columns (a, b, c, d)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coefficients: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> "DescriptorVector":
        coeffs = np.array(self.coefficients, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[1] != 4:
            raise ValueError("descriptor must have shape (harmonics, 4)")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)
        return self

    @property
    def harmonics(self) -> int:
        return self.coefficients.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self.coefficients.ravel()


def _closed(contour: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Segment vectors and lengths of the closed polygon with zero-length segments dropped"""
    contour = np.asarray(contour, dtype=float).reshape(-1, 2)
    if len(contour) < 3:
        raise DegenerateContourError(f"a closed contour needs at least 3 points, got {len(contour)}")
    closed = np.vstack([contour, contour[:1]])
    dxy = np.diff(closed, axis=0)
    dt = np.hypot(dxy[:, 0], dxy[:, 1])
    keep = dt > 0
    if keep.sum() < 2 or dt.sum() <= 0:
        raise DegenerateContourError("contour has zero perimeter")
    return dxy[keep], dt[keep]


def signed_area(contour: np.ndarray) -> float:
    x, y = np.asarray(contour, dtype=float).reshape(-1, 2).T
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def elliptic_coefficients(contour: np.ndarray, harmonics: int) -> np.ndarray:
    """Raw Kuhl-Giardina coefficients, shape (harmonics, 4)"""
    dxy, dt = _closed(contour)
    t = np.concatenate([[0.0], np.cumsum(dt)])
    period = t[-1]
    orders = np.arange(1, harmonics + 1)
    phi = (2 * np.pi * t / period) * orders[:, None]
    consts = period / (2 * orders ** 2 * np.pi ** 2)
    d_cos = np.cos(phi[:, 1:]) - np.cos(phi[:, :-1])
    d_sin = np.sin(phi[:, 1:]) - np.sin(phi[:, :-1])
    x_rate, y_rate = dxy[:, 0] / dt, dxy[:, 1] / dt
    return np.stack([
        consts * np.sum(x_rate * d_cos, axis=1),
        consts * np.sum(x_rate * d_sin, axis=1),
        consts * np.sum(y_rate * d_cos, axis=1),
        consts * np.sum(y_rate * d_sin, axis=1),
    ], axis=1)


def contour_locus(contour: np.ndarray) -> Tuple[float, float]:
    """The zero-order (DC) term: the contour's centre under the Fourier parametrisation"""
    contour = np.asarray(contour, dtype=float).reshape(-1, 2)
    dxy, dt = _closed(contour)
    t = np.concatenate([[0.0], np.cumsum(dt)])
    period = t[-1]
    xi = np.cumsum(dxy[:, 0]) - dxy[:, 0] / dt * t[1:]
    delta = np.cumsum(dxy[:, 1]) - dxy[:, 1] / dt * t[1:]
    a0 = np.sum(dxy[:, 0] / (2 * dt) * np.diff(t ** 2) + xi * dt) / period
    c0 = np.sum(dxy[:, 1] / (2 * dt) * np.diff(t ** 2) + delta * dt) / period
    return float(contour[0, 0] + a0), float(contour[0, 1] + c0)


def normalize_coefficients(coeffs: np.ndarray) -> np.ndarray:
    """Remove start point, rotation and scale using the first harmonic ellipse.

    The first-harmonic phase is only defined modulo 180 degrees, which flips
    the sign of every even harmonic; the sign is fixed by making the
    largest-magnitude even-harmonic coefficient positive.
    """
    coeffs = np.array(coeffs, dtype=float)
    a1, b1, c1, d1 = coeffs[0]
    theta = 0.5 * np.arctan2(2 * (a1 * b1 + c1 * d1), a1 ** 2 - b1 ** 2 + c1 ** 2 - d1 ** 2)
    for n in range(coeffs.shape[0]):
        angle = (n + 1) * theta
        start = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        coeffs[n] = (coeffs[n].reshape(2, 2) @ start).ravel()
    psi = np.arctan2(coeffs[0, 2], coeffs[0, 0])
    rotation = np.array([[np.cos(psi), np.sin(psi)], [-np.sin(psi), np.cos(psi)]])
    for n in range(coeffs.shape[0]):
        coeffs[n] = (rotation @ coeffs[n].reshape(2, 2)).ravel()
    scale = abs(coeffs[0, 0])
    if scale == 0:
        raise DegenerateContourError("first harmonic vanishes")
    coeffs /= scale
    even = coeffs[1::2]
    if even.size:
        flat = even.ravel()
        if flat[int(np.argmax(np.abs(flat)))] < 0:
            coeffs[1::2] *= -1
    return coeffs


def efd(contour: np.ndarray, harmonics: int = 10, normalize: bool = True) -> DescriptorVector:
    """Descriptor of a closed contour; counter-clockwise traversal is enforced first"""
    contour = np.asarray(contour, dtype=float).reshape(-1, 2)
    if signed_area(contour) < 0:
        contour = contour[::-1]
    coeffs = elliptic_coefficients(contour, harmonics)
    return DescriptorVector(coefficients=normalize_coefficients(coeffs) if normalize else coeffs)


def efd_reconstruct(coeffs: np.ndarray, locus: Tuple[float, float] = (0.0, 0.0), num_points: int = 300) -> np.ndarray:
    """Contour points of the truncated Fourier series, shape (num_points, 2)"""
    coeffs = np.asarray(coeffs.coefficients if isinstance(coeffs, DescriptorVector) else coeffs, dtype=float)
    t = np.linspace(0, 1.0, num_points, endpoint=False)
    x = np.full(num_points, locus[0], dtype=float)
    y = np.full(num_points, locus[1], dtype=float)
    for n in range(coeffs.shape[0]):
        angle = 2 * (n + 1) * np.pi * t
        x += coeffs[n, 0] * np.cos(angle) + coeffs[n, 1] * np.sin(angle)
        y += coeffs[n, 2] * np.cos(angle) + coeffs[n, 3] * np.sin(angle)
    return np.stack([x, y], axis=1)
