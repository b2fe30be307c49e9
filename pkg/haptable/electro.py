"""Electrovibration: electrostatic attraction between finger and screen and the friction it adds."""
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

Voltage = Union[float, np.ndarray]


class ElectroParams(BaseModel):
    """Parallel-plate finger model. Thicknesses in m, area in m^2, load in N."""

    model_config = ConfigDict(frozen=True)

    eps0: float = 8.854e-12
    eps_i: float = 3.0
    eps_s: float = 1e3
    t_i: float = 1e-6
    t_s: float = 2e-4
    area: float = 1e-4
    mu: float = 0.5
    normal_force: float = 0.5

    @model_validator(mode="after")
    def _check(self) -> "ElectroParams":
        for name in ("eps0", "t_i", "t_s", "area", "mu", "normal_force"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.eps_i < 1 or self.eps_s < 1:
            raise ValueError("relative permittivities must be at least 1")
        return self


def electrostatic_force(p: ElectroParams, v: Voltage) -> Voltage:
    """f_e = eps0 v^2 A / (2 (t_i + t_s) (t_i/eps_i + t_s/eps_s))"""
    v = np.asarray(v, dtype=float)
    force = p.eps0 * v ** 2 * p.area / (2 * (p.t_i + p.t_s) * (p.t_i / p.eps_i + p.t_s / p.eps_s))
    return float(force) if force.ndim == 0 else force


def friction_force(p: ElectroParams, v: Voltage, sliding: bool) -> Voltage:
    """Tangential friction mu (F_N + f_e) on a sliding finger; zero when the finger rests"""
    if not sliding:
        return 0.0 if np.ndim(v) == 0 else np.zeros(np.shape(v))
    return p.mu * (p.normal_force + electrostatic_force(p, v))
