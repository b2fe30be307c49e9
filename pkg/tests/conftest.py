import numpy as np
import pytest

from haptable.fixtures import worked_example_map
from haptable.platesim import synthetic_map
from haptable.sensitivity import SensitivityCurve
from haptable.vibmap import ACTUATORS, FrequencyAxis, GridSpec, VibrationMap, actuator_index


@pytest.fixture(scope="session")
def sensitivity() -> SensitivityCurve:
    return SensitivityCurve()


@pytest.fixture(scope="session")
def fixture_map() -> VibrationMap:
    return worked_example_map()


@pytest.fixture(scope="session")
def small_map() -> VibrationMap:
    """3x4 seeded synthetic map on a coarse axis, quick enough for exhaustive checks"""
    grid = GridSpec(rows=3, cols=4, spacing=120.0, origin=(101.73, 103.645))
    return synthetic_map(11, grid, FrequencyAxis(start=0.0, step=5.0, count=126))


@pytest.fixture(scope="session")
def full_map() -> VibrationMap:
    return synthetic_map(3)


@pytest.fixture(scope="session")
def hand_map() -> VibrationMap:
    """3x3 map around the preliminary region: PA strong on the left column, PC on the right.

    Bilinear falloff reaches zero at the middle column, so the middle squares
    never hold half of their subgrid points above threshold.
    """
    grid = GridSpec(rows=3, cols=3, spacing=60.0, origin=(311.73, 163.645))
    axis = FrequencyAxis(start=100.0, step=100.0, count=3)
    mags = np.zeros((grid.point_count, len(ACTUATORS), axis.count))
    for row in range(3):
        mags[row * 3 + 0, actuator_index("PA")] = 1.0
        mags[row * 3 + 2, actuator_index("PC")] = 1.0
    return VibrationMap(grid=grid, freq_axis=axis, magnitudes=mags, provenance="synthetic")
