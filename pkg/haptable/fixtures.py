"""Hand-built vibration map reproducing the documented grid point 51/52 worked example."""
import numpy as np

from haptable.platesim import synthetic_map
from haptable.vibmap import FrequencyAxis, GridSpec, VibrationMap, actuator_index

# (point, actuator, frequency Hz, um/Vp)
WORKED_EXAMPLE = (
    (51, "PA", 465, 0.201),
    (52, "PALL", 428, 1.607),
)
# Smaller peaks that must lose the argmax to the worked-example values
DECOYS = (
    (51, "PB", 300, 0.15),
    (52, "PC", 500, 0.9),
)


def worked_example_map(seed: int = 7) -> VibrationMap:
    """7x12 map whose points 51 and 52 carry only the worked-example peaks.

    Every other point comes from a seeded synthetic plate so the map stays
    usable for flows elsewhere on the surface.
    """
    grid, axis = GridSpec(), FrequencyAxis()
    mags = np.array(synthetic_map(seed, grid, axis).magnitudes)
    for point in {p for p, _, _, _ in WORKED_EXAMPLE + DECOYS}:
        mags[point - 1] = 0.0
    for point, actuator, freq, value in WORKED_EXAMPLE + DECOYS:
        mags[point - 1, actuator_index(actuator), axis.bin_of(freq)] = value
    return VibrationMap(grid=grid, freq_axis=axis, magnitudes=mags, provenance="fixture")
