import json

import numpy as np
import pytest

from haptable.errors import ConfigurationError, GeometryError, ModeIndexError
from haptable.platesim import (PatchSpec, PlateSpec, check_truncation, default_patches, generate_vibration_map,
                               load_layout, mirror_point, modal_frequency, synthesize_frf, synthetic_map)
from haptable.vibmap import ACTUATORS, FrequencyAxis, GridSpec, actuator_index


def test_fundamental_frequency():
    assert modal_frequency(PlateSpec(), 1, 1) == pytest.approx(53.23, rel=1e-3)


def test_modal_frequency_out_of_range():
    with pytest.raises(ModeIndexError):
        modal_frequency(PlateSpec(), 13, 1)
    with pytest.raises(IndexError):
        modal_frequency(PlateSpec(), 1, 0)


def test_invalid_plate_rejected():
    with pytest.raises(ValueError):
        PlateSpec(thickness=0)
    with pytest.raises(ValueError):
        PlateSpec(modal_damping_ratio=[[0.01] * 8] * 11)


def test_frf_peaks_near_fundamental():
    spec = PlateSpec()
    axis = FrequencyAxis(start=40.0, step=0.1, count=200)
    # a point away from every nodal line of mode (1, 1)
    curve = synthesize_frf(spec, default_patches(spec), (371.73, 223.645), "PALL", axis)
    peak = axis.values[int(np.argmax(curve.magnitudes))]
    assert peak == pytest.approx(modal_frequency(spec, 1, 1), abs=0.5)


def test_point_outside_plate():
    spec = PlateSpec()
    with pytest.raises(GeometryError):
        synthesize_frf(spec, default_patches(spec), (-1.0, 10.0), "PA", FrequencyAxis(count=10))


def test_axis_beyond_sweep_limit():
    spec = PlateSpec()
    with pytest.raises(ConfigurationError):
        synthesize_frf(spec, default_patches(spec), (100.0, 100.0), "PA", FrequencyAxis(count=700))


def test_patch_outside_plate():
    spec = PlateSpec()
    patches = [PatchSpec(id="PA", center=(5.0, 200.0))]
    with pytest.raises(GeometryError):
        synthesize_frf(spec, patches, (100.0, 100.0), "PA", FrequencyAxis(count=10))


def test_pall_without_patches():
    with pytest.raises(ConfigurationError):
        synthesize_frf(PlateSpec(), [], (100.0, 100.0), "PALL", FrequencyAxis(count=10))


def test_map_shape_and_provenance():
    spec = PlateSpec()
    vmap = generate_vibration_map(spec, default_patches(spec), GridSpec(), FrequencyAxis(count=64))
    assert vmap.magnitudes.shape == (84, 5, 64)
    assert vmap.provenance == "synthetic"
    assert np.all(vmap.magnitudes >= 0)


def test_missing_patch_leaves_zero_curves(caplog):
    spec = PlateSpec()
    patches = [p for p in default_patches(spec) if p.id != "PB"]
    vmap = generate_vibration_map(spec, patches, GridSpec(rows=2, cols=2), FrequencyAxis(count=32))
    assert not vmap.magnitudes[:, actuator_index("PB")].any()
    assert vmap.magnitudes[:, actuator_index("PALL")].any()
    assert "PB" in caplog.text


def test_mirror_symmetry_of_opposite_patches():
    spec = PlateSpec()
    patches = default_patches(spec)
    axis = FrequencyAxis(start=0.0, step=5.0, count=126)
    point = (200.0, 150.0)
    pa = synthesize_frf(spec, patches, point, "PA", axis)
    pc = synthesize_frf(spec, patches, mirror_point(spec, point, "x"), "PC", axis)
    np.testing.assert_allclose(pa.magnitudes, pc.magnitudes, rtol=1e-9, atol=1e-15)


def test_pall_is_magnitude_of_coherent_sum():
    spec = PlateSpec()
    patches = default_patches(spec)
    axis = FrequencyAxis(start=0.0, step=5.0, count=126)
    point = (250.0, 120.0)
    pall = synthesize_frf(spec, patches, point, "PALL", axis).magnitudes
    single = sum(synthesize_frf(spec, patches, point, a, axis).magnitudes for a in ("PA", "PB", "PC", "PD"))
    # triangle inequality: |sum| <= sum of |.|
    assert np.all(pall <= single + 1e-12)


def test_truncation_tolerance():
    spec = PlateSpec()
    points = np.array([[200.0, 150.0], [500.0, 300.0]])
    ok, worst = check_truncation(spec, default_patches(spec), points, FrequencyAxis(count=626))
    assert ok, worst


def test_synthetic_map_is_seeded():
    grid, axis = GridSpec(rows=2, cols=3), FrequencyAxis(count=50)
    assert synthetic_map(5, grid, axis).same_as(synthetic_map(5, grid, axis))
    assert not synthetic_map(5, grid, axis).same_as(synthetic_map(6, grid, axis))


def test_all_actuators_present(full_map):
    for a in range(len(ACTUATORS)):
        assert full_map.magnitudes[:, a].max() > 0


def test_layout_file(tmp_path):
    path = tmp_path / "layout.json"
    path.write_text(json.dumps({"patches": [{"id": "PA", "center": [30.0, 200.0], "size": [35.0, 61.0]}]}))
    layout = load_layout(path)
    assert layout.plate == PlateSpec()
    assert [p.id for p in layout.resolved_patches()] == ["PA"]

    path.write_text(json.dumps({}))
    assert [p.id for p in load_layout(path).resolved_patches()] == ["PA", "PB", "PC", "PD"]


def test_invalid_layout_file(tmp_path):
    path = tmp_path / "layout.json"
    path.write_text(json.dumps({"patches": [{"id": "PE", "center": [0.0, 0.0]}]}))
    with pytest.raises(ConfigurationError):
        load_layout(path)
    with pytest.raises(ConfigurationError):
        load_layout(tmp_path / "missing.json")
