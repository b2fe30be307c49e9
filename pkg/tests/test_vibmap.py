import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from haptable.errors import ConfigurationError, ExtrapolationError, GeometryError, MapFormatError
from haptable.vibmap import (ACTUATORS, FrequencyAxis, GridSpec, VibrationMap, bilinear_weights, grid_index_at,
                             interpolate_field, interpolate_frf, interpolate_magnitudes, load_map, point_coordinates,
                             save_map)


def test_grid_numbering():
    grid = GridSpec()
    assert grid.point_count == 84
    assert point_coordinates(grid, 1) == (41.73, 43.645)
    assert point_coordinates(grid, 12) == pytest.approx((41.73 + 11 * 60, 43.645))
    assert point_coordinates(grid, 13) == pytest.approx((41.73, 103.645))
    with pytest.raises(GeometryError):
        point_coordinates(grid, 85)


def test_frequency_axis():
    axis = FrequencyAxis()
    assert axis.stop == 625.0
    assert axis.bin_of(465) == 465
    with pytest.raises(ConfigurationError):
        axis.bin_of(465.5)


def test_unknown_actuator(fixture_map):
    with pytest.raises(ConfigurationError):
        fixture_map.curve(1, "PE")


def test_grid_index_at(fixture_map):
    assert grid_index_at(fixture_map, point_coordinates(fixture_map, 51)) == 51
    assert grid_index_at(fixture_map, (42.0, 43.645)) is None


def test_interpolation_exact_at_nodes(small_map):
    for index in range(1, small_map.grid.point_count + 1):
        values = interpolate_magnitudes(small_map, point_coordinates(small_map, index))
        np.testing.assert_array_equal(values, small_map.magnitudes[index - 1])


def test_interpolation_outside_grid(small_map):
    x0, y0, x1, y1 = small_map.grid.extent
    with pytest.raises(ExtrapolationError):
        interpolate_frf(small_map, (x1 + 0.5, y0))
    with pytest.raises(GeometryError):
        interpolate_frf(small_map, (x0, y0 - 1.0))


def test_interpolation_on_grid_edge(small_map):
    x0, y0, x1, y1 = small_map.grid.extent
    curve = interpolate_frf(small_map, (x1, (y0 + y1) / 2), "PA")
    assert curve.magnitudes.shape == (small_map.freq_axis.count,)


def _affine_map(grid: GridSpec, coeffs) -> VibrationMap:
    axis = FrequencyAxis(start=0.0, step=1.0, count=3)
    xy = grid.all_coordinates()
    mags = np.zeros((grid.point_count, len(ACTUATORS), axis.count))
    for b, (a, bx, cy) in enumerate(coeffs):
        mags[:, :, b] = (a + bx * xy[:, 0] + cy * xy[:, 1])[:, None]
    return VibrationMap(grid=grid, freq_axis=axis, magnitudes=mags)


def test_affine_field_reproduced():
    grid = GridSpec()
    coeffs = [(1.0, 0.002, 0.003), (5.0, 0.01, 0.0), (0.5, 0.0, 0.004)]
    vmap = _affine_map(grid, coeffs)
    rng = np.random.default_rng(0)
    x0, y0, x1, y1 = grid.extent
    points = np.column_stack([rng.uniform(x0, x1, 1000), rng.uniform(y0, y1, 1000)])
    field = interpolate_field(vmap, "PALL", points)
    for b, (a, bx, cy) in enumerate(coeffs):
        expected = a + bx * points[:, 0] + cy * points[:, 1]
        np.testing.assert_allclose(field[:, b], expected, rtol=1e-9)


@settings(max_examples=50, deadline=None)
@given(u=st.floats(0.0, 1.0), v=st.floats(0.0, 1.0))
def test_weights_form_partition_of_unity(u, v):
    grid = GridSpec()
    x0, y0, x1, y1 = grid.extent
    _, weights = bilinear_weights(grid, np.array([[x0 + u * (x1 - x0), y0 + v * (y1 - y0)]]))
    assert weights.sum() == pytest.approx(1.0)
    assert np.all(weights >= -1e-12)


@settings(max_examples=30, deadline=None)
@given(u=st.floats(0.0, 1.0), v=st.floats(0.0, 1.0))
def test_interpolation_within_corner_bounds(small_map, u, v):
    x0, y0, x1, y1 = small_map.grid.extent
    point = (x0 + u * (x1 - x0), y0 + v * (y1 - y0))
    indices, _ = bilinear_weights(small_map.grid, np.array([point]))
    corners = small_map.magnitudes[indices[0]]
    values = interpolate_magnitudes(small_map, point)
    assert np.all(values <= corners.max(axis=0) + 1e-12)
    assert np.all(values >= corners.min(axis=0) - 1e-12)


def test_save_load_exact(tmp_path, small_map):
    path = tmp_path / "map.txt"
    save_map(small_map, path)
    assert load_map(path).same_as(small_map)


def test_save_is_deterministic(tmp_path, small_map):
    save_map(small_map, tmp_path / "a.txt")
    save_map(small_map, tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a map\n")
    with pytest.raises(MapFormatError, match="header"):
        load_map(path)


def test_load_reports_missing_curve(tmp_path, small_map):
    path = tmp_path / "map.txt"
    save_map(small_map, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(MapFormatError, match="missing curve"):
        load_map(path)


def test_load_reports_axis_mismatch(tmp_path, small_map):
    path = tmp_path / "map.txt"
    save_map(small_map, path)
    lines = path.read_text().splitlines()
    lines[-1] = lines[-1] + " 0.5"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(MapFormatError, match="axis mismatch"):
        load_map(path)


def test_map_is_immutable(small_map):
    with pytest.raises(ValueError):
        small_map.magnitudes[0, 0, 0] = 1.0
