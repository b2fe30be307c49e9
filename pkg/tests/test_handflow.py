import numpy as np
import pytest

from haptable.errors import ConfigurationError, ExtrapolationError, PlanningError
from haptable.handflow import (HandRegion, activity_frame, check_plan_rules, levels_frame, load_plan, pass_counts,
                               plan_hand_flow, region_preset, render_hand_flow, save_plan, square_activity,
                               subgrid_levels)
from haptable.vibmap import ACTUATORS


@pytest.fixture(scope="module")
def prelim():
    return region_preset("prelim")


def test_region_geometry(prelim):
    assert prelim.square_side == pytest.approx(40.0)
    assert prelim.pass_count == 113
    points = prelim.subgrid_points()
    assert points.shape == (3, 3, 225, 2)
    # row 0 is the top (smallest y), col 0 the left (smallest x)
    assert points[0, 0, :, 1].max() < points[2, 0, :, 1].min()
    assert points[0, 0, :, 0].max() < points[0, 2, :, 0].min()


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        region_preset("R9")


def test_region_off_grid(hand_map, sensitivity):
    region = HandRegion(center=(400.0, 223.645))
    with pytest.raises(ExtrapolationError):
        subgrid_levels(hand_map, sensitivity, region, "PA", 100.0, 100.0)


def test_activity_of_falloff_field(hand_map, sensitivity, prelim):
    activity = square_activity(hand_map, sensitivity, prelim, "PA", 100.0, 100.0)
    np.testing.assert_array_equal(activity, [[True, False, False]] * 3)
    counts = pass_counts(hand_map, sensitivity, prelim, "PA", 100.0, 100.0)
    # only the left seven subgrid columns of a middle square see any PA motion
    assert counts[1, 1] == 7 * 15
    assert counts[1, 2] == 0


def test_higher_requirement_never_adds_squares(small_map, sensitivity):
    region = HandRegion(center=(281.73, 223.645))
    low = square_activity(small_map, sensitivity, region, "PALL", 200.0, 100.0, jnd_multiple=1.0)
    high = square_activity(small_map, sensitivity, region, "PALL", 200.0, 100.0, jnd_multiple=20.0)
    assert np.all(low | ~high)


def test_rules_for_left_to_right():
    good = np.array([[1, 0, 0], [1, 0, 0], [1, 0, 0]], dtype=bool)
    assert check_plan_rules("L->R", 1, good) == []
    assert check_plan_rules("L->R", 2, good) == ["source side silent", "destination side active"]
    assert check_plan_rules("R->L", 2, good) == []
    lopsided = np.array([[1, 0, 0], [1, 0, 0], [0, 0, 0]], dtype=bool)
    assert check_plan_rules("L->R", 1, lopsided) == ["top/bottom unbalanced"]


def test_rules_for_up_down():
    top = np.array([[1, 1, 1], [0, 0, 0], [0, 0, 0]], dtype=bool)
    assert check_plan_rules("U->D", 1, top) == []
    assert check_plan_rules("D->U", 2, top) == []
    skewed = np.array([[1, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=bool)
    assert check_plan_rules("U->D", 1, skewed) == ["left/right unbalanced"]


def test_unknown_direction():
    with pytest.raises(ConfigurationError):
        check_plan_rules("NE", 1, np.zeros((3, 3), dtype=bool))


def test_plan_left_to_right(hand_map, sensitivity, prelim):
    plan = plan_hand_flow(hand_map, sensitivity, prelim, "L->R")
    first, second = plan.parts
    assert (first.actuator, first.freq) == ("PA", 100.0)
    assert (second.actuator, second.freq) == ("PC", 100.0)
    assert check_plan_rules("L->R", 1, plan.activity(1)) == []
    assert check_plan_rules("L->R", 2, plan.activity(2)) == []


def test_plan_right_to_left(hand_map, sensitivity, prelim):
    plan = plan_hand_flow(hand_map, sensitivity, prelim, "R->L")
    assert [p.actuator for p in plan.parts] == ["PC", "PA"]


def test_plan_respects_frequency_window(hand_map, sensitivity, prelim):
    plan = plan_hand_flow(hand_map, sensitivity, prelim, "L->R", min_freq=150.0)
    assert [p.freq for p in plan.parts] == [200.0, 200.0]


def test_plan_failure_reports_near_misses(hand_map, sensitivity, prelim):
    with pytest.raises(PlanningError) as info:
        plan_hand_flow(hand_map, sensitivity, prelim, "U->D")
    misses = info.value.near_misses
    assert [m["part"] for m in misses] == [1, 1, 1, 2, 2, 2]
    assert all(m["actuator"] in ACTUATORS and m["violations"] for m in misses)
    assert info.value.exit_code == 4


def test_plan_persistence_and_exports(tmp_path, hand_map, sensitivity, prelim):
    plan = plan_hand_flow(hand_map, sensitivity, prelim, "L->R")
    save_plan(plan, tmp_path / "plan.json")
    assert load_plan(tmp_path / "plan.json") == plan

    activity = activity_frame(plan)
    assert len(activity) == 18
    assert activity.query("part == 1 and col == 0")["active"].tolist() == [1, 1, 1]
    assert activity.query("part == 1 and col > 0")["active"].sum() == 0

    levels = levels_frame(hand_map, sensitivity, plan)
    assert len(levels) == 2 * 9 * 225
    assert list(levels.columns) == ["part", "x", "y", "level_db"]


def test_render_hand_flow_routes_parts(hand_map, sensitivity, prelim):
    plan = plan_hand_flow(hand_map, sensitivity, prelim, "L->R")
    wave = render_hand_flow(plan, durations=(0.5, 0.5), sample_rate=4000)
    assert len(wave.time) == 4000
    assert np.any(wave.actuator_signal("PA")[:2000])
    assert not np.any(wave.actuator_signal("PA")[2000:])
    assert np.any(wave.actuator_signal("PC")[2000:])
