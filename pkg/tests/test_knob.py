from pathlib import Path

import numpy as np
import pytest

from haptable.errors import ConfigurationError, GeometryError, ScenarioTimeoutError, StreamError
from haptable.knob import (KnobSample, KnobSession, KnobSettings, KnobSpec, KnobTrial, constant_speed_trajectory,
                           knob_step, load_presets, load_trajectory, overshoot_trajectory, run_knob_scenario,
                           samples_from_frame, save_trajectory, speed_ramp_trajectory, trajectory_from_angles,
                           trial_matrix)

SAMPLES_DIR = Path(__file__).resolve().parents[1] / "samples"


def _session_over(spec, condition, angles, settings=None):
    times = np.arange(len(angles)) / 60.0
    session = KnobSession(spec, condition, settings)
    for sample in samples_from_frame(trajectory_from_angles(spec, times, angles)):
        session.step(sample)
    return session


def test_sweep_crosses_every_boundary():
    spec = KnobSpec(sector_count=16)
    trajectory = constant_speed_trajectory(spec, 270.0, 90.0)
    metrics = run_knob_scenario(spec, "HD", trajectory, target_sector=12)
    assert metrics.crossing_count == 12
    assert metrics.detent_count == 12
    assert metrics.overshoot_count == 0
    assert metrics.completion_time == pytest.approx(3.0)


def test_visual_condition_is_silent():
    spec = KnobSpec(sector_count=16)
    metrics = run_knob_scenario(spec, "V", constant_speed_trajectory(spec, 270.0, 90.0), target_sector=12)
    assert metrics.crossing_count == 12
    assert metrics.detent_count == 0
    assert not metrics.waveform.electro.any()


def test_detent_pulses_follow_crossings():
    spec = KnobSpec(sector_count=8)
    session = _session_over(spec, "HD", [0.0, 10.0, 50.0, 55.0, 60.0])
    amplitudes = [seg.amplitude for seg in session.segments]
    # a detent outlasts one frame and spills into the next segment
    assert amplitudes == [0.0, 0.0, 100.0, 100.0, 0.0]
    assert session.segments[2].shape == "pulse"


def test_carrier_conditions():
    spec = KnobSpec(sector_count=8)
    constant = _session_over(spec, "HD+CF", [0.0, 5.0, 10.0])
    assert {seg.frequency for seg in constant.segments} == {180.0}
    assert np.abs(constant.waveform().electro).max() == pytest.approx(50.0, rel=1e-3)

    settings = KnobSettings()
    slow = _session_over(spec, "HD+VF", [0.0, 0.5, 1.0, 1.5], settings)
    fast = _session_over(spec, "HD+VF", [0.0, 3.0, 6.0, 9.0], settings)
    assert settings.vf_min_freq < slow.segments[-1].frequency < fast.segments[-1].frequency <= settings.vf_max_freq


def test_boundary_carrier_peaks_at_edges():
    spec = KnobSpec(sector_count=8)
    centre = _session_over(spec, "HD+BF", [0.0, 22.5])
    near_edge = _session_over(spec, "HD+BF", [0.0, 44.0])
    assert centre.segments[-1].amplitude == pytest.approx(0.0, abs=1e-6)
    assert near_edge.segments[-1].amplitude > 40.0


def test_gap_detents_silence_the_carrier():
    spec = KnobSpec(sector_count=8)
    session = _session_over(spec, "HD+CF", [0.0, 50.0], KnobSettings(detent_style="gap"))
    assert not session.segments[1].samples.any()


def test_hysteresis_suppresses_chatter():
    spec = KnobSpec(sector_count=16)
    session = _session_over(spec, "HD", [0.0, 23.0, 21.5, 23.0, 21.0, 20.0])
    assert [(c.boundary, c.direction) for c in session.crossings] == [(1, 1), (1, -1)]
    assert session.sector == 0


def test_clockwise_orientation():
    spec = KnobSpec(sector_count=8, orientation=-1)
    session = _session_over(spec, "HD", [0.0, 30.0, 60.0])
    assert session.sector == 1


def test_unwrapping_past_half_turn():
    spec = KnobSpec(sector_count=8)
    session = _session_over(spec, "HD", np.arange(0.0, 400.0, 20.0))
    assert session.angle == pytest.approx(380.0)
    assert session.sector == 8
    assert session.current_item() == 0


def test_menu_clamps_items():
    spec = KnobSpec(sector_count=8, menu_length=3)
    session = _session_over(spec, "HD", [0.0, 100.0, 200.0])
    assert session.sector == 4
    assert session.current_item() == 2


def test_stream_errors():
    spec = KnobSpec()
    session = KnobSession(spec, "HD")
    session.step(KnobSample(t=0.0, thumb=(0.0, 0.0), index=(1.0, 0.0)))
    with pytest.raises(StreamError):
        session.step(KnobSample(t=0.0, thumb=(0.0, 0.0), index=(1.0, 0.0)))
    with pytest.raises(GeometryError):
        session.step(KnobSample(t=0.1, thumb=(5.0, 5.0), index=(5.0, 5.0)))


def test_knob_step_returns_session():
    session = KnobSession(KnobSpec(), "HD+CF")
    same, segment = knob_step(session, KnobSample(t=0.0, thumb=(0.0, 0.0), index=(1.0, 0.0)))
    assert same is session
    # first segment spans one frame period: 44100 / 60 samples
    assert len(segment.samples) == 735


def test_unknown_condition():
    with pytest.raises(ConfigurationError):
        KnobSession(KnobSpec(), "HD+XX")


def test_overshoot_metrics():
    spec = KnobSpec(sector_count=16)
    trajectory = overshoot_trajectory(spec, 270.0, 30.0, 90.0)
    metrics = run_knob_scenario(spec, "HD", trajectory, target_sector=12)
    assert metrics.overshoot_count == 1
    assert metrics.crossing_count == 14
    assert metrics.recovery_time > 0.2
    assert metrics.completion_time > 3.0


def test_unfinished_selection_times_out():
    spec = KnobSpec(sector_count=16)
    with pytest.raises(ScenarioTimeoutError) as info:
        run_knob_scenario(spec, "HD", constant_speed_trajectory(spec, 200.0, 90.0), target_sector=12)
    assert info.value.partial["final_sector"] == 8
    assert info.value.exit_code == 4


def test_trajectory_persistence(tmp_path):
    spec = KnobSpec()
    frame = speed_ramp_trajectory(spec, 1.0, 180.0)
    save_trajectory(frame, tmp_path / "traj.csv")
    loaded = load_trajectory(tmp_path / "traj.csv")
    np.testing.assert_array_equal(loaded.to_numpy(), frame.to_numpy())


def test_trial_targets():
    assert KnobTrial(condition="HD", sectors=16, distance=270.0).target_sector() == 12
    with pytest.raises(ConfigurationError):
        KnobTrial(condition="HD", sectors=16, distance=100.0).target_sector()


def test_trial_matrix_is_valid():
    trials = trial_matrix()
    assert len(trials) == 36
    assert all(t.target_sector() > 0 for t in trials)


def test_bundled_presets():
    trials = load_presets(SAMPLES_DIR / "knob_presets.json")
    assert len(trials) == 5
    assert all(t.target_sector() > 0 for t in trials)


def test_invalid_presets(tmp_path):
    path = tmp_path / "presets.json"
    path.write_text('[{"condition": "HD", "sectors": 1}]')
    with pytest.raises(ConfigurationError):
        load_presets(path)


@pytest.mark.parametrize("rate", [240.0, 25.0])
def test_segments_follow_the_sample_interval(rate):
    spec = KnobSpec(sector_count=16)
    times = np.arange(int(4.0 * rate)) / rate
    frame = trajectory_from_angles(spec, times, 67.5 * times)
    settings = KnobSettings()
    session = KnobSession(spec, "HD+CF", settings)
    for sample in samples_from_frame(frame):
        session.step(sample)
    waveform = session.waveform()
    assert np.all(np.diff(waveform.time) > 0)
    # the rendered span ends one interval after the last sample
    assert len(waveform.time) == int(round((times[-1] + 1.0 / rate) * settings.sample_rate))
    assert session.segments[10].t == pytest.approx(times[10], abs=1.0 / settings.sample_rate)


def test_irregular_sampling_stays_contiguous():
    spec = KnobSpec(sector_count=8)
    times = np.array([0.0, 0.01, 0.05, 0.06, 0.2])
    frame = trajectory_from_angles(spec, times, [0.0, 10.0, 20.0, 30.0, 40.0])
    session = KnobSession(spec, "HD+CF")
    for sample in samples_from_frame(frame):
        session.step(sample)
    rate = session.settings.sample_rate
    starts = [seg.t for seg in session.segments]
    ends = [seg.t + len(seg.samples) / rate for seg in session.segments]
    np.testing.assert_allclose(starts[1:], ends[:-1], atol=1e-12)
    assert np.all(np.diff(session.waveform().time) > 0)
