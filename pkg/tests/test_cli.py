import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from haptable import __version__
from haptable.cli import main, parse_point
from haptable.gesture.corpus import hand_mask
from haptable.gesture.frames import write_mask_csv
from haptable.vibmap import load_map, save_map


@pytest.fixture
def fixture_file(tmp_path):
    path = tmp_path / "fixture.txt"
    assert main(["fixture", "--out", str(path)]) == 0
    return path


@pytest.fixture
def hand_map_file(tmp_path, hand_map):
    path = tmp_path / "hand.txt"
    save_map(hand_map, path)
    return path


def test_parse_point():
    assert parse_point("51") == 51
    assert parse_point("371.7,223.6") == (371.7, 223.6)


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_fixture_flow_point(tmp_path, fixture_file, capsys):
    wave = tmp_path / "flow.csv"
    plots = tmp_path / "plots"
    code = main(["flow", "point", "--map", str(fixture_file), "--from", "51", "--to", "52",
                 "--sample-rate", "8000", "--out", str(wave), "--emit-plot", str(plots)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.index("part 1: PA 465 Hz") < out.index("part 2: PALL 428 Hz")
    frame = pd.read_csv(wave, keep_default_na=False)
    assert len(frame) == 2 * 1.5 * 8000
    assert (plots / "difference_source.csv").exists()
    assert (plots / "difference_destination.csv").exists()


def test_fixture_map_round_trips(fixture_file, fixture_map):
    assert load_map(fixture_file).same_as(fixture_map)


def test_build_lut_is_deterministic(tmp_path, capsys):
    vmap = tmp_path / "map.txt"
    assert main(["simulate-frf", "--rows", "2", "--cols", "3", "--out", str(vmap),
                 "--emit-plot", str(tmp_path / "plots")]) == 0
    assert (tmp_path / "plots" / "frf_point1.csv").exists()
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["build-lut", "--map", str(vmap), "--out", str(first)]) == 0
    assert main(["build-lut", "--map", str(vmap), "--out", str(second), "--workers", "2"]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert "30 ordered pairs" in capsys.readouterr().out


def test_lookup_driven_flow(tmp_path, fixture_file, capsys):
    lut = tmp_path / "lut.csv"
    assert main(["build-lut", "--map", str(fixture_file), "--out", str(lut)]) == 0
    assert main(["flow", "point", "--map", str(fixture_file), "--lut", str(lut), "--from", "52", "--to", "51"]) == 0
    out = capsys.readouterr().out
    assert "part 1: PALL 428 Hz" in out
    assert "part 2: PA 465 Hz" in out


def test_knob_visual_condition_is_silent(tmp_path, capsys):
    wave = tmp_path / "knob.csv"
    code = main(["knob", "--condition", "V", "--sectors", "16", "--distance", "270", "--out", str(wave)])
    assert code == 0
    assert "crossing_count: 12" in capsys.readouterr().out
    assert not pd.read_csv(wave, keep_default_na=False)["electro"].any()


def test_knob_overshoot_trace(tmp_path, capsys):
    plots = tmp_path / "plots"
    code = main(["knob", "--condition", "HD+CF", "--sectors", "16", "--distance", "270", "--overshoot", "30",
                 "--emit-plot", str(plots), "--save-trajectory", str(tmp_path / "traj.csv")])
    assert code == 0
    assert "overshoot_count: 1" in capsys.readouterr().out
    assert (plots / "electro_trace.csv").exists()
    assert main(["knob", "--condition", "HD", "--sectors", "16", "--distance", "270",
                 "--trajectory", str(tmp_path / "traj.csv")]) == 0


def test_hand_flow_outputs(tmp_path, hand_map_file, capsys):
    plan = tmp_path / "plan.json"
    plots = tmp_path / "plots"
    code = main(["flow", "hand", "--map", str(hand_map_file), "--direction", "L->R", "--plan", str(plan),
                 "--part-duration", "0.2", "--sample-rate", "4000", "--emit-plot", str(plots)])
    assert code == 0
    assert "part 1: PA 100 Hz" in capsys.readouterr().out
    assert json.loads(plan.read_text())["direction"] == "L->R"
    assert len(pd.read_csv(plots / "activity.csv")) == 18


def test_planning_failures_exit_4(tmp_path, hand_map_file, capsys):
    assert main(["flow", "hand", "--map", str(hand_map_file), "--direction", "U->D"]) == 4
    assert main(["flow", "point", "--map", str(hand_map_file), "--from", "2", "--to", "1"]) == 4
    assert "error:" in capsys.readouterr().err


def test_data_errors_exit_3(tmp_path, fixture_file):
    assert main(["flow", "point", "--map", str(tmp_path / "missing.txt"), "--from", "1", "--to", "2"]) == 3
    assert main(["flow", "point", "--map", str(fixture_file), "--from", "51", "--to", "51"]) == 3
    assert main(["knob", "--condition", "HD", "--sectors", "16", "--distance", "100"]) == 3
    broken = tmp_path / "config.json"
    broken.write_text("{")
    assert main(["--config", str(broken), "fixture", "--out", str(tmp_path / "f.txt")]) == 3


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["knob", "--sectors", "8"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["flow", "point", "--map", "m.txt", "--from", "x", "--to", "1"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["knob", "--condition", "HD", "--preset", "presets.json"])
    assert info.value.code == 2


def test_rejected_flag_values_exit_3(capsys):
    assert main(["knob", "--condition", "HD", "--sectors", "1"]) == 3
    err = capsys.readouterr().err
    assert err.startswith("error: invalid KnobSpec")
    assert "at least two sectors" in err
    assert len(err.strip().splitlines()) == 1


def test_gesture_pipeline(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert main(["--seed", "3", "gesture", "make-corpus", "--out", str(corpus), "--per-class", "4"]) == 0
    static_model, dynamic_model = tmp_path / "static.json", tmp_path / "dynamic.json"
    report = tmp_path / "report.json"
    assert main(["gesture", "train", "--corpus", str(corpus), "--static-model", str(static_model),
                 "--dynamic-model", str(dynamic_model), "--report", str(report)]) == 0
    assert set(json.loads(report.read_text())) == {"static", "dynamic"}

    frames = []
    for k in range(4):
        path = tmp_path / f"frame{k}.csv"
        write_mask_csv(path, hand_mask("open-hand", theta=20.0))
        frames.append(str(path))
    capsys.readouterr()
    assert main(["gesture", "classify", *frames, "--static-model", str(static_model),
                 "--dynamic-model", str(dynamic_model)]) == 0
    assert "static" in capsys.readouterr().out


def test_knob_presets(tmp_path, capsys):
    presets = Path(__file__).resolve().parents[1] / "samples" / "knob_presets.json"
    assert main(["knob", "--preset", str(presets), "--preset-index", "3"]) == 0
    out = capsys.readouterr().out
    assert "trial: V, 8 sectors, 270 deg" in out
    assert "crossing_count: 6" in out

    # flags override the preset's own values
    assert main(["knob", "--preset", str(presets), "--preset-index", "3", "--distance", "135"]) == 0
    assert "crossing_count: 3" in capsys.readouterr().out

    assert main(["knob", "--preset", str(presets), "--preset-index", "9"]) == 3
    assert "preset index 9" in capsys.readouterr().err


def test_simulate_frf_with_layout(tmp_path):
    from haptable.platesim import PlateSpec, default_patches

    patches = [p.model_dump() for p in default_patches(PlateSpec())]
    patches[0]["force_scale"] *= 2
    layout = tmp_path / "layout.json"
    layout.write_text(json.dumps({"patches": patches}))
    plain, scaled = tmp_path / "plain.txt", tmp_path / "scaled.txt"
    assert main(["simulate-frf", "--rows", "2", "--cols", "3", "--out", str(plain)]) == 0
    assert main(["simulate-frf", "--rows", "2", "--cols", "3", "--layout", str(layout), "--out", str(scaled)]) == 0
    a, b = load_map(plain).magnitudes, load_map(scaled).magnitudes
    np.testing.assert_allclose(b[:, 0], 2 * a[:, 0], rtol=1e-9)
    np.testing.assert_array_equal(b[:, 1], a[:, 1])

    layout.write_text("[")
    assert main(["simulate-frf", "--layout", str(layout), "--out", str(plain)]) == 3
