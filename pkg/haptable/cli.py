"""Command-line frontend: map generation, lookup tables, flow and knob waveforms, gestures, HTTP service.

Exit codes: 0 success, 2 usage error, 3 data error, 4 planning failure.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from haptable import __version__
from haptable.config import EngineConfig, load_config
from haptable.errors import ConfigurationError, HaptableError
from haptable.fixtures import worked_example_map
from haptable.flowlut import build_lookup, difference_curves, load_lookup, plan_point_flow, render_stimulus, save_lookup
from haptable.handflow import (DIRECTIONS, HandRegion, activity_frame, levels_frame, plan_hand_flow, region_preset,
                               render_hand_flow, save_plan)
from haptable.knob import (CONDITIONS, KnobSpec, KnobTrial, constant_speed_trajectory, load_presets,
                           load_trajectory, overshoot_trajectory, run_knob_scenario, save_trajectory)
from haptable.platesim import generate_vibration_map, load_layout, synthetic_map
from haptable.vibmap import ACTUATORS, VibrationMap, load_map, save_map
from haptable.waveform import Waveform, save_waveform_csv, save_waveform_pcm

logger = logging.getLogger(__name__)

DEFAULT_SECTORS = 8
DEFAULT_DISTANCE = 135.0


def parse_point(text: str) -> Union[int, Tuple[float, float]]:
    """A 1-based grid index such as ``51`` or a position in mm such as ``371.7,223.6``"""
    try:
        if "," in text:
            x, y = (float(v) for v in text.split(","))
            return x, y
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is neither a grid index nor an x,y position")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Flag values that layer over the configuration file"""
    mapping = {
        "drive": ("flow", "drive"), "sample_rate": ("flow", "sample_rate"), "ramp": ("flow", "ramp"),
        "part_duration": ("flow", "part_duration"), "workers": ("flow", "workers"),
        "rows": ("grid", "rows"), "cols": ("grid", "cols"), "seed": ("seed",),
        "jnd_multiple": ("hand", "jnd_multiple"), "detent_style": ("knob", "detent_style"),
    }
    overrides: Dict[str, Any] = {}
    for flag, path in mapping.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if len(path) == 1:
            overrides[path[0]] = value
        else:
            overrides.setdefault(path[0], {})[path[1]] = value
    return overrides


def _write_waveform(waveform: Waveform, args: argparse.Namespace, config: EngineConfig) -> None:
    if args.out:
        save_waveform_csv(waveform, args.out)
        print(f"wrote {args.out} ({len(waveform.time)} samples, {waveform.duration:.3f} s)")
    if args.pcm:
        save_waveform_pcm(waveform, args.pcm, full_scale=config.flow.max_drive)
        print(f"wrote {args.pcm}")


def _plot_dir(args: argparse.Namespace) -> Optional[Path]:
    if not getattr(args, "emit_plot", None):
        return None
    directory = Path(args.emit_plot)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


# --------------------------------------------------------------------------- commands

def cmd_simulate_frf(args: argparse.Namespace, config: EngineConfig) -> int:
    axis = config.sweep.axis()
    layout = load_layout(args.layout) if args.layout else config.plate
    if args.randomize:
        vmap = synthetic_map(config.seed, config.grid, axis, layout.plate)
    else:
        vmap = generate_vibration_map(layout.plate, layout.resolved_patches(), config.grid, axis,
                                      config.sweep.sweep_limit)
    save_map(vmap, args.out)
    print(f"wrote {args.out}: {vmap.grid.rows}x{vmap.grid.cols} points, {len(ACTUATORS)} actuators, "
          f"{axis.count} bins")
    _print_peaks(vmap)
    plots = _plot_dir(args)
    if plots is not None:
        curves = vmap.magnitudes[args.plot_point - 1]
        frame = pd.DataFrame({"freq": axis.values, **{a: curves[i] for i, a in enumerate(ACTUATORS)}})
        frame.to_csv(plots / f"frf_point{args.plot_point}.csv", index=False)
    return 0


def _print_peaks(vmap: VibrationMap) -> None:
    mean = vmap.magnitudes.mean(axis=0)
    for i, actuator in enumerate(ACTUATORS):
        b = int(np.argmax(mean[i]))
        print(f"  {actuator}: peak {vmap.freq_axis.values[b]:.0f} Hz ({mean[i, b]:.4g} um/Vp mean)")


def cmd_fixture(args: argparse.Namespace, config: EngineConfig) -> int:
    save_map(worked_example_map(seed=args.fixture_seed), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_build_lut(args: argparse.Namespace, config: EngineConfig) -> int:
    vmap = load_map(args.map)
    lut = build_lookup(vmap, config.sensitivity, drive=config.flow.drive, workers=config.flow.workers,
                       progress=args.progress)
    save_lookup(lut, args.out)
    feasible = int(lut.feasible.sum())
    print(f"wrote {args.out}: {lut.point_count * (lut.point_count - 1)} ordered pairs, {feasible} feasible")
    return 0


def cmd_flow_point(args: argparse.Namespace, config: EngineConfig) -> int:
    vmap = load_map(args.map)
    lut = load_lookup(args.lut) if args.lut else None
    flow = config.flow
    plan = plan_point_flow(lut, vmap, config.sensitivity, args.source, args.destination,
                           durations=(flow.part_duration, flow.part_duration), drive=flow.drive, ramp=flow.ramp,
                           max_drive=flow.max_drive, sample_rate=flow.sample_rate)
    for k, (part, level) in enumerate(zip(plan.parts, plan.sensation_levels), start=1):
        print(f"part {k}: {part.actuator} {part.freq:.0f} Hz amplitude {part.amplitude:.3f} Vp "
              f"({level:.2f} dB SL)")
    _write_waveform(render_stimulus(plan), args, config)
    plots = _plot_dir(args)
    if plots is not None:
        for name, (a, p) in (("source", (args.source, args.destination)),
                             ("destination", (args.destination, args.source))):
            diff = difference_curves(vmap, a, p)
            frame = pd.DataFrame({"freq": vmap.freq_axis.values, **{act: diff[i] for i, act in enumerate(ACTUATORS)}})
            frame.to_csv(plots / f"difference_{name}.csv", index=False)
    return 0


def _region(args: argparse.Namespace, config: EngineConfig) -> HandRegion:
    if "," in args.region:
        x, y = (float(v) for v in args.region.split(","))
        return HandRegion(center=(x, y), side=config.hand.side, subgrid=config.hand.subgrid)
    return region_preset(args.region, config.hand.side, config.hand.subgrid)


def cmd_flow_hand(args: argparse.Namespace, config: EngineConfig) -> int:
    vmap = load_map(args.map)
    hand, flow = config.hand, config.flow
    plan = plan_hand_flow(vmap, config.sensitivity, _region(args, config), args.direction, drive=flow.drive,
                          min_freq=hand.min_freq, max_freq=hand.max_freq, jnd_multiple=hand.jnd_multiple)
    for k, part in enumerate(plan.parts, start=1):
        rows = " / ".join("".join("#" if cell else "." for cell in row) for row in part.activity)
        print(f"part {k}: {part.actuator} {part.freq:.0f} Hz  activity {rows}")
    if args.plan:
        save_plan(plan, args.plan)
        print(f"wrote {args.plan}")
    waveform = render_hand_flow(plan, (flow.part_duration, flow.part_duration), flow.sample_rate, flow.ramp)
    _write_waveform(waveform, args, config)
    plots = _plot_dir(args)
    if plots is not None:
        activity_frame(plan).to_csv(plots / "activity.csv", index=False)
        levels_frame(vmap, config.sensitivity, plan).to_csv(plots / "levels.csv", index=False)
    return 0


def _pick(value: Any, fallback: Any) -> Any:
    return fallback if value is None else value


def _knob_trial(args: argparse.Namespace) -> KnobTrial:
    if args.preset is None:
        return KnobTrial(condition=args.condition, sectors=_pick(args.sectors, DEFAULT_SECTORS),
                         distance=_pick(args.distance, DEFAULT_DISTANCE))
    trials = load_presets(args.preset)
    if not 0 <= args.preset_index < len(trials):
        raise ConfigurationError(f"preset index {args.preset_index} out of range 0..{len(trials) - 1} in {args.preset}")
    trial = trials[args.preset_index]
    # explicit flags still override the preset
    return KnobTrial(condition=trial.condition, sectors=_pick(args.sectors, trial.sectors),
                     distance=_pick(args.distance, trial.distance))


def cmd_knob(args: argparse.Namespace, config: EngineConfig) -> int:
    trial = _knob_trial(args)
    spec = KnobSpec(sector_count=trial.sectors)
    target = trial.target_sector()
    print(f"trial: {trial.condition}, {trial.sectors} sectors, {trial.distance:g} deg")
    if args.trajectory:
        trajectory = load_trajectory(args.trajectory)
    elif args.overshoot:
        trajectory = overshoot_trajectory(spec, trial.distance, args.overshoot, args.speed,
                                          frame_period=config.knob.frame_period)
    else:
        trajectory = constant_speed_trajectory(spec, trial.distance + spec.sector_width / 2, args.speed,
                                               frame_period=config.knob.frame_period)
    if args.save_trajectory:
        save_trajectory(trajectory, args.save_trajectory)
    metrics = run_knob_scenario(spec, trial.condition, trajectory, target, settings=config.knob)
    for key, value in metrics.summary().items():
        print(f"{key}: {value:.4g}" if isinstance(value, float) else f"{key}: {value}")
    _write_waveform(metrics.waveform, args, config)
    plots = _plot_dir(args)
    if plots is not None:
        metrics.waveform.to_frame()[["time", "electro"]].to_csv(plots / "electro_trace.csv", index=False)
    return 0


def cmd_gesture_make_corpus(args: argparse.Namespace, config: EngineConfig) -> int:
    from haptable.gesture.corpus import generate_corpus, save_corpus

    corpus = generate_corpus(args.per_class, seed=config.seed, settings=config.gesture, progress=args.progress)
    save_corpus(corpus, args.out)
    print(f"wrote {args.out}: {len(corpus.samples)} samples")
    return 0


def cmd_gesture_train(args: argparse.Namespace, config: EngineConfig) -> int:
    from haptable.gesture.classifier import save_model, train
    from haptable.gesture.corpus import corpus_features, load_corpus
    from haptable.gesture.settings import DYNAMIC_LABELS, STATIC_LABELS

    corpus = load_corpus(args.corpus)
    reports = {}
    for kind, labels, out in (("static", STATIC_LABELS, args.static_model),
                              ("dynamic", DYNAMIC_LABELS, args.dynamic_model)):
        if not out:
            continue
        features = corpus_features(corpus, kind, config.gesture, progress=args.progress)
        model, report = train(features.features, features.labels, labels, kind, config.gesture,
                              feature_weights=features.feature_weights, progress=args.progress)
        save_model(model, out)
        reports[kind] = report.model_dump()
        print(f"{kind}: {100 * report.accuracy:.1f}% two-fold accuracy over {len(features.labels)} samples "
              f"({features.skipped} skipped), model {out}")
    if args.report:
        Path(args.report).write_text(json.dumps(reports, indent=1))
    return 0


def cmd_gesture_classify(args: argparse.Namespace, config: EngineConfig) -> int:
    from haptable.gesture.classifier import load_model
    from haptable.gesture.frames import read_frame, read_pgm
    from haptable.gesture.recognizer import GestureRecognizer

    recognizer = GestureRecognizer(
        static_model=load_model(args.static_model) if args.static_model else None,
        dynamic_model=load_model(args.dynamic_model) if args.dynamic_model else None,
        settings=config.gesture,
        background=read_pgm(args.background) if args.background else None)
    period = 1.0 / config.gesture.frame_rate
    for k, path in enumerate(args.frames):
        result = recognizer.push(read_frame(path), timestamp=k * period)
        if result is not None:
            print(f"{path}: {result.kind} {result.label} (score {result.score:.3f}, "
                  f"latency {1000 * result.latency:.1f} ms)")
    if not recognizer.history:
        print("no gesture recognised")
    return 0


def cmd_serve(args: argparse.Namespace, config: EngineConfig) -> int:
    import uvicorn

    from api.main import create_app
    from api.repository import ArtifactRepository

    repository = ArtifactRepository(map_path=args.map, lookup_path=args.lut, config=config)
    uvicorn.run(create_app(repository), host=args.host, port=args.port)
    return 0


# --------------------------------------------------------------------------- parser

def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="waveform CSV (time, piezo, electro, actuator)")
    parser.add_argument("--pcm", help="also write a 16-bit two-channel WAV file")
    parser.add_argument("--emit-plot", metavar="DIR", help="write gnuplot-ready CSV traces into DIR")


def _add_flow_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--drive", type=float, help="drive amplitude in Vp")
    parser.add_argument("--sample-rate", type=int)
    parser.add_argument("--ramp", type=float, help="linear ramp length in s")
    parser.add_argument("--part-duration", type=float, help="duration of each flow part in s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haptable", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON configuration file (default: $HAPTABLE_CONFIG)")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--seed", type=int, help="seed for every random draw of this run")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("simulate-frf", help="synthesize a vibration map from the plate model")
    p.add_argument("--out", required=True, help="vibration map file")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--layout", help="plate and patch layout JSON (default: the plate section of the configuration)")
    p.add_argument("--randomize", action="store_true", help="draw damping and patch forces from --seed")
    p.add_argument("--plot-point", type=int, default=1, help="grid point whose FRFs --emit-plot writes")
    p.add_argument("--emit-plot", metavar="DIR")
    p.set_defaults(handler=cmd_simulate_frf)

    p = commands.add_parser("fixture", help="write the worked-example fixture map")
    p.add_argument("--out", required=True)
    p.add_argument("--fixture-seed", type=int, default=7)
    p.set_defaults(handler=cmd_fixture)

    p = commands.add_parser("build-lut", help="precompute the excitation lookup table of a map")
    p.add_argument("--map", required=True)
    p.add_argument("--out", required=True, help="lookup table CSV")
    p.add_argument("--drive", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(handler=cmd_build_lut)

    flow = commands.add_parser("flow", help="plan and render vibrotactile flow")
    flows = flow.add_subparsers(dest="flow_command", required=True)
    p = flows.add_parser("point", help="flow between two points")
    p.add_argument("--map", required=True)
    p.add_argument("--lut", help="lookup table CSV; off-grid pairs are evaluated directly")
    p.add_argument("--from", dest="source", type=parse_point, required=True)
    p.add_argument("--to", dest="destination", type=parse_point, required=True)
    _add_flow_overrides(p)
    _add_output(p)
    p.set_defaults(handler=cmd_flow_point)

    p = flows.add_parser("hand", help="directional flow under a hand")
    p.add_argument("--map", required=True)
    p.add_argument("--region", default="prelim", help="region preset or x,y centre in mm")
    p.add_argument("--direction", required=True, choices=DIRECTIONS)
    p.add_argument("--jnd-multiple", type=float)
    p.add_argument("--plan", help="write the plan as JSON")
    _add_flow_overrides(p)
    _add_output(p)
    p.set_defaults(handler=cmd_flow_hand)

    p = commands.add_parser("knob", help="replay a knob rotation and render its electrostatic waveform")
    trial = p.add_mutually_exclusive_group(required=True)
    trial.add_argument("--condition", choices=CONDITIONS)
    trial.add_argument("--preset", help="JSON list of knob trials (condition, sectors, distance)")
    p.add_argument("--preset-index", type=int, default=0, help="trial of --preset to run")
    p.add_argument("--sectors", type=int, help=f"sector count (default {DEFAULT_SECTORS})")
    p.add_argument("--distance", type=float, help=f"target rotation in degrees (default {DEFAULT_DISTANCE:g})")
    p.add_argument("--speed", type=float, default=90.0, help="synthetic rotation speed in deg/s")
    p.add_argument("--overshoot", type=float, help="synthetic overshoot past the target in degrees")
    p.add_argument("--trajectory", help="trajectory CSV (t, thumb_x, thumb_y, index_x, index_y)")
    p.add_argument("--save-trajectory", help="write the replayed trajectory as CSV")
    p.add_argument("--detent-style", choices=["pulse", "gap"])
    _add_output(p)
    p.set_defaults(handler=cmd_knob)

    gesture = commands.add_parser("gesture", help="gesture corpora, training and classification")
    gestures = gesture.add_subparsers(dest="gesture_command", required=True)
    p = gestures.add_parser("make-corpus", help="generate a synthetic contact-image corpus")
    p.add_argument("--out", required=True, help="corpus directory")
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--progress", action="store_true")
    p.set_defaults(handler=cmd_gesture_make_corpus)

    p = gestures.add_parser("train", help="train the static and dynamic classifiers")
    p.add_argument("--corpus", required=True)
    p.add_argument("--static-model")
    p.add_argument("--dynamic-model")
    p.add_argument("--report", help="write the cross-validation reports as JSON")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(handler=cmd_gesture_train)

    p = gestures.add_parser("classify", help="run the streaming recognizer over a frame sequence")
    p.add_argument("frames", nargs="+", help="PGM images or CSV masks in stream order")
    p.add_argument("--background", help="background PGM for raw frames")
    p.add_argument("--static-model")
    p.add_argument("--dynamic-model")
    p.set_defaults(handler=cmd_gesture_classify)

    p = commands.add_parser("serve", help="run the HTTP service")
    p.add_argument("--map", help="vibration map served (default: the fixture map)")
    p.add_argument("--lut", help="lookup table served alongside the map")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, _overrides(args))
        return args.handler(args, config)
    except HaptableError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        # flag values rejected by a domain model
        problems = "; ".join(err["msg"] for err in e.errors())
        print(f"error: invalid {e.title}: {problems}", file=sys.stderr)
        return ConfigurationError.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
