"""Synthetic contact-image corpus: five static hand silhouettes and five dynamic contact motions.

Hands are drawn in a local frame (x right, y down, palm centre at the
origin, fingers pointing up) and then rotated, scaled and placed. The forearm
is clipped by the bounding circle of hand plus wrist stub, so every silhouette
meets its bounding circle along a real wrist arc.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from tqdm import tqdm

from haptable.errors import DegenerateContourError, GeometryError, MapFormatError, WristNotFoundError
from haptable.gesture.features import block_weights, dynamic_blocks, dynamic_features, hand_descriptor, static_features
from haptable.gesture.frames import preprocess, read_pgm, write_pgm
from haptable.gesture.geometry import min_enclosing_circle
from haptable.gesture.settings import DYNAMIC_LABELS, STATIC_LABELS, GestureSettings

logger = logging.getLogger(__name__)

FINGER_RADIUS = 9
CONTACT_LEVEL = 150
PALM_AXES = (42, 48)
WRIST_HALF_WIDTH = 30
WRIST_STUB = (20, 110)
FOREARM_LENGTH = 400
PLACEMENT_MARGIN = 170
DYNAMIC_FRAME_COUNT = 6
MANIFEST_COLUMNS = ["sample", "kind", "label", "frame", "file"]

# (base point, angle from straight up in degrees, length)
FINGERS: Dict[str, List[Tuple[Tuple[float, float], float, float]]] = {
    "1-finger": [((-12, -40), 0, 80)],
    "2-finger": [((-14, -40), -8, 80), ((10, -42), 8, 84)],
    "L-shape": [((-12, -40), 0, 80), ((-36, 0), -90, 55)],
    "closed-hand": [],
    "open-hand": [((-40, 0), -60, 52), ((-24, -38), -22, 76), ((-6, -45), -6, 84), ((14, -42), 10, 78),
                  ((30, -32), 26, 60)],
}


class GestureSample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str
    label: str
    frames: List[np.ndarray]


class GestureCorpus(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    background: np.ndarray
    samples: List[GestureSample]

    def of_kind(self, kind: str) -> List[GestureSample]:
        return [s for s in self.samples if s.kind == kind]


class _Placement:
    """Local hand frame -> image: rotate clockwise on screen by theta, scale, translate"""

    def __init__(self, theta: float, scale: float, center: Tuple[float, float]):
        self.theta, self.scale, self.center = theta, scale, center
        self._cos, self._sin = math.cos(math.radians(theta)), math.sin(math.radians(theta))

    def __call__(self, x: float, y: float) -> Tuple[int, int]:
        u = self._cos * x - self._sin * y
        v = self._sin * x + self._cos * y
        return int(round(self.center[0] + self.scale * u)), int(round(self.center[1] + self.scale * v))

    def length(self, value: float) -> int:
        return max(int(round(self.scale * value)), 1)


def _draw_hand(canvas: np.ndarray, label: str, place: _Placement, rng: Optional[np.random.Generator]) -> None:
    cv2.ellipse(canvas, place(0, 0), (place.length(PALM_AXES[0]), place.length(PALM_AXES[1])), place.theta,
                0, 360, 1, thickness=-1)
    for (bx, by), angle, length in FINGERS[label]:
        if rng is not None:
            angle += rng.uniform(-4, 4)
            length *= rng.uniform(0.92, 1.08)
        a = math.radians(angle)
        tip = (bx + length * math.sin(a), by - length * math.cos(a))
        cv2.line(canvas, place(bx, by), place(*tip), 1, thickness=2 * place.length(FINGER_RADIUS))


def _band(place: _Placement, top: float, bottom: float) -> np.ndarray:
    w = WRIST_HALF_WIDTH
    return np.array([place(-w, top), place(w, top), place(w, bottom), place(-w, bottom)], dtype=np.int32)


def hand_mask(label: str, theta: float = 0.0, scale: float = 1.0, center: Tuple[float, float] = (320, 240),
              settings: Optional[GestureSettings] = None, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Binary silhouette of a static gesture; ``theta`` is the angle canonicalisation should recover"""
    settings = settings or GestureSettings()
    if label not in FINGERS:
        raise ValueError(f"unknown static gesture {label!r}")
    place = _Placement(theta, scale, center)
    canvas = np.zeros((settings.height, settings.width), dtype=np.uint8)
    _draw_hand(canvas, label, place, rng)
    cv2.fillPoly(canvas, [_band(place, *WRIST_STUB)], 1)
    circle = min_enclosing_circle(canvas.astype(bool))

    forearm = np.zeros_like(canvas)
    cv2.fillPoly(forearm, [_band(place, WRIST_STUB[0], FOREARM_LENGTH)], 1)
    ys, xs = np.mgrid[0:settings.height, 0:settings.width]
    inside = np.hypot(xs - circle.cx, ys - circle.cy) <= circle.r
    return canvas.astype(bool) | (forearm.astype(bool) & inside)


def _fingertip(canvas: np.ndarray, center: Sequence[float], rng: np.random.Generator) -> None:
    cv2.ellipse(canvas, (int(round(center[0])), int(round(center[1]))), (9, 11), float(rng.uniform(0, 180)),
                0, 360, 1, thickness=-1)


def motion_masks(label: str, rng: np.random.Generator, settings: Optional[GestureSettings] = None,
                 frames: int = DYNAMIC_FRAME_COUNT) -> List[np.ndarray]:
    """Contact masks of one dynamic gesture, one per frame"""
    settings = settings or GestureSettings()
    shape = (settings.height, settings.width)
    center = np.array([rng.uniform(200, settings.width - 200), rng.uniform(180, settings.height - 180)])
    heading = rng.uniform(0, 2 * math.pi)
    direction = np.array([math.cos(heading), math.sin(heading)])
    sign = rng.choice([-1.0, 1.0])
    masks = []
    if label == "drag":
        speed = rng.uniform(7, 12)
        for k in range(frames):
            canvas = np.zeros(shape, np.uint8)
            _fingertip(canvas, center + k * speed * direction, rng)
            masks.append(canvas)
    elif label == "wipe":
        speed, angle = rng.uniform(8, 14), float(rng.uniform(0, 180))
        for k in range(frames):
            canvas = np.zeros(shape, np.uint8)
            p = center + k * speed * direction
            cv2.ellipse(canvas, (int(round(p[0])), int(round(p[1]))), (40, 55), angle, 0, 360, 1, thickness=-1)
            masks.append(canvas)
    elif label == "rotate":
        radius, step = rng.uniform(35, 50), sign * math.radians(rng.uniform(4, 8))
        for k in range(frames):
            canvas = np.zeros(shape, np.uint8)
            for offset in (0.0, math.pi):
                a = heading + offset + k * step
                _fingertip(canvas, center + radius * np.array([math.cos(a), math.sin(a)]), rng)
            masks.append(canvas)
    elif label in ("spread/pile", "zoom"):
        count = 5 if label == "spread/pile" else 2
        radius = rng.uniform(45, 60) if count == 5 else rng.uniform(40, 60)
        rate = sign * rng.uniform(5, 8)
        angles = heading + np.arange(count) * 2 * math.pi / count + rng.uniform(-0.15, 0.15, count)
        for k in range(frames):
            canvas = np.zeros(shape, np.uint8)
            r = max(radius + k * rate, 22.0)
            for a in angles:
                _fingertip(canvas, center + r * np.array([math.cos(a), math.sin(a)]), rng)
            masks.append(canvas)
    else:
        raise ValueError(f"unknown dynamic gesture {label!r}")
    return [m.astype(bool) for m in masks]


def make_background(rng: np.random.Generator, settings: Optional[GestureSettings] = None) -> np.ndarray:
    settings = settings or GestureSettings()
    return np.clip(40 + rng.normal(0, 2, (settings.height, settings.width)), 0, 255).astype(np.uint8)


def render_raw(mask: np.ndarray, background: np.ndarray, rng: np.random.Generator,
               gradient: Optional[Tuple[float, float, float]] = None, noise: float = 3.0) -> np.ndarray:
    """Camera-like frame: background + slow illumination plane + bright contacts + sensor noise"""
    height, width = mask.shape
    gx, gy, offset = gradient if gradient is not None else (rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                                                            rng.uniform(0, 20))
    ys, xs = np.mgrid[0:height, 0:width]
    raw = (background.astype(float) + gx * (xs - width / 2) + gy * (ys - height / 2) + offset
           + CONTACT_LEVEL * mask + rng.normal(0, noise, mask.shape))
    return np.clip(np.round(raw), 0, 255).astype(np.uint8)


def generate_corpus(per_class: int, seed: int = 0, settings: Optional[GestureSettings] = None,
                    kinds: Sequence[str] = ("static", "dynamic"), progress: bool = False) -> GestureCorpus:
    settings = settings or GestureSettings()
    rng = np.random.default_rng(seed)
    background = make_background(rng, settings)
    jobs = []
    if "static" in kinds:
        jobs += [("static", label) for label in STATIC_LABELS for _ in range(per_class)]
    if "dynamic" in kinds:
        jobs += [("dynamic", label) for label in DYNAMIC_LABELS for _ in range(per_class)]

    samples = []
    for kind, label in tqdm(jobs, desc="corpus", disable=not progress):
        if kind == "static":
            m = PLACEMENT_MARGIN
            mask = hand_mask(label, theta=rng.uniform(0, 360), scale=rng.uniform(0.8, 1.2),
                             center=(rng.uniform(m, settings.width - m), rng.uniform(m, settings.height - m)),
                             settings=settings, rng=rng)
            frames = [render_raw(mask, background, rng)]
        else:
            gradient = (rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), rng.uniform(0, 20))
            frames = [render_raw(mask, background, rng, gradient) for mask in motion_masks(label, rng, settings)]
        samples.append(GestureSample(kind=kind, label=label, frames=frames))
    logger.info("generated %d gesture samples", len(samples))
    return GestureCorpus(background=background, samples=samples)


def save_corpus(corpus: GestureCorpus, directory: Union[str, Path]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_pgm(directory / "background.pgm", corpus.background)
    rows = []
    for i, sample in enumerate(corpus.samples):
        for k, frame in enumerate(sample.frames):
            name = f"s{i:05d}_f{k}.pgm"
            write_pgm(directory / name, frame)
            rows.append({"sample": i, "kind": sample.kind, "label": sample.label, "frame": k, "file": name})
    pd.DataFrame.from_records(rows, columns=MANIFEST_COLUMNS).to_csv(directory / "manifest.csv", index=False)
    logger.info("wrote corpus %s (%d samples)", directory, len(corpus.samples))


def load_corpus(directory: Union[str, Path]) -> GestureCorpus:
    directory = Path(directory)
    try:
        manifest = pd.read_csv(directory / "manifest.csv")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MapFormatError(f"cannot read corpus manifest in {directory}: {e}")
    if list(manifest.columns) != MANIFEST_COLUMNS:
        raise MapFormatError(f"corpus manifest in {directory} must have columns {','.join(MANIFEST_COLUMNS)}")
    samples = []
    for _, group in manifest.sort_values(["sample", "frame"]).groupby("sample", sort=True):
        first = group.iloc[0]
        samples.append(GestureSample(kind=first["kind"], label=first["label"],
                                     frames=[read_pgm(directory / name) for name in group["file"]]))
    return GestureCorpus(background=read_pgm(directory / "background.pgm"), samples=samples)


class FeatureSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: str
    features: np.ndarray
    labels: List[str]
    feature_weights: Optional[np.ndarray] = None
    skipped: int = 0


def sample_features(sample: GestureSample, background: np.ndarray,
                    settings: Optional[GestureSettings] = None) -> np.ndarray:
    settings = settings or GestureSettings()
    if sample.kind == "static":
        frame = preprocess(sample.frames[0], background, settings)
        return static_features(hand_descriptor(frame, settings))
    frames = [preprocess(raw, background, settings, largest_only=False) for raw in sample.frames]
    return dynamic_features(frames, settings)


def corpus_features(corpus: GestureCorpus, kind: str, settings: Optional[GestureSettings] = None,
                    progress: bool = False) -> FeatureSet:
    """Feature matrix of one gesture kind; samples whose wrist or contour cannot be found are skipped"""
    settings = settings or GestureSettings()
    rows, labels, skipped = [], [], 0
    for sample in tqdm(corpus.of_kind(kind), desc=f"{kind} features", disable=not progress):
        try:
            rows.append(sample_features(sample, corpus.background, settings))
        except (WristNotFoundError, GeometryError, DegenerateContourError) as e:
            logger.warning("skipping %s sample: %s", sample.label, e)
            skipped += 1
            continue
        labels.append(sample.label)
    width = 4 * settings.harmonics if kind == "static" else sum(dynamic_blocks(settings.harmonics))
    features = np.array(rows) if rows else np.zeros((0, width))
    weights = block_weights(dynamic_blocks(settings.harmonics)) if kind == "dynamic" else None
    return FeatureSet(kind=kind, features=features, labels=labels, feature_weights=weights, skipped=skipped)
