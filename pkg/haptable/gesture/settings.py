from typing import Tuple

from pydantic import BaseModel, ConfigDict

STATIC_LABELS: Tuple[str, ...] = ("1-finger", "2-finger", "L-shape", "closed-hand", "open-hand")
DYNAMIC_LABELS: Tuple[str, ...] = ("drag", "rotate", "spread/pile", "wipe", "zoom")


class GestureSettings(BaseModel):
    """Thresholds of the contact-image pipeline; lengths in pixels, angles in degrees"""

    model_config = ConfigDict(frozen=True)

    width: int = 640
    height: int = 480
    frame_rate: float = 60.0
    threshold: int = 40
    baseline_downsample: int = 8
    baseline_sigma: float = 12.0
    harmonics: int = 10
    wrist_tolerance: float = 2.0
    min_wrist_arc: float = 15.0
    rotation_snap: float = 0.5
    fingertip_area: Tuple[int, int] = (30, 900)
    gate_displacement: float = 5.0
    gate_rotation: float = 5.0
    gate_elongation: float = 1.2
    gate_window: int = 4
    svm_lambda: float = 0.01
    svm_epochs: int = 300
    seed: int = 0
