"""Surface-haptics rendering engine: plate vibration maps, vibrotactile flow, electrostatic friction and touch gestures."""

__version__ = "0.1.0"
