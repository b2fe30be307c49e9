"""Exception hierarchy shared by the engine, the CLI and the HTTP service."""
from typing import Any, Dict, List, Optional


class HaptableError(Exception):
    """Base class for every error raised by the engine"""

    exit_code = 3


class ConfigurationError(HaptableError):
    pass


class GeometryError(HaptableError):
    pass


class ModeIndexError(HaptableError, IndexError):
    pass


class ExtrapolationError(GeometryError):
    pass


class MapFormatError(HaptableError):
    """Raised when a persisted map or table cannot be parsed; the message names the defect"""


class InfeasibleFlowError(HaptableError):
    exit_code = 4


class PlanningError(HaptableError):
    exit_code = 4

    def __init__(self, message: str, near_misses: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.near_misses = near_misses or []


class StreamError(HaptableError):
    pass


class WristNotFoundError(HaptableError):
    pass


class DegenerateContourError(HaptableError):
    pass


class ModelError(HaptableError):
    pass


class MissingClassError(HaptableError):
    pass


class ScenarioTimeoutError(HaptableError):
    exit_code = 4

    def __init__(self, message: str, partial: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.partial = partial or {}
