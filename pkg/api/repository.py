import logging
import os
from pathlib import Path
from threading import Lock
from typing import Optional, Union

from haptable.config import EngineConfig, load_config
from haptable.fixtures import worked_example_map
from haptable.flowlut import ExcitationLookup, build_lookup, load_lookup
from haptable.vibmap import VibrationMap, load_map

logger = logging.getLogger(__name__)

MAP_ENV_VAR = "HAPTABLE_MAP"
LUT_ENV_VAR = "HAPTABLE_LUT"


class ArtifactRepository:
    """Vibration map and lookup table served by the API.

    The map comes from a file when one is given and otherwise falls back to
    the worked-example fixture map. The lookup table is read from a file or
    built from the map on first use, then kept in memory.
    """

    def __init__(self, map_path: Optional[Union[str, Path]] = None, lookup_path: Optional[Union[str, Path]] = None,
                 config: Optional[EngineConfig] = None):
        self.map_path = map_path
        self.lookup_path = lookup_path
        self.config = config or load_config()
        self._map: Optional[VibrationMap] = None
        self._lookup: Optional[ExcitationLookup] = None
        self._lock = Lock()

    @classmethod
    def from_env(cls) -> "ArtifactRepository":
        return cls(map_path=os.environ.get(MAP_ENV_VAR), lookup_path=os.environ.get(LUT_ENV_VAR))

    @property
    def lookup_loaded(self) -> bool:
        return self._lookup is not None

    def get_map(self) -> VibrationMap:
        with self._lock:
            if self._map is None:
                if self.map_path:
                    self._map = load_map(self.map_path)
                    logger.info("serving vibration map %s", self.map_path)
                else:
                    self._map = worked_example_map()
                    logger.info("no map configured, serving the fixture map")
            return self._map

    def get_lookup(self) -> ExcitationLookup:
        vmap = self.get_map()
        with self._lock:
            if self._lookup is None:
                if self.lookup_path:
                    self._lookup = load_lookup(self.lookup_path)
                else:
                    flow = self.config.flow
                    self._lookup = build_lookup(vmap, self.config.sensitivity, drive=flow.drive,
                                                workers=flow.workers)
                    logger.info("built lookup table for %d points", vmap.grid.point_count)
            return self._lookup
