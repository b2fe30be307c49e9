from fastapi import FastAPI, Depends, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from typing import Optional
import logging
import sys
import os

import numpy as np

# Add the project root to the Python path to fix import issues
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from haptable import __version__
from haptable.electro import electrostatic_force, friction_force
from haptable.errors import HaptableError, PlanningError
from haptable.flowlut import LookupRecord, plan_point_flow, render_stimulus
from haptable.handflow import HandFlowPlan, HandRegion, plan_hand_flow, region_preset
from haptable.vibmap import ACTUATORS
from api.models import (ElectroForceRequest, ElectroForceResponse, ErrorResponse, HandFlowRequest,
                        PointFlowRequest, PointFlowResponse, ServiceInfo, WaveformPayload)
from api.repository import ArtifactRepository

logger = logging.getLogger(__name__)


def get_repository(request: Request) -> ArtifactRepository:
    """The repository attached to the app, created from the environment on first use"""
    state = request.app.state
    if getattr(state, "repository", None) is None:
        state.repository = ArtifactRepository.from_env()
    return state.repository


def _error_response(request: Request, exc: HaptableError) -> JSONResponse:
    # planning failures are well-formed requests the map cannot satisfy
    status = 422 if exc.exit_code == 4 else 400
    body = ErrorResponse(error=type(exc).__name__, detail=str(exc),
                         near_misses=exc.near_misses if isinstance(exc, PlanningError) else None)
    logger.info("%s %s -> %d %s", request.method, request.url.path, status, body.error)
    return JSONResponse(status_code=status, content=body.model_dump(exclude_none=True))


def create_app(repository: Optional[ArtifactRepository] = None) -> FastAPI:
    app = FastAPI(
        title="HapTable API",
        description="Vibrotactile flow planning and electrostatic friction over a simulated haptic table",
        version=__version__,
    )
    app.state.repository = repository

    # Add CORS middleware
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.add_exception_handler(HaptableError, _error_response)

    @app.get("/", response_model=ServiceInfo)
    def read_root(repository: ArtifactRepository = Depends(get_repository)):
        """
        Service banner with the grid and provenance of the served vibration map
        """
        vmap = repository.get_map()
        grid = vmap.grid
        return ServiceInfo(
            message="HapTable API",
            version=__version__,
            grid={"rows": grid.rows, "cols": grid.cols, "spacing": grid.spacing, "origin": list(grid.origin),
                  "actuators": list(ACTUATORS), "bins": vmap.freq_axis.count},
            provenance=vmap.provenance,
            lookup_loaded=repository.lookup_loaded,
        )

    @app.get("/lookup/{active}/{passive}", response_model=LookupRecord)
    def get_lookup(active: int, passive: int, repository: ArtifactRepository = Depends(get_repository)):
        """
        Discriminating excitation localising ``active`` against ``passive`` (1-based grid indices)
        """
        return repository.get_lookup().record(active, passive)

    @app.post("/flow/point", response_model=PointFlowResponse)
    def flow_point(request: PointFlowRequest, repository: ArtifactRepository = Depends(get_repository)):
        """
        Plan a two-part flow between two points

        Grid-node pairs come from the lookup table; other points are
        evaluated on interpolated curves.
        """
        flow = repository.config.flow
        vmap = repository.get_map()
        grid_pair = isinstance(request.source, int) and isinstance(request.destination, int)
        duration = request.part_duration or flow.part_duration
        plan = plan_point_flow(
            repository.get_lookup() if grid_pair else None, vmap, repository.config.sensitivity,
            request.source, request.destination, durations=(duration, duration),
            drive=request.drive if request.drive is not None else flow.drive,
            ramp=request.ramp if request.ramp is not None else flow.ramp,
            max_drive=flow.max_drive, sample_rate=flow.sample_rate,
        )
        waveform = None
        if request.include_waveform:
            rendered = render_stimulus(plan, request.waveform_rate)
            frame = rendered.to_frame()
            waveform = WaveformPayload(sample_rate=rendered.sample_rate, time=frame["time"].tolist(),
                                       piezo=frame["piezo"].tolist(), actuator=frame["actuator"].tolist())
        return PointFlowResponse(source=plan.source, destination=plan.destination, parts=plan.parts,
                                 sensation_levels=plan.sensation_levels, channel_plan=plan.channel_plan,
                                 waveform=waveform)

    @app.post("/flow/hand", response_model=HandFlowPlan)
    def flow_hand(request: HandFlowRequest, repository: ArtifactRepository = Depends(get_repository)):
        """
        Plan a directional flow under a hand placed on a region preset or an explicit centre
        """
        hand = repository.config.hand
        if isinstance(request.region, str):
            region = region_preset(request.region, hand.side, hand.subgrid)
        else:
            region = HandRegion(center=request.region, side=hand.side, subgrid=hand.subgrid)
        return plan_hand_flow(
            repository.get_map(), repository.config.sensitivity, region, request.direction,
            drive=request.drive if request.drive is not None else repository.config.flow.drive,
            min_freq=hand.min_freq, max_freq=hand.max_freq,
            jnd_multiple=request.jnd_multiple if request.jnd_multiple is not None else hand.jnd_multiple,
        )

    @app.post("/electro/force", response_model=ElectroForceResponse)
    def electro_force(request: ElectroForceRequest, repository: ArtifactRepository = Depends(get_repository)):
        """
        Electrostatic attraction and the friction it adds at the given voltage(s)
        """
        params = request.params or repository.config.electro
        force = electrostatic_force(params, request.voltage)
        friction = friction_force(params, request.voltage, request.sliding)
        as_json = (lambda v: np.asarray(v).tolist()) if isinstance(request.voltage, list) else float
        return ElectroForceResponse(voltage=request.voltage, electrostatic_force=as_json(force),
                                    friction_force=as_json(friction))

    return app


app = create_app()

if __name__ == "__main__":
    import uvicorn
    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
