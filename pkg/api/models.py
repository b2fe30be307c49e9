from pydantic import BaseModel, Field
from typing import List, Optional, Dict, Any, Tuple, Union

from haptable.electro import ElectroParams
from haptable.flowlut import FlowPart


PointRef = Union[int, Tuple[float, float]]


class ServiceInfo(BaseModel):
    message: str
    version: str
    grid: Dict[str, Any]
    provenance: str
    lookup_loaded: bool


class PointFlowRequest(BaseModel):
    source: PointRef
    destination: PointRef
    drive: Optional[float] = None
    part_duration: Optional[float] = None
    ramp: Optional[float] = None
    include_waveform: bool = False
    # defaults to the configured flow sample rate
    waveform_rate: Optional[int] = Field(default=None, gt=0)


class WaveformPayload(BaseModel):
    sample_rate: int
    time: List[float]
    piezo: List[float]
    actuator: List[str]


class PointFlowResponse(BaseModel):
    source: Tuple[float, float]
    destination: Tuple[float, float]
    parts: List[FlowPart]
    sensation_levels: List[float]
    channel_plan: List[Tuple[float, float, str]]
    waveform: Optional[WaveformPayload] = None


class HandFlowRequest(BaseModel):
    direction: str
    region: Union[str, Tuple[float, float]] = "prelim"
    drive: Optional[float] = None
    jnd_multiple: Optional[float] = None


class ElectroForceRequest(BaseModel):
    voltage: Union[float, List[float]]
    sliding: bool = True
    params: Optional[ElectroParams] = None


class ElectroForceResponse(BaseModel):
    voltage: Union[float, List[float]]
    electrostatic_force: Union[float, List[float]]
    friction_force: Union[float, List[float]]


class ErrorResponse(BaseModel):
    error: str
    detail: str
    near_misses: Optional[List[Dict[str, Any]]] = None
