"""HTTP service exposing the coupling engine.

Inputs travel as file content (config and structural model text) so remote
clients need no shared filesystem; outputs come back as the same CSV text
the CLI writes, byte for byte.  Input problems map to 422, runtime
non-convergence to 409.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .driver import (
    analyze_modes,
    analyze_transfer_function,
    check_from_config,
    run_from_config,
    sweep_from_config,
)
from .errors import AerocoupleError, ConvergenceError, SingularSystemError
from .model_io import parse_config, parse_history, parse_structural_model
from .postproc import flutter_boundary

app = FastAPI(title="aerocouple", version=__version__)


class RunRequest(BaseModel):
    config_text: str
    model_text: str


class RunResponse(BaseModel):
    mode: str
    summary: dict
    history_csv: str
    fsi_log_csv: Optional[str] = None
    monitor_names: list[str]
    warnings: list[str]


class CheckResponse(BaseModel):
    mode: str
    aero_model: str
    n_modes: int
    n_nodes: int
    frequencies: list[float]
    n_fluid_points: int
    map_condition: float
    warnings: list[str]


class ConfigRequest(BaseModel):
    config_text: str


class ConfigResponse(BaseModel):
    config: dict
    warnings: list[str]


class SweepRequest(BaseModel):
    config_text: str
    model_text: str
    key: str
    values: list[float] = Field(min_length=1)
    max_workers: Optional[int] = None


class SweepRowModel(BaseModel):
    value: float
    damping: float
    frequency: float


class SweepResponse(BaseModel):
    key: str
    rows: list[SweepRowModel]
    flutter_speed: Optional[float] = None
    bracket: Optional[tuple[float, float]] = None
    trend: str
    csv: str
    warnings: list[str]


class AnalyzeRequest(BaseModel):
    operation: Literal["transfer_function", "modal_identification", "flutter_boundary"]
    history_csv: Optional[str] = None
    input_column: Optional[str] = None
    output_column: Optional[str] = None
    frequency: Optional[float] = None
    column: Optional[str] = None
    n_expected: Optional[int] = None
    transient_fraction: float = 0.2
    speeds: Optional[list[float]] = None
    dampings: Optional[list[float]] = None


class AnalyzeResponse(BaseModel):
    operation: str
    result: dict


def _wrap(callable_, *args, **kwargs):
    try:
        return callable_(*args, **kwargs)
    except (ConvergenceError, SingularSystemError) as exc:
        raise HTTPException(status_code=409, detail=str(exc)) from exc
    except AerocoupleError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except (KeyError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/api/config", response_model=ConfigResponse)
def parse_config_endpoint(request: ConfigRequest) -> ConfigResponse:
    from dataclasses import asdict

    config = _wrap(parse_config, request.config_text)
    payload = asdict(config)
    warnings = list(payload.pop("warnings"))
    return ConfigResponse(config=payload, warnings=warnings)


@app.post("/api/run", response_model=RunResponse)
def run_endpoint(request: RunRequest) -> RunResponse:
    config = _wrap(parse_config, request.config_text)
    model = _wrap(parse_structural_model, request.model_text)
    output = _wrap(run_from_config, config, model)
    return RunResponse(
        mode=output.mode, summary=output.summary,
        history_csv=output.history_csv, fsi_log_csv=output.fsi_log_csv,
        monitor_names=list(output.monitor_names),
        warnings=list(output.warnings),
    )


@app.post("/api/check", response_model=CheckResponse)
def check_endpoint(request: RunRequest) -> CheckResponse:
    config = _wrap(parse_config, request.config_text)
    model = _wrap(parse_structural_model, request.model_text)
    report = _wrap(check_from_config, config, model)
    return CheckResponse(
        mode=report.mode, aero_model=report.aero_model,
        n_modes=report.n_modes, n_nodes=report.n_nodes,
        frequencies=list(report.frequencies),
        n_fluid_points=report.n_fluid_points,
        map_condition=report.map_condition,
        warnings=list(report.warnings),
    )


@app.post("/api/sweep", response_model=SweepResponse)
def sweep_endpoint(request: SweepRequest) -> SweepResponse:
    model = _wrap(parse_structural_model, request.model_text)
    output = _wrap(sweep_from_config, request.config_text, model,
                   request.key, request.values, request.max_workers)
    return SweepResponse(
        key=output.key,
        rows=[SweepRowModel(value=r.value, damping=r.damping, frequency=r.frequency)
              for r in output.rows],
        flutter_speed=output.flutter_speed, bracket=output.bracket,
        trend=output.trend, csv=output.csv(), warnings=list(output.warnings),
    )


@app.post("/api/analyze", response_model=AnalyzeResponse)
def analyze_endpoint(request: AnalyzeRequest) -> AnalyzeResponse:
    op = request.operation
    if op == "flutter_boundary":
        if request.speeds is None or request.dampings is None:
            raise HTTPException(422, "flutter_boundary needs speeds and dampings")
        boundary = _wrap(flutter_boundary, request.speeds, request.dampings)
        return AnalyzeResponse(operation=op, result={
            "speed": boundary.speed, "bracket": boundary.bracket,
            "trend": boundary.trend,
        })
    if request.history_csv is None:
        raise HTTPException(422, f"{op} needs history_csv")
    history = _wrap(parse_history, request.history_csv)
    if op == "transfer_function":
        if not (request.input_column and request.output_column and request.frequency):
            raise HTTPException(
                422, "transfer_function needs input_column, output_column, frequency")
        tf = _wrap(analyze_transfer_function, history, request.input_column,
                   request.output_column, request.frequency,
                   request.transient_fraction)
        return AnalyzeResponse(operation=op, result={
            "magnitude": tf.magnitude, "phase_deg": tf.phase_deg,
            "ill_conditioned": tf.ill_conditioned, "periods": tf.periods,
        })
    if not (request.column and request.n_expected):
        raise HTTPException(422, "modal_identification needs column and n_expected")
    modes = _wrap(analyze_modes, history, request.column, request.n_expected,
                  request.transient_fraction)
    return AnalyzeResponse(operation=op, result={
        "modes": [{"frequency_hz": m.frequency_hz, "damping": m.damping,
                   "amplitude": m.amplitude} for m in modes],
    })
