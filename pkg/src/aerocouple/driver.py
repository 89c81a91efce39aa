"""High-level orchestration shared by the CLI and the HTTP service.

Binds a parsed configuration and structural model to an aerodynamic solver,
dispatches the requested simulation mode and renders the outputs (history
CSV, FSI iteration log, summary).  Also hosts the speed sweep used for
flutter searches, parallel across speeds (workers capped by the
AEROCOUPLE_THREADS environment variable), with results merged in sweep
order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import coupling, postproc
from .aero import (
    LagCoefficients,
    QuasiSteadyAirfoil,
    SyntheticPressureSolver,
    WagnerAirfoil,
    cube_surface,
)
from .errors import ConfigError, SignalError
from .model_io import (
    CouplingConfig,
    History,
    StructuralModel,
    _CONFIG_KEYS,
    format_history,
    parse_config,
)

_SWEEP_RANK_TOL = 1e-4
_SWEEP_MAX_SAMPLES = 2500


@dataclass
class RunOutput:
    mode: str
    summary: dict
    history_csv: str
    fsi_log_csv: str | None
    monitor_names: tuple[str, ...]
    warnings: tuple[str, ...] = ()


@dataclass
class CheckReport:
    mode: str
    aero_model: str
    n_modes: int
    n_nodes: int
    frequencies: tuple[float, ...]
    n_fluid_points: int
    map_condition: float
    warnings: tuple[str, ...] = ()


@dataclass
class SweepRow:
    value: float
    damping: float
    frequency: float


@dataclass
class SweepOutput:
    key: str
    rows: list[SweepRow]
    flutter_speed: float | None
    bracket: tuple[float, float] | None
    trend: str
    warnings: tuple[str, ...] = ()

    def csv(self) -> str:
        lines = ["value,damping,frequency"]
        for row in self.rows:
            lines.append("%.12e,%.12e,%.12e" % (row.value, row.damping, row.frequency))
        return "\n".join(lines) + "\n"


def build_aero_solver(config: CouplingConfig, model: StructuralModel | None = None):
    """Instantiate the configured aerodynamic model."""
    kind = config.aero_model
    if kind == "synthetic":
        per_edge = max(2, int(round(math.sqrt(config.n_surface_points / 6))))
        points, normals, areas = cube_surface(per_edge)
        return SyntheticPressureSolver(
            points, normals, areas, p0=config.synthetic_p0,
            grad=config.synthetic_grad, rate=config.synthetic_rate,
        )
    if config.u_inf is None:
        raise ConfigError("UINF is required for the airfoil aero models")
    common = dict(
        rho=config.rho, u_inf=config.u_inf, chord=config.chord,
        x_f=config.x_f, area=config.reference_area(),
        alpha=math.radians(config.alpha_deg),
        n_points=config.n_surface_points,
    )
    if kind == "quasisteady":
        return QuasiSteadyAirfoil(**common)
    lags = LagCoefficients(a1=config.wagner_a1, b1=config.wagner_b1,
                           a2=config.wagner_a2, b2=config.wagner_b2)
    return WagnerAirfoil(dt=(config.dt if config.dt else 1.0), lags=lags, **common)


def _dof_names(config: CouplingConfig, n: int) -> tuple[str, ...]:
    if config.dof_names is not None:
        if len(config.dof_names) != n:
            raise ConfigError("DOF_NAMES length does not match the model")
        return config.dof_names
    return tuple(f"q_{i + 1}" for i in range(n))


def format_fsi_log(records) -> str:
    lines = ["step,iter,residual_rms,omega,seconds"]
    for rec in records:
        lines.append("%d,%d,%.12e,%.12e,%.6f"
                     % (rec.step, rec.iteration, rec.residual, rec.omega, rec.seconds))
    return "\n".join(lines) + "\n"


def run_from_config(config: CouplingConfig, model: StructuralModel) -> RunOutput:
    """Build the solver, run the configured simulation, render outputs."""
    aero = build_aero_solver(config, model)
    result = coupling.run(config, model, aero)

    names = _dof_names(config, model.n_modes)
    last = result.records[-1]
    summary: dict = {"final_" + name: float(value)
                     for name, value in zip(names, last.q)}
    for key, value in result.summary.items():
        if key == "coefficients":
            summary.update({k: float(v) for k, v in value.items()})
        else:
            summary[key] = float(value) if isinstance(value, (int, float)) else value

    return RunOutput(
        mode=config.mode,
        summary=summary,
        history_csv=format_history(result.records, result.monitor_names),
        fsi_log_csv=format_fsi_log(result.fsi_records) if result.fsi_records else None,
        monitor_names=result.monitor_names,
        warnings=config.warnings,
    )


def validate_run_inputs(config: CouplingConfig, model: StructuralModel) -> None:
    """Raise on any config/model mismatch a run would hit, before computing."""
    model.validate()
    _dof_names(config, model.n_modes)
    if config.mode.endswith("imposed"):
        coupling.imposed_signal(config, model.n_modes)
    for key, values in (("INITIAL_Q", config.initial_q),
                        ("INITIAL_QDOT", config.initial_qdot)):
        if values is not None and len(values) != model.n_modes:
            raise ConfigError(f"{key} length does not match the model")


def check_from_config(config: CouplingConfig, model: StructuralModel) -> CheckReport:
    """Validate inputs and report the model/interface summary; never runs."""
    validate_run_inputs(config, model)
    aero = build_aero_solver(config, model)
    iface = coupling.Interface(model, aero, config)
    return CheckReport(
        mode=config.mode,
        aero_model=config.aero_model,
        n_modes=model.n_modes,
        n_nodes=model.n_nodes,
        frequencies=tuple(float(f) for f in model.frequencies),
        n_fluid_points=iface.disp_map.n_target,
        map_condition=iface.disp_map.condition,
        warnings=config.warnings,
    )


def override_config_text(config_text: str, key: str, value) -> str:
    """Return config text with ``key`` replaced (or appended)."""
    key_u = key.strip().upper()
    if key_u not in _CONFIG_KEYS:
        raise ConfigError(f"unknown config key {key_u!r}")
    kept = []
    for line in config_text.splitlines():
        data = line.split("#", 1)[0]
        if "=" in data and data.partition("=")[0].strip().upper() == key_u:
            continue
        kept.append(line)
    kept.append(f"{key_u} = {value}")
    return "\n".join(kept) + "\n"


def _dominant_mode(result, config: CouplingConfig, n_expected: int):
    """Least-damped dominant mode across the generalized-DOF channels."""
    q = np.array([rec.q for rec in result.records])
    cut = int(len(q) * postproc.TRANSIENT_FRACTION)
    window = q[cut:]
    stride = max(1, len(window) // _SWEEP_MAX_SAMPLES)
    window = window[::stride]
    dt = config.dt * stride
    candidates = []
    import warnings as _warnings
    for channel in range(window.shape[1]):
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            modes = postproc.modal_identification(
                window[:, channel], dt, n_expected, rank_tol=_SWEEP_RANK_TOL)
        if modes:
            candidates.append(max(modes, key=lambda m: m.amplitude))
    if not candidates:
        raise SignalError("no oscillatory content identified in the response")
    return min(candidates, key=lambda m: m.damping)


def _sweep_workers(n_jobs: int, max_workers: int | None) -> int:
    if max_workers is None:
        env = os.environ.get("AEROCOUPLE_THREADS")
        max_workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(n_jobs, max_workers))


def sweep_from_config(config_text: str, model: StructuralModel, key: str,
                      values, max_workers: int | None = None) -> SweepOutput:
    """Run one simulation per value of ``key`` and locate the flutter point.

    Each run must be an unsteady coupled free response; the per-speed
    damping is the least-damped dominant identified mode.  Rows come back
    in sweep order regardless of worker scheduling.
    """
    values = [float(v) for v in values]
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = [parse_config(override_config_text(config_text, key, v)) for v in values]
    for cfg in configs:
        if cfg.mode != "unsteady-coupled":
            raise ConfigError("sweep requires MODE = UNSTEADY_COUPLED")
    n_expected = min(model.n_modes, 4)

    def job(cfg: CouplingConfig):
        aero = build_aero_solver(cfg, model)
        result = coupling.run(cfg, model, aero)
        mode = _dominant_mode(result, cfg, n_expected)
        return mode

    workers = _sweep_workers(len(values), max_workers)
    if workers == 1:
        modes = [job(cfg) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            modes = list(pool.map(job, configs))

    rows = [SweepRow(value=v, damping=m.damping, frequency=m.frequency_hz)
            for v, m in zip(values, modes)]
    if len(rows) >= 2:
        boundary = postproc.flutter_boundary([r.value for r in rows],
                                             [r.damping for r in rows])
    else:
        boundary = postproc.FlutterBoundary(speed=None, bracket=None,
                                            trend="single point")
    return SweepOutput(
        key=key.strip().upper(), rows=rows,
        flutter_speed=boundary.speed, bracket=boundary.bracket,
        trend=boundary.trend, warnings=configs[0].warnings,
    )


def analyze_transfer_function(history: History, input_column: str,
                              output_column: str, frequency: float,
                              transient_fraction: float = postproc.TRANSIENT_FRACTION):
    return postproc.transfer_function(
        history.time, history.column(input_column), history.column(output_column),
        frequency, transient_fraction)


def analyze_modes(history: History, column: str, n_expected: int,
                  transient_fraction: float = postproc.TRANSIENT_FRACTION):
    times = history.time
    if len(times) < 2:
        raise SignalError("history has fewer than two samples")
    signal = history.column(column)
    cut = int(len(signal) * transient_fraction)
    dt = float(times[1] - times[0])
    return postproc.modal_identification(signal[cut:], dt, n_expected)
