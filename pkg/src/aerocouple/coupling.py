"""Partitioned coupling drivers for the four simulation modes.

Each physical step of a coupled run executes the inner loop: predict the
structural displacements, transfer displacements and velocities to the
fluid interface, advance the fluid solver from its checkpoint, transfer
the forces back, re-integrate the structure from the stored time level,
check the RMS of the incremental structural displacements and either
accept the step or relax the iterate with dynamic Aitken under-relaxation.

Imposed-motion modes skip the structural integration entirely: the model
only supplies node positions and the mode matrix that shapes the motion.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ConvergenceError
from .model_io import CouplingConfig, HistoryRecord, StructuralModel
from .structural import (
    ModalState,
    IntegratorParams,
    damping_matrix,
    generalized_force,
    initial_state,
    nodal_field,
    solve_steady,
    step_dynamic,
)
from .transfer import (
    InterfaceField,
    apply_forces,
    build_map,
    default_support_radius,
)

_OMEGA_FLOOR = 1e-12


@dataclass(frozen=True)
class FsiIterationRecord:
    """One inner FSI iteration: residual, relaxation factor, wall time."""

    step: int
    iteration: int
    residual: float
    omega: float
    seconds: float

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("relaxation factor must lie in (0, 1]")


@dataclass
class RunResult:
    """Outcome of one simulation: histories, iteration log, final fields."""

    mode: str
    records: list[HistoryRecord]
    monitor_names: tuple[str, ...]
    fsi_records: list[FsiIterationRecord] = field(default_factory=list)
    states: list[ModalState] | None = None
    structural_forces: InterfaceField | None = None
    fluid_forces: InterfaceField | None = None
    summary: dict = field(default_factory=dict)


def predict_displacements(states, dt: float, order: int) -> np.ndarray:
    """Predict q at the next time level from accepted states.

    Order 0 holds the last value; order 1 extrapolates with
    q + dt (1.5 qd_n - 0.5 qd_{n-1}), falling back to qd_{n-1} = qd_n on
    the first step.
    """
    if len(states) == 0:
        raise ValueError("prediction requires at least one accepted state")
    last = states[-1]
    if order == 0:
        return np.array(last.q)
    if order != 1:
        raise ValueError("predictor order must be 0 or 1")
    qd_prev = states[-2].qd if len(states) > 1 else last.qd
    return last.q + dt * (1.5 * last.qd - 0.5 * qd_prev)


def aitken_relax(omega_prev: float, r_prev, r_new, omega_max: float = 1.0):
    """Dynamic relaxation update from two successive residual vectors.

    Returns the new factor, clamped to (0, omega_max], and the relaxed
    displacement increment omega * r_new.
    """
    r_prev = np.asarray(r_prev, dtype=float)
    r_new = np.asarray(r_new, dtype=float)
    if r_prev.shape != r_new.shape:
        raise ValueError("residual vectors must have the same length")
    dr = r_new - r_prev
    denom = float(dr @ dr)
    if denom == 0.0:
        if np.any(r_new != 0.0):
            warnings.warn("stagnant residual difference: keeping previous omega",
                          stacklevel=2)
        return omega_prev, omega_prev * r_new
    omega = -omega_prev * float(r_prev @ dr) / denom
    omega = min(omega, omega_max)
    omega = max(omega, _OMEGA_FLOOR)
    return omega, omega * r_new


def residual_rms(model: StructuralModel, q_new, q_prev) -> float:
    """RMS over nodes of the incremental physical displacement vector."""
    q_new = np.asarray(q_new, dtype=float)
    q_prev = np.asarray(q_prev, dtype=float)
    du = model.mode_matrix @ (q_new - q_prev)
    per_node = du.reshape(-1, 6)[:, :3]
    return float(np.sqrt(np.mean(np.sum(per_node**2, axis=1))))


def _translation_increment(model: StructuralModel, q_new, q_prev) -> np.ndarray:
    du = model.mode_matrix @ (np.asarray(q_new) - np.asarray(q_prev))
    return du.reshape(-1, 6)[:, :3].ravel()


class Interface:
    """Transfer machinery binding one structural model to one fluid solver."""

    def __init__(self, model: StructuralModel, aero, config: CouplingConfig):
        self.model = model
        self.aero = aero
        self.config = config
        self.fluid_ids, self.fluid_points = aero.interface_points()
        radius = config.rbf_support_radius
        self.disp_map = build_map(
            model.node_coords, self.fluid_points,
            radius if radius is not None else default_support_radius(model.node_coords),
        )
        self._f2s_map = None
        self._resultant_index: dict[int, int] | None = None

    def fluid_motion(self, q, qd=None, qdd=None):
        """Interpolate modal motion onto the fluid interface points."""
        disp = self.disp_map.apply(nodal_field(self.model, q, "displacement").values)
        vel = None if qd is None else self.disp_map.apply(
            nodal_field(self.model, qd, "velocity").values)
        acc = None if qdd is None else self.disp_map.apply(
            nodal_field(self.model, qdd, "acceleration").values)
        return disp, vel, acc

    def push_motion(self, q, qd=None, qdd=None, initialize=False):
        disp, vel, acc = self.fluid_motion(q, qd, qdd)
        if initialize:
            self.aero.initialize(disp, vel, acc)
        else:
            self.aero.set_interface_motion(disp, vel, acc)

    def pull_forces(self) -> InterfaceField:
        """Fluid interface forces routed onto the structural nodes."""
        fluid = self.aero.interface_forces()
        if fluid.resultant:
            return self._route_resultant(fluid)
        if self.config.transfer_mode == "conservative":
            return apply_forces(self.disp_map, fluid, "conservative",
                                target_ids=self.model.node_ids)
        if self._f2s_map is None:
            radius = self.config.rbf_support_radius
            self._f2s_map = build_map(
                fluid.points, self.model.node_coords,
                radius if radius is not None else default_support_radius(fluid.points),
            )
        return apply_forces(self._f2s_map, fluid, "consistent",
                            target_ids=self.model.node_ids)

    def _route_resultant(self, fluid: InterfaceField) -> InterfaceField:
        """Assign point resultants to the coincident structural nodes."""
        if self._resultant_index is None:
            scale = max(default_support_radius(self.model.node_coords), 1.0)
            index = {}
            for row, point in enumerate(fluid.points):
                dist = np.linalg.norm(self.model.node_coords - point, axis=1)
                nearest = int(np.argmin(dist))
                if dist[nearest] > 1e-8 * scale:
                    raise ConfigError(
                        "aero resultant at "
                        f"{point} does not coincide with any structural node"
                    )
                index[row] = nearest
            self._resultant_index = index
        rows = list(self._resultant_index)
        nodes = [self._resultant_index[r] for r in rows]
        moments = fluid.moments if fluid.moments is not None else np.zeros_like(fluid.values)
        return InterfaceField(
            ids=self.model.node_ids[nodes],
            points=self.model.node_coords[nodes],
            values=fluid.values[rows],
            kind="force",
            moments=moments[rows],
        )


def _monitor_names(aero) -> tuple[str, ...]:
    return tuple(sorted(aero.coefficients()))


def _monitors(aero, names) -> tuple[float, ...]:
    coeffs = aero.coefficients()
    return tuple(float(coeffs[name]) for name in names)


def imposed_signal(config: CouplingConfig, n: int):
    """Per-DOF sinusoid q_i(t) = bias_i + amp_i sin(2 pi f_i t)."""
    if (config.imposed_amplitude is None and config.imposed_bias is None
            and config.imposed_frequency is None):
        raise ConfigError("imposed mode requires IMPOSED_* keys in the config")

    def resolve(values, name):
        if values is None:
            return np.zeros(n)
        arr = np.asarray(values, dtype=float)
        if len(arr) != n:
            raise ConfigError(
                f"{name} has {len(arr)} entries, model has {n} generalized DOFs"
            )
        return arr

    amp = resolve(config.imposed_amplitude, "IMPOSED_AMPLITUDE")
    freq = resolve(config.imposed_frequency, "IMPOSED_FREQUENCY")
    bias = resolve(config.imposed_bias, "IMPOSED_BIAS")
    two_pi_f = 2.0 * math.pi * freq

    def signal(t: float):
        phase = two_pi_f * t
        q = bias + amp * np.sin(phase)
        qd = amp * two_pi_f * np.cos(phase)
        qdd = -amp * two_pi_f**2 * np.sin(phase)
        return q, qd, qdd

    return signal


def _check_finite(name: str, values) -> None:
    if not np.all(np.isfinite(values)):
        raise ConvergenceError(f"non-finite {name} encountered: simulation aborted")


def run_steady_imposed(config: CouplingConfig, model: StructuralModel, aero) -> RunResult:
    """Impose a static deformation through the interface, solve the flow."""
    signal = imposed_signal(config, model.n_modes)
    q_imp, _, _ = signal(0.0)
    iface = Interface(model, aero, config)
    iface.push_motion(q_imp, initialize=True)
    aero.run_steady()
    aero.accept()
    fluid_forces = aero.interface_forces()
    structural_forces = iface.pull_forces()
    f_gen = generalized_force(model, structural_forces)
    names = _monitor_names(aero)
    record = HistoryRecord(time=0.0, q=q_imp, qd=np.zeros(model.n_modes),
                           f=f_gen, monitors=_monitors(aero, names))
    return RunResult(
        mode=config.mode, records=[record], monitor_names=names,
        structural_forces=structural_forces, fluid_forces=fluid_forces,
        summary={"coefficients": aero.coefficients()},
    )


def run_steady_coupled(config: CouplingConfig, model: StructuralModel, aero) -> RunResult:
    """Fixed point of aero forces -> generalized forces -> static solve."""
    model = _with_damping_override(config, model)
    iface = Interface(model, aero, config)
    n = model.n_modes
    q_iter = np.array(config.initial_q, dtype=float) if config.initial_q is not None \
        else np.zeros(n)
    if len(q_iter) != n:
        raise ConfigError("INITIAL_Q length does not match the model")

    names: tuple[str, ...] = ()
    fsi_records: list[FsiIterationRecord] = []
    omega = config.aitken_omega0
    r_prev = None
    accepted = None
    for k in range(config.max_fsi_iters):
        tic = time.perf_counter()
        iface.push_motion(q_iter, initialize=(k == 0))
        aero.run_steady()
        f_gen = generalized_force(model, iface.pull_forces())
        _check_finite("generalized forces", f_gen)
        state_new = solve_steady(model, f_gen)
        res = residual_rms(model, state_new.q, q_iter)
        r_new = _translation_increment(model, state_new.q, q_iter)
        if k == 0:
            names = _monitor_names(aero)
            omega = config.aitken_omega0
        else:
            omega, _ = aitken_relax(omega, r_prev, r_new, config.aitken_omega_max)
        fsi_records.append(FsiIterationRecord(
            step=0, iteration=k, residual=res, omega=omega,
            seconds=time.perf_counter() - tic))
        if res < config.fsi_tolerance:
            accepted = state_new
            break
        q_iter = q_iter + omega * (state_new.q - q_iter)
        r_prev = r_new
    if accepted is None:
        raise ConvergenceError(
            f"steady FSI loop did not converge in {config.max_fsi_iters} iterations",
            residuals=[rec.residual for rec in fsi_records],
        )
    aero.accept()
    record = HistoryRecord(time=0.0, q=accepted.q, qd=accepted.qd, f=accepted.f,
                           monitors=_monitors(aero, names))
    return RunResult(
        mode=config.mode, records=[record], monitor_names=names,
        fsi_records=fsi_records, states=[accepted],
        structural_forces=iface.pull_forces(),
        fluid_forces=aero.interface_forces(),
        summary={
            "iterations": len(fsi_records),
            "residual": fsi_records[-1].residual,
            "coefficients": aero.coefficients(),
        },
    )


def run_unsteady_imposed(config: CouplingConfig, model: StructuralModel, aero,
                         signal=None) -> RunResult:
    """March the flow under a prescribed interface motion; log the forces.

    ``signal`` may be any callable t -> (q, qd, qdd); it defaults to the
    per-DOF sinusoid from the config.
    """
    if signal is None:
        signal = imposed_signal(config, model.n_modes)
    iface = Interface(model, aero, config)
    dt, n_steps = config.dt, config.n_steps

    q0, qd0, qdd0 = signal(0.0)
    iface.push_motion(q0, qd0, qdd0, initialize=True)
    names = _monitor_names(aero)
    records = [HistoryRecord(
        time=0.0, q=q0, qd=qd0,
        f=generalized_force(model, iface.pull_forces()),
        monitors=_monitors(aero, names))]
    for k in range(1, n_steps + 1):
        t = k * dt
        q, qd, qdd = signal(t)
        iface.push_motion(q, qd, qdd)
        aero.advance(t)
        f_gen = generalized_force(model, iface.pull_forces())
        _check_finite("generalized forces", f_gen)
        aero.accept()
        records.append(HistoryRecord(time=t, q=q, qd=qd, f=f_gen,
                                     monitors=_monitors(aero, names)))
    return RunResult(
        mode=config.mode, records=records, monitor_names=names,
        structural_forces=iface.pull_forces(),
        fluid_forces=aero.interface_forces(),
        summary={"coefficients": aero.coefficients()},
    )


def run_unsteady_coupled(config: CouplingConfig, model: StructuralModel, aero) -> RunResult:
    """Tightly coupled time marching with prediction and Aitken relaxation."""
    model = _with_damping_override(config, model)
    damping = damping_matrix(model)
    params = IntegratorParams(config.rho_inf)
    iface = Interface(model, aero, config)
    dt, n_steps = config.dt, config.n_steps
    n = model.n_modes

    q0 = np.array(config.initial_q, dtype=float) if config.initial_q is not None \
        else np.zeros(n)
    qd0 = np.array(config.initial_qdot, dtype=float) if config.initial_qdot is not None \
        else np.zeros(n)
    if len(q0) != n or len(qd0) != n:
        raise ConfigError("INITIAL_Q / INITIAL_QDOT length does not match the model")

    # First-step rule: an initial deformation must not induce fictitious
    # interface velocities, so the first transferred velocity field is zero.
    initial_deformation = bool(np.any(q0 != 0.0))
    qd0_pushed = qd0
    if initial_deformation and np.any(qd0 != 0.0):
        warnings.warn("initial velocities zeroed on the interface at the first "
                      "transfer (initial-deformation rule)", stacklevel=2)
    if initial_deformation:
        qd0_pushed = np.zeros(n)
    iface.push_motion(q0, qd0_pushed, initialize=True)
    names = _monitor_names(aero)
    f0 = generalized_force(model, iface.pull_forces())
    state0 = initial_state(model, q0, qd0, f0, damping=damping)
    aero.accept()

    states = [state0]
    records = [HistoryRecord(time=0.0, q=state0.q, qd=state0.qd, f=state0.f,
                             monitors=_monitors(aero, names))]
    fsi_records: list[FsiIterationRecord] = []
    order = 1 if config.predictor == "linear" else 0
    omega_last = config.aitken_omega0

    for step in range(1, n_steps + 1):
        t_new = step * dt
        q_iter = predict_displacements(states, dt, order)
        qd_iter = _predict_rates(states, dt, order)
        omega = min(omega_last, config.aitken_omega0)
        r_prev = None
        accepted = None
        for k in range(config.max_fsi_iters):
            tic = time.perf_counter()
            # displacements and velocities cross the interface; the fluid
            # side synthesizes accelerations so that a very stiff structure
            # degenerates cleanly to the imposed-motion trajectory
            iface.push_motion(q_iter, qd_iter)
            aero.advance(t_new)
            f_gen = generalized_force(model, iface.pull_forces())
            _check_finite("generalized forces", f_gen)
            state_new = step_dynamic(model, states[-1], f_gen, dt, params,
                                     damping=damping)
            _check_finite("modal state", state_new.q)
            res = residual_rms(model, state_new.q, q_iter)
            r_new = _translation_increment(model, state_new.q, q_iter)
            if k > 0:
                omega, _ = aitken_relax(omega, r_prev, r_new,
                                        config.aitken_omega_max)
            fsi_records.append(FsiIterationRecord(
                step=step, iteration=k, residual=res, omega=omega,
                seconds=time.perf_counter() - tic))
            if res < config.fsi_tolerance:
                accepted = state_new
                break
            # relax the displacement iterate; the velocity iterate follows
            # the latest structural solution (the convergence measure and
            # the Aitken model live on the displacement channel)
            q_iter = q_iter + omega * (state_new.q - q_iter)
            qd_iter = np.array(state_new.qd)
            r_prev = r_new
        if accepted is None:
            raise ConvergenceError(
                f"FSI inner loop failed at step {step} (t = {t_new:.6g} s) "
                f"after {config.max_fsi_iters} iterations",
                residuals=[rec.residual for rec in fsi_records
                           if rec.step == step],
            )
        aero.accept()
        omega_last = omega
        states.append(accepted)
        records.append(HistoryRecord(
            time=t_new, q=accepted.q, qd=accepted.qd, f=accepted.f,
            monitors=_monitors(aero, names)))

    mean_iters = len(fsi_records) / n_steps if n_steps else 0.0
    return RunResult(
        mode=config.mode, records=records, monitor_names=names,
        fsi_records=fsi_records, states=states,
        structural_forces=iface.pull_forces(),
        fluid_forces=aero.interface_forces(),
        summary={
            "steps": n_steps,
            "mean_fsi_iterations": mean_iters,
            "coefficients": aero.coefficients(),
        },
    )


def _predict_rates(states, dt: float, order: int) -> np.ndarray:
    """Velocity prediction from the velocity history alone.

    Linear extrapolation 2 qd_n - qd_{n-1} is second-order accurate like the
    displacement predictor but stays clean in the stiff limit, where the
    integrator's accelerations alias at finite amplitude while the
    velocities vanish.
    """
    last = states[-1]
    if order == 0 or len(states) < 2:
        return np.array(last.qd)
    return 2.0 * last.qd - states[-2].qd


def _with_damping_override(config: CouplingConfig, model: StructuralModel) -> StructuralModel:
    if config.struct_damping is None:
        return model
    ratios = np.full(model.n_modes, config.struct_damping)
    return replace(model, damping_ratios=ratios, damping_matrix=None)


def run(config: CouplingConfig, model: StructuralModel, aero) -> RunResult:
    """Dispatch to the driver matching the configured simulation mode."""
    drivers = {
        "steady-imposed": run_steady_imposed,
        "steady-coupled": run_steady_coupled,
        "unsteady-imposed": run_unsteady_imposed,
        "unsteady-coupled": run_unsteady_coupled,
    }
    return drivers[config.mode](config, model, aero)
