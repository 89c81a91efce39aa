"""Generalized modal structural solver.

Integrates M q'' + C q' + K q = F in generalized coordinates with a
generalized-alpha scheme parameterized by the spectral radius at infinity
(rho_inf = 1 gives no numerical damping; alpha_m = alpha_f = 0 recovers
classic Newmark average acceleration).  Damping is built either from
per-mode ratios (diagonal models) or by decoupling the (K, M) eigenproblem,
applying 2 xi_i d_i on each decoupled equation and mapping back.

Steady solves keep inertia in play: they march pseudo-steps with critical
modal damping until the increment stalls, or fall back to a direct linear
solve for undamped models; either way the returned q satisfies K q = F.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ConvergenceError, SingularSystemError
from .model_io import StructuralModel
from .transfer import InterfaceField

_STATIC_RTOL = 1e-10


@dataclass(frozen=True)
class ModalState:
    """Generalized coordinates and rates at one time level.

    ``f`` stores the generalized force consistent with the state; the
    alpha-weighted force interpolation of the integrator needs it.
    """

    t: float
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        for name in ("q", "qd", "qdd", "f"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1 or len(arr) != len(self.q if name != "q" else arr):
                raise ValueError(f"{name} must be a 1-d vector matching q")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class IntegratorParams:
    """Generalized-alpha parameters derived from a single spectral radius."""

    rho_inf: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho_inf <= 1.0:
            raise ValueError("rho_inf must lie in [0, 1]")

    @property
    def alpha_m(self) -> float:
        return (2.0 * self.rho_inf - 1.0) / (self.rho_inf + 1.0)

    @property
    def alpha_f(self) -> float:
        return self.rho_inf / (self.rho_inf + 1.0)

    @property
    def gamma(self) -> float:
        return 0.5 - self.alpha_m + self.alpha_f

    @property
    def beta(self) -> float:
        return 0.25 * (1.0 - self.alpha_m + self.alpha_f) ** 2


@dataclass(frozen=True)
class PseudoParams:
    """Settings for the pseudo-time steady solve."""

    dt_factor: float = 10.0     # dt_pseudo = dt_factor / min(omega_i)
    rho_inf: float = 0.0        # annihilate high frequencies
    max_steps: int = 400
    step_tol: float = 1e-12


def damping_matrix(model: StructuralModel) -> np.ndarray:
    """Assemble the generalized damping matrix C for a model.

    Diagonal models with ratios give diag(2 xi_i omega_i).  Non-diagonal
    models are decoupled through the generalized symmetric eigenproblem
    K V = M V diag(d_i^2) with mass-normalized eigenvectors (so the
    diagonalised mass is the identity), damped per mode and mapped back
    with C = V^-T diag(2 xi_i d_i) V^-1 = (M V) diag(2 xi_i d_i) (M V)^T.
    """
    n = model.n_modes
    if model.damping_matrix is not None:
        c = np.array(model.damping_matrix, dtype=float)
        _check_symmetric_psd(c, "damping matrix")
        return c
    if model.damping_ratios is None:
        return np.zeros((n, n))
    xi = np.asarray(model.damping_ratios, dtype=float)
    if model.diagonal:
        return np.diag(2.0 * xi * model.frequencies)
    try:
        evals, vecs = la.eigh(model.gen_stiff, model.gen_mass)
    except la.LinAlgError as exc:
        raise SingularSystemError(f"damping eigen-solve failed: {exc}") from exc
    d = np.sqrt(np.clip(evals, 0.0, None))
    mv = model.gen_mass @ vecs
    c = mv @ np.diag(2.0 * xi * d) @ mv.T
    c = 0.5 * (c + c.T)
    _check_symmetric_psd(c, "constructed damping matrix")
    return c


def _check_symmetric_psd(mat: np.ndarray, name: str) -> None:
    scale = max(np.abs(mat).max(), 1.0)
    if np.abs(mat - mat.T).max() > 1e-8 * scale:
        raise SingularSystemError(f"{name} is not symmetric")
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if eigs.min() < -1e-8 * max(abs(eigs).max(), 1.0):
        raise SingularSystemError(f"{name} is not positive semidefinite")


build_damping = damping_matrix


def generalized_force(model: StructuralModel, nodal_forces: InterfaceField) -> np.ndarray:
    """Project nodal forces (and optional moments) onto the modes: U^T F.

    Nodes absent from the field carry zero load; a field id that is not a
    model node is an error.
    """
    index = {nid: i for i, nid in enumerate(model.node_ids)}
    stacked = np.zeros(6 * model.n_nodes)
    moments = nodal_forces.moments
    for row, nid in enumerate(nodal_forces.ids):
        if nid not in index:
            raise KeyError(f"force field node id {nid} is not a structural node")
        i = index[nid]
        stacked[6 * i:6 * i + 3] = nodal_forces.values[row]
        if moments is not None:
            stacked[6 * i + 3:6 * i + 6] = moments[row]
    return model.mode_matrix.T @ stacked


def initial_state(model: StructuralModel, q0=None, qd0=None, f0=None,
                  t0: float = 0.0, damping: np.ndarray | None = None) -> ModalState:
    """Starting state with acceleration consistent with the initial force."""
    n = model.n_modes
    q0 = np.zeros(n) if q0 is None else np.asarray(q0, dtype=float)
    qd0 = np.zeros(n) if qd0 is None else np.asarray(qd0, dtype=float)
    f0 = np.zeros(n) if f0 is None else np.asarray(f0, dtype=float)
    c = damping_matrix(model) if damping is None else damping
    rhs = f0 - c @ qd0 - model.gen_stiff @ q0
    try:
        qdd0 = la.solve(model.gen_mass, rhs, assume_a="pos")
    except la.LinAlgError as exc:
        raise SingularSystemError(f"mass matrix solve failed: {exc}") from exc
    return ModalState(t=t0, q=q0, qd=qd0, qdd=qdd0, f=f0)


def _alpha_step(mass, damp, stiff, state: ModalState, f_new, dt,
                params: IntegratorParams) -> ModalState:
    """One generalized-alpha step of M q'' + C q' + K q = F."""
    am, af = params.alpha_m, params.alpha_f
    gamma, beta = params.gamma, params.beta

    q_pred = state.q + dt * state.qd + (0.5 - beta) * dt * dt * state.qdd
    v_pred = state.qd + (1.0 - gamma) * dt * state.qdd
    f_mid = (1.0 - af) * f_new + af * state.f

    lhs = (1.0 - am) * mass + (1.0 - af) * gamma * dt * damp \
        + (1.0 - af) * beta * dt * dt * stiff
    rhs = f_mid - am * (mass @ state.qdd) \
        - damp @ ((1.0 - af) * v_pred + af * state.qd) \
        - stiff @ ((1.0 - af) * q_pred + af * state.q)
    try:
        a_new = la.solve(lhs, rhs)
    except la.LinAlgError as exc:
        raise SingularSystemError(f"singular effective stiffness matrix: {exc}") from exc

    return ModalState(
        t=state.t + dt,
        q=q_pred + beta * dt * dt * a_new,
        qd=v_pred + gamma * dt * a_new,
        qdd=a_new,
        f=np.asarray(f_new, dtype=float),
    )


def step_dynamic(model: StructuralModel, state: ModalState, f_new, dt: float,
                 params: IntegratorParams = IntegratorParams(),
                 damping: np.ndarray | None = None) -> ModalState:
    """Advance one time step from ``state`` with the force at t + dt.

    The step is a pure function of its arguments: within an FSI inner loop
    it is re-evaluated from the same stored state with updated forces.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    c = damping_matrix(model) if damping is None else damping
    return _alpha_step(model.gen_mass, c, model.gen_stiff, state,
                       np.asarray(f_new, dtype=float), dt, params)


def solve_steady(model: StructuralModel, f, pseudo: PseudoParams | None = None) -> ModalState:
    """Static equilibrium K q = F, reached through damped pseudo-stepping.

    Models without damping take the direct route; either path returns a
    state with zero rates whose q satisfies the static system to 1e-10
    relative.
    """
    f = np.asarray(f, dtype=float)
    stiff = model.gen_stiff
    has_damping = model.damping_ratios is not None or model.damping_matrix is not None

    if not has_damping and pseudo is None:
        try:
            q = la.solve(stiff, f, assume_a="sym")
        except la.LinAlgError as exc:
            raise SingularSystemError(f"singular stiffness matrix: {exc}") from exc
    else:
        pseudo = pseudo or PseudoParams()
        q = _pseudo_static(model, f, pseudo)

    scale = max(np.abs(f).max(), np.abs(stiff @ q).max(), np.finfo(float).tiny)
    residual = np.abs(stiff @ q - f).max()
    if residual > _STATIC_RTOL * scale:
        raise ConvergenceError(
            f"static solve residual {residual:.3e} exceeds {_STATIC_RTOL:.0e} relative"
        )
    zeros = np.zeros_like(q)
    return ModalState(t=0.0, q=q, qd=zeros, qdd=zeros, f=f)


def _pseudo_static(model: StructuralModel, f: np.ndarray,
                   pseudo: PseudoParams) -> np.ndarray:
    try:
        evals, vecs = la.eigh(model.gen_stiff, model.gen_mass)
    except la.LinAlgError as exc:
        raise SingularSystemError(f"pseudo-static eigen-solve failed: {exc}") from exc
    if evals.min() <= 0.0:
        raise SingularSystemError("stiffness matrix is singular (zero-frequency mode)")
    omegas = np.sqrt(evals)
    dt = pseudo.dt_factor / omegas.min()
    mv = model.gen_mass @ vecs
    critical = mv @ np.diag(2.0 * omegas) @ mv.T  # xi = 1 on every mode
    params = IntegratorParams(pseudo.rho_inf)

    n = model.n_modes
    state = ModalState(t=0.0, q=np.zeros(n), qd=np.zeros(n), qdd=np.zeros(n),
                       f=np.zeros(n))
    residuals = []
    for _ in range(pseudo.max_steps):
        new = _alpha_step(model.gen_mass, critical, model.gen_stiff, state, f, dt, params)
        dq = np.abs(new.q - state.q).max()
        residuals.append(dq)
        state = new
        if dq <= pseudo.step_tol * max(np.abs(new.q).max(), np.finfo(float).tiny):
            return state.q
    raise ConvergenceError(
        f"pseudo-static solve did not stall within {pseudo.max_steps} steps",
        residuals=residuals,
    )


def nodal_field(model: StructuralModel, modal_vector, kind: str) -> InterfaceField:
    """Expand a generalized vector to nodal translations (+ rotations)."""
    stacked = model.mode_matrix @ np.asarray(modal_vector, dtype=float)
    per_node = stacked.reshape(model.n_nodes, 6)
    return InterfaceField(
        ids=model.node_ids,
        points=model.node_coords,
        values=per_node[:, :3],
        kind=kind,
        rotations=per_node[:, 3:],
    )


def physical_motion(model: StructuralModel, state: ModalState):
    """Nodal displacements and velocities for a modal state (u = U q).

    Rotational components ride along on the fields but are not transferred
    by the interface; only translations drive the fluid mesh.
    """
    return (
        nodal_field(model, state.q, "displacement"),
        nodal_field(model, state.qd, "velocity"),
    )
