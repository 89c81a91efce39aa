import math

import numpy as np
import pytest
import scipy.linalg as la

from aerocouple import structural
from aerocouple.errors import SingularSystemError
from aerocouple.transfer import InterfaceField

from conftest import make_model, make_oscillator


def forced_oscillator_solution(omega, xi, amp_omega, t):
    """Closed-form response of q'' + 2 xi w q' + w^2 q = sin(W t), q(0)=q'(0)=0."""
    w, big_w = omega, amp_omega
    denom = (w**2 - big_w**2) ** 2 + (2 * xi * w * big_w) ** 2
    a = (w**2 - big_w**2) / denom
    b = -2 * xi * w * big_w / denom
    wd = w * math.sqrt(1 - xi**2)
    c1 = -b
    c2 = (-xi * w * b - a * big_w) / wd
    decay = np.exp(-xi * w * t)
    return (a * np.sin(big_w * t) + b * np.cos(big_w * t)
            + decay * (c1 * np.cos(wd * t) + c2 * np.sin(wd * t)))


# ---------------------------------------------------------------------------
# integrator parameters
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("rho", [0.0, 0.25, 0.5, 0.8, 1.0])
def test_integrator_parameter_identities(rho):
    p = structural.IntegratorParams(rho)
    assert p.alpha_m == (2 * rho - 1) / (rho + 1)
    assert p.alpha_f == rho / (rho + 1)
    assert p.gamma == 0.5 - p.alpha_m + p.alpha_f
    assert p.beta == 0.25 * (1 - p.alpha_m + p.alpha_f) ** 2


def test_integrator_parameter_range():
    with pytest.raises(ValueError):
        structural.IntegratorParams(1.2)


# ---------------------------------------------------------------------------
# damping construction
# ---------------------------------------------------------------------------

def test_damping_diagonal_value():
    model = make_oscillator(45.0, xi=0.01)
    assert np.allclose(structural.damping_matrix(model), [[0.9]])


def test_damping_zero_ratio():
    model = make_model(3, seed=1, ratios=np.zeros(3))
    assert np.all(structural.damping_matrix(model) == 0.0)


def test_damping_none_is_zero():
    model = make_model(2, seed=2)
    assert np.all(structural.damping_matrix(model) == 0.0)


def test_damping_nondiagonal_decouples_to_target():
    # oracle: decouple C with the (K, M) eigenvectors and read off the ratios
    model = make_model(2, seed=3, ratios=np.full(2, 0.02))
    c = structural.damping_matrix(model)
    evals, vecs = la.eigh(model.gen_stiff, model.gen_mass)
    d = np.sqrt(evals)
    c_modal = vecs.T @ c @ vecs  # mass-normalized: M~ = I
    ratios = np.diag(c_modal) / (2.0 * d)
    assert np.allclose(ratios, 0.02, atol=1e-10)
    assert np.abs(c_modal - np.diag(np.diag(c_modal))).max() < 1e-10


def test_damping_diagonal_through_nondiagonal_path():
    # A5: the eigen path on a decoupled model reproduces diag(2 xi w)
    rng = np.random.default_rng(4)
    freqs = np.array([3.0, 7.5, 11.0])
    xi = rng.uniform(0.005, 0.05, size=3)
    u = rng.normal(size=(6, 3))
    from aerocouple.model_io import StructuralModel
    model = StructuralModel(
        node_ids=np.array([1]), node_coords=np.zeros((1, 3)), mode_matrix=u,
        frequencies=freqs, gen_mass=np.eye(3), gen_stiff=np.diag(freqs**2),
        damping_ratios=xi, diagonal=False,   # force the eigen path
    )
    c = structural.damping_matrix(model)
    target = np.diag(2.0 * xi * freqs)
    assert np.abs(c - target).max() <= 1e-10 * np.abs(target).max()


def test_damping_matrix_pass_through_validated():
    bad = np.array([[0.0, 1.0], [-1.0, 0.0]])  # antisymmetric
    model = make_model(2, seed=5, damping_matrix=bad + bad.T - 10 * np.eye(2))
    with pytest.raises(SingularSystemError):
        structural.damping_matrix(model)


# ---------------------------------------------------------------------------
# generalized forces
# ---------------------------------------------------------------------------

def _single_node_field(values, moments=None):
    return InterfaceField(ids=[1], points=np.zeros((1, 3)),
                          values=np.array([values]), kind="force",
                          moments=None if moments is None else np.array([moments]))


def test_generalized_force_simple_column():
    model = make_oscillator(1.0)
    u = np.zeros((6, 1))
    u[0, 0] = 1.0
    u[1, 0] = 2.0
    from dataclasses import replace
    model = replace(model, mode_matrix=u)
    f = structural.generalized_force(model, _single_node_field([3.0, 4.0, 0.0]))
    assert f == pytest.approx([11.0])


def test_generalized_force_zero():
    model = make_model(3, seed=6)
    ids = model.node_ids
    field = InterfaceField(ids=ids, points=model.node_coords,
                           values=np.zeros((len(ids), 3)), kind="force")
    assert np.all(structural.generalized_force(model, field) == 0.0)


def test_generalized_force_rigid_plunge_work_equivalence():
    from aerocouple import cases
    model = cases.section_model(m=1.0, s_m=0.0, i_f=1.0, k_h=1.0, k_alpha=1.0,
                                chord=1.0, x_f=0.25)
    rng = np.random.default_rng(7)
    forces = rng.normal(size=(model.n_nodes, 3))
    field = InterfaceField(ids=model.node_ids, points=model.node_coords,
                           values=forces, kind="force")
    f = structural.generalized_force(model, field)
    assert f[0] == pytest.approx(forces[:, 2].sum(), rel=1e-14)


def test_generalized_force_moments_dot_rotation_rows():
    from aerocouple import cases
    model = cases.section_model(m=1.0, s_m=0.0, i_f=1.0, k_h=1.0, k_alpha=1.0,
                                chord=1.0, x_f=0.25)
    field = _single_node_field([0.0, 0.0, 0.0], moments=[0.0, 5.0, 0.0])
    f = structural.generalized_force(model, field)
    assert f[1] == pytest.approx(5.0)  # pitch mode has unit rotation at node 1
    assert f[0] == 0.0


def test_generalized_force_unknown_node():
    model = make_model(2, seed=8)
    field = InterfaceField(ids=[999], points=np.zeros((1, 3)),
                           values=np.ones((1, 3)), kind="force")
    with pytest.raises(KeyError, match="999"):
        structural.generalized_force(model, field)


def test_generalized_force_partial_field_zero_fills():
    model = make_model(2, seed=9, n_nodes=3)
    field = InterfaceField(ids=[model.node_ids[1]],
                           points=model.node_coords[1:2],
                           values=np.array([[1.0, 2.0, 3.0]]), kind="force")
    f = structural.generalized_force(model, field)
    stacked = np.zeros(6 * model.n_nodes)
    stacked[6:9] = [1.0, 2.0, 3.0]
    assert np.allclose(f, model.mode_matrix.T @ stacked)


# ---------------------------------------------------------------------------
# dynamic stepping
# ---------------------------------------------------------------------------

def test_step_zero_force_stays_zero():
    model = make_oscillator(2 * math.pi)
    state = structural.initial_state(model)
    for _ in range(50):
        state = structural.step_dynamic(model, state, [0.0], 1e-3)
    assert np.all(state.q == 0.0) and np.all(state.qd == 0.0)


def test_step_free_vibration_amplitude_and_period():
    # analytic cosine: q(t) = cos(w t) with w = 2 pi
    omega = 2 * math.pi
    model = make_oscillator(omega)
    dt = 1e-3
    state = structural.initial_state(model, q0=[1.0])
    n_steps = int(round(10 * 2 * math.pi / omega / dt))
    qs = []
    for _ in range(n_steps):
        state = structural.step_dynamic(model, state, [0.0], dt)
        qs.append(state.q[0])
    assert abs(state.q[0] - 1.0) < 1e-4  # amplitude after 10 periods
    # period error is O(dt^2): locate the last upward zero crossing
    qs = np.array(qs)
    t = dt * np.arange(1, n_steps + 1)
    crossings = np.where((qs[:-1] < 0) & (qs[1:] >= 0))[0]
    t_cross = t[crossings[-1]] + dt * qs[crossings[-1]] / (
        qs[crossings[-1]] - qs[crossings[-1] + 1])
    period_est = t_cross / (len(crossings) - 0.25)
    assert abs(period_est - 1.0) < 10 * (omega * dt) ** 2


def test_step_forced_frf_amplitude():
    omega = 3 * 2 * math.pi
    xi = 0.05
    big_w = 2 * math.pi
    model = make_oscillator(omega, xi=xi)
    dt = 1e-3
    state = structural.initial_state(model)
    t_final = 15.0
    n_steps = int(round(t_final / dt))
    ts, qs = [], []
    for k in range(1, n_steps + 1):
        t = k * dt
        state = structural.step_dynamic(model, state, [math.sin(big_w * t)], dt)
        ts.append(t)
        qs.append(state.q[0])
    ts = np.array(ts)
    qs = np.array(qs)
    periods = 5
    n_use = int(round(periods * 2 * math.pi / big_w / dt))
    sel = slice(len(ts) - n_use, len(ts))
    amp = 2 * abs(np.mean(qs[sel] * np.exp(-1j * big_w * ts[sel])))
    frf = 1.0 / math.sqrt((omega**2 - big_w**2) ** 2 + (2 * xi * omega * big_w) ** 2)
    assert amp == pytest.approx(frf, rel=5e-3)


def test_step_satisfies_alpha_residual():
    rng = np.random.default_rng(10)
    model = make_model(3, seed=11, ratios=rng.uniform(0, 0.1, 3))
    c = structural.damping_matrix(model)
    params = structural.IntegratorParams(0.7)
    state = structural.ModalState(
        t=0.0, q=rng.normal(size=3), qd=rng.normal(size=3),
        qdd=rng.normal(size=3), f=rng.normal(size=3))
    f_new = rng.normal(size=3)
    dt = 0.02
    new = structural.step_dynamic(model, state, f_new, dt, params)
    am, af = params.alpha_m, params.alpha_f
    qdd_m = (1 - am) * new.qdd + am * state.qdd
    qd_f = (1 - af) * new.qd + af * state.qd
    q_f = (1 - af) * new.q + af * state.q
    f_mid = (1 - af) * f_new + af * state.f
    residual = model.gen_mass @ qdd_m + c @ qd_f + model.gen_stiff @ q_f - f_mid
    assert np.abs(residual).max() <= 1e-12 * max(np.abs(f_mid).max(), 1.0)


def test_step_repeatability_bitwise():
    model = make_model(2, seed=12, ratios=np.full(2, 0.03))
    rng = np.random.default_rng(13)
    state = structural.initial_state(model, q0=rng.normal(size=2),
                                     qd0=rng.normal(size=2))
    f = rng.normal(size=2)
    first = structural.step_dynamic(model, state, f, 1e-3)
    second = structural.step_dynamic(model, state, f, 1e-3)
    assert np.array_equal(first.q, second.q)
    assert np.array_equal(first.qd, second.qd)
    assert np.array_equal(first.qdd, second.qdd)


def test_step_rejects_bad_dt():
    model = make_oscillator(1.0)
    state = structural.initial_state(model)
    with pytest.raises(ValueError):
        structural.step_dynamic(model, state, [0.0], 0.0)


def test_energy_conservation_rho_one():
    # A5: rho_inf = 1 preserves the discrete energy over 1e4 steps
    omega = 2 * math.pi
    model = make_oscillator(omega)
    dt = 0.1 / omega
    state = structural.initial_state(model, q0=[1.0])
    energy0 = 0.5 * state.qd[0] ** 2 + 0.5 * omega**2 * state.q[0] ** 2
    worst = 0.0
    for _ in range(10_000):
        state = structural.step_dynamic(model, state, [0.0], dt)
        energy = 0.5 * state.qd[0] ** 2 + 0.5 * omega**2 * state.q[0] ** 2
        worst = max(worst, abs(energy - energy0) / energy0)
    assert worst < 1e-3


def test_convergence_order_two():
    # A5: log-log slope of the endpoint error on the forced analytic case
    omega = 3 * 2 * math.pi
    xi = 0.05
    big_w = 2 * math.pi
    model = make_oscillator(omega, xi=xi)
    t_final = 1.0
    errors = []
    dts = [t_final / n for n in (100, 200, 400, 800)]
    for dt in dts:
        state = structural.initial_state(model)
        steps = int(round(t_final / dt))
        for k in range(1, steps + 1):
            state = structural.step_dynamic(model, state, [math.sin(big_w * k * dt)], dt)
        exact = forced_oscillator_solution(omega, xi, big_w, np.array([t_final]))[0]
        errors.append(abs(state.q[0] - exact))
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    assert 1.9 <= slope <= 2.1


def _one_step_operator(model, damping, dt, params):
    """Probe the linear one-step map on (q, qd, qdd) with zero force."""
    n = model.n_modes
    columns = []
    for i in range(3 * n):
        vec = np.zeros(3 * n)
        vec[i] = 1.0
        state = structural.ModalState(t=0.0, q=vec[:n], qd=vec[n:2 * n],
                                      qdd=vec[2 * n:], f=np.zeros(n))
        new = structural.step_dynamic(model, state, np.zeros(n), dt, params,
                                      damping=damping)
        columns.append(np.concatenate([new.q, new.qd, new.qdd]))
    return np.column_stack(columns)


def test_dissipation_control_spectral_radius():
    # rho_inf = 0.5: unconditionally stable, high-frequency radius -> 0.5
    params = structural.IntegratorParams(0.5)
    for seed in range(5):
        model = make_model(3, seed=20 + seed, ratios=np.full(3, 0.01))
        damping = structural.damping_matrix(model)
        w_max = math.sqrt(np.linalg.eigvalsh(
            np.linalg.solve(model.gen_mass, model.gen_stiff)).max())
        for dt_scale in (0.01, 0.1, 1.0, 10.0, 1000.0):
            op = _one_step_operator(model, damping, dt_scale / w_max, params)
            radius = np.abs(np.linalg.eigvals(op)).max()
            assert radius <= 1.0 + 1e-10
    # high-frequency limit equals the configured spectral radius
    osc = make_oscillator(1.0)
    op = _one_step_operator(osc, np.zeros((1, 1)), 1e6, params)
    radius = np.abs(np.linalg.eigvals(op)).max()
    assert radius == pytest.approx(0.5, abs=1e-3)


def test_free_vibration_decays_with_dissipation():
    # dissipation targets the poorly resolved frequencies: step at w dt >> 1
    params = structural.IntegratorParams(0.5)
    model = make_model(2, seed=30)
    rng = np.random.default_rng(31)
    state = structural.initial_state(model, q0=rng.normal(size=2))
    damping = np.zeros((2, 2))
    w_min = math.sqrt(np.linalg.eigvalsh(
        np.linalg.solve(model.gen_mass, model.gen_stiff)).min())
    dt = 5.0 / w_min
    energy = lambda s: 0.5 * s.qd @ model.gen_mass @ s.qd \
        + 0.5 * s.q @ model.gen_stiff @ s.q
    e0 = energy(state)
    for _ in range(200):
        state = structural.step_dynamic(model, state, np.zeros(2), dt, params,
                                        damping=damping)
    assert energy(state) < 1e-3 * e0


# ---------------------------------------------------------------------------
# steady solve
# ---------------------------------------------------------------------------

def test_solve_steady_paper_quotient():
    model = make_oscillator(math.sqrt(205.0))
    from dataclasses import replace
    model = replace(model, gen_stiff=np.array([[205.0]]),
                    frequencies=np.array([math.sqrt(205.0)]))
    state = structural.solve_steady(model, [59.25])
    assert state.q[0] == pytest.approx(59.25 / 205.0, rel=1e-12)
    assert state.q[0] == pytest.approx(0.2890, abs=5e-5)
    assert np.all(state.qd == 0.0) and np.all(state.qdd == 0.0)


def test_solve_steady_zero_force():
    model = make_model(4, seed=40)
    state = structural.solve_steady(model, np.zeros(4))
    assert np.all(state.q == 0.0)


def test_solve_steady_matches_direct_oracle(rng):
    model = make_model(5, seed=41)
    f = rng.normal(size=5)
    state = structural.solve_steady(model, f)
    direct = la.solve(model.gen_stiff, f)
    assert np.allclose(state.q, direct, rtol=1e-10, atol=1e-14)


def test_solve_steady_pseudo_path_matches_direct(rng):
    model = make_model(5, seed=42, ratios=np.full(5, 0.04))
    f = rng.normal(size=5)
    state = structural.solve_steady(model, f)  # damped model -> pseudo path
    direct = la.solve(model.gen_stiff, f)
    residual = model.gen_stiff @ state.q - f
    assert np.abs(residual).max() <= 1e-10 * np.abs(f).max()
    assert np.allclose(state.q, direct, rtol=1e-9)


def test_solve_steady_singular_stiffness():
    model = make_model(2, seed=43)
    from dataclasses import replace
    model = replace(model, gen_stiff=np.zeros((2, 2)))
    with pytest.raises(SingularSystemError):
        structural.solve_steady(model, [1.0, 0.0])


def test_solve_steady_pseudo_step_budget():
    from aerocouple.errors import ConvergenceError
    model = make_model(3, seed=44, ratios=np.full(3, 0.02))
    pseudo = structural.PseudoParams(max_steps=1)
    with pytest.raises(ConvergenceError) as err:
        structural.solve_steady(model, [1.0, 0.5, -0.2], pseudo=pseudo)
    assert len(err.value.residuals) == 1


# ---------------------------------------------------------------------------
# physical motion recovery
# ---------------------------------------------------------------------------

def test_physical_motion_zero_state():
    model = make_model(2, seed=50)
    state = structural.initial_state(model)
    disp, vel = structural.physical_motion(model, state)
    assert np.all(disp.values == 0.0) and np.all(vel.values == 0.0)
    assert disp.kind == "displacement" and vel.kind == "velocity"


def test_physical_motion_pure_pitch_rigid_rotation():
    from aerocouple import cases
    model = cases.section_model(m=1.0, s_m=0.0, i_f=1.0, k_h=1.0, k_alpha=1.0,
                                chord=1.0, x_f=0.25)
    theta = math.radians(3.0)
    state = structural.initial_state(model, q0=[0.0, theta])
    disp, _ = structural.physical_motion(model, state)
    axis = np.array([0.25, 0.0, 0.0])
    omega_vec = np.array([0.0, theta, 0.0])
    for point, u in zip(model.node_coords, disp.values):
        expected = np.cross(omega_vec, point - axis)
        assert np.allclose(u, expected, atol=1e-14)
    assert np.allclose(disp.rotations[:, 1], theta)


def test_physical_motion_matrix_multiply_oracle(rng):
    model = make_model(2, seed=51)
    q = rng.normal(size=2)
    qd = rng.normal(size=2)
    state = structural.ModalState(t=0.0, q=q, qd=qd, qdd=np.zeros(2),
                                  f=np.zeros(2))
    disp, vel = structural.physical_motion(model, state)
    stacked = (model.mode_matrix @ q).reshape(-1, 6)
    assert np.allclose(disp.values, stacked[:, :3], atol=1e-15)
    assert np.allclose(disp.rotations, stacked[:, 3:], atol=1e-15)
    stacked_v = (model.mode_matrix @ qd).reshape(-1, 6)
    assert np.allclose(vel.values, stacked_v[:, :3], atol=1e-15)


def test_initial_state_consistent_acceleration(rng):
    model = make_model(3, seed=52, ratios=np.full(3, 0.02))
    q0, qd0, f0 = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
    state = structural.initial_state(model, q0, qd0, f0)
    c = structural.damping_matrix(model)
    residual = model.gen_mass @ state.qdd + c @ qd0 + model.gen_stiff @ q0 - f0
    assert np.abs(residual).max() < 1e-12 * max(np.abs(f0).max(), 1.0)
