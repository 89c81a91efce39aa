"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is asserted exactly as stated.
"""

import math
import random
import time

import numpy as np
import pytest

from aerocouple import aero, cases, coupling, driver, model_io, postproc, structural, transfer
from aerocouple.errors import DegenerateCloudError, ModelFormatError

from conftest import make_oscillator
from test_coupling import monolithic_steady_oracle, synthetic_setup
from test_structural import forced_oscillator_solution


def report(name: str, detail: str) -> None:
    print(f"\nPASS {name}: {detail}")


# ---------------------------------------------------------------------------
# A1 - static aeroelasticity
# ---------------------------------------------------------------------------

def test_a1_static_aeroelasticity():
    config = model_io.parse_config(cases.static_config_text())
    model = cases.static_model()
    tic = time.perf_counter()
    output = driver.run_from_config(config, model)
    elapsed = time.perf_counter() - tic

    h = output.summary["final_h"]
    theta = output.summary["final_theta"]
    iterations = output.summary["iterations"]
    assert 0.286 <= h <= 0.292
    assert abs(theta) <= 1e-3
    assert iterations <= 15
    assert elapsed < 1.0
    report("A1", f"h = {h:.4f} m, |theta| = {abs(theta):.2e} rad, "
                 f"{iterations:.0f} FSI iterations, {elapsed:.2f} s")


# ---------------------------------------------------------------------------
# A2 - forced pitching against the frequency-domain theory
# ---------------------------------------------------------------------------

def test_a2_forced_pitch():
    config = model_io.parse_config(cases.forced_config_text(n_steps=7000))
    model = cases.static_model()
    tic = time.perf_counter()
    output = driver.run_from_config(config, model)
    history = model_io.parse_history(output.history_csv)
    tf = postproc.transfer_function(history.time, history.column("q_2"),
                                    history.column("cl"), 8.0,
                                    transient_fraction=0.8)
    elapsed = time.perf_counter() - tic

    measured = tf.magnitude * np.exp(1j * math.radians(tf.phase_deg))
    k = 2 * math.pi * 8.0 * 0.5 / config.u_inf
    params = aero.TypicalSectionParams(
        m=1.0, s_m=0.0, i_f=1.0, k_h=1.0, k_alpha=1.0, b=0.5, x_f=config.x_f,
        rho=config.rho, u_inf=config.u_inf, area=config.reference_area())
    lags = aero.LagCoefficients(config.wagner_a1, config.wagner_b1,
                                config.wagner_a2, config.wagner_b2)
    rational = aero.theodorsen_cl(params, k, c_func=lags.rational_c)
    exact = aero.theodorsen_cl(params, k)

    err_rational = abs(measured - rational) / abs(rational)
    mag_err = abs(abs(measured) - abs(exact)) / abs(exact)
    phase_err = abs(math.degrees(np.angle(measured) - np.angle(exact)))
    assert err_rational <= 1e-6
    assert mag_err <= 0.03
    assert phase_err <= 3.0
    assert elapsed < 10.0
    report("A2", f"vs rational C(k): {err_rational:.2e} relative; vs exact "
                 f"C(k): {mag_err * 100:.2f}% / {phase_err:.3f} deg; "
                 f"{elapsed:.1f} s")


# ---------------------------------------------------------------------------
# A3 - flutter boundary: time marching against the p-method oracle
# ---------------------------------------------------------------------------

def test_a3_flutter_boundary():
    tic = time.perf_counter()
    params = cases.flutter_params(u_inf=1.0)
    oracle = aero.flutter_eigen_sweep(params, np.linspace(60.0, 180.0, 121))
    assert oracle.flutter_speed is not None
    u_f = oracle.flutter_speed

    model = cases.flutter_model()
    config_text = cases.flutter_config_text(u_inf=u_f, n_steps=3000)
    values = [0.90 * u_f, 0.97 * u_f, 1.01 * u_f, 1.05 * u_f]
    sweep = driver.sweep_from_config(config_text, model, "UINF", values)
    assert sweep.flutter_speed is not None
    onset_err = abs(sweep.flutter_speed - u_f) / u_f
    assert onset_err <= 0.02

    # frequency merging past the crossing: pitch and plunge dominant
    # frequencies agree within 5%
    config = model_io.parse_config(
        driver.override_config_text(config_text, "UINF", 1.05 * u_f))
    output = driver.run_from_config(config, model)
    history = model_io.parse_history(output.history_csv)
    cut = len(history.time) // 5
    dt = float(history.time[1] - history.time[0])
    freqs = []
    for column in ("q_1", "q_2"):
        modes = postproc.modal_identification(
            history.column(column)[cut:], dt, 2, rank_tol=1e-4)
        freqs.append(max(modes, key=lambda m: m.amplitude).frequency_hz)
    merge = abs(freqs[0] - freqs[1]) / (0.5 * (freqs[0] + freqs[1]))
    elapsed = time.perf_counter() - tic
    assert merge <= 0.05
    assert elapsed < 300.0
    report("A3", f"oracle U_f = {u_f:.2f} m/s, time-marching U_f = "
                 f"{sweep.flutter_speed:.2f} m/s ({onset_err * 100:.2f}%); "
                 f"merged frequencies {freqs[0]:.3f}/{freqs[1]:.3f} Hz "
                 f"({merge * 100:.2f}%); {elapsed:.0f} s")


# ---------------------------------------------------------------------------
# A4 - interpolation properties
# ---------------------------------------------------------------------------

def test_a4_rbf_properties():
    rng = np.random.default_rng(7)

    def affine_error(source, target):
        rbf_map = transfer.build_map(source, target)
        offset = rng.normal(size=3)
        matrix = rng.normal(size=(3, 3))
        out = rbf_map.apply(source @ matrix.T + offset)
        expected = target @ matrix.T + offset
        return np.abs(out - expected).max() / max(np.abs(expected).max(), 1.0)

    naca_source = cases.static_model().node_coords
    naca_target = aero.airfoil_surface(1.0, 200)
    err_naca = affine_error(naca_source, naca_target)
    err_3d = affine_error(rng.normal(size=(12, 3)), rng.normal(size=(40, 3)))
    assert err_naca <= 1e-10
    assert err_3d <= 1e-10

    source = rng.normal(size=(9, 3))
    target = rng.normal(size=(70, 3))
    rbf_map = transfer.build_map(source, target)
    forces = rng.normal(size=(70, 3))
    field = transfer.InterfaceField(ids=np.arange(1, 71), points=target,
                                    values=forces, kind="force")
    routed = transfer.apply_forces(rbf_map, field, "conservative")
    total = forces.sum(axis=0)
    sum_err = np.abs(routed.force_sum() - total).max() / np.abs(total).max()
    assert sum_err <= 1e-13

    coplanar = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(DegenerateCloudError):
        transfer.build_map(coplanar, rng.normal(size=(5, 3)))
    report("A4", f"affine reproduction {max(err_naca, err_3d):.2e}; "
                 f"conservative sum error {sum_err:.2e}; coplanar rejected")


# ---------------------------------------------------------------------------
# A5 - integrator properties
# ---------------------------------------------------------------------------

def test_a5_integrator():
    omega, xi, big_w = 3 * 2 * math.pi, 0.05, 2 * math.pi
    model = make_oscillator(omega, xi=xi)
    errors, dts = [], [1.0 / n for n in (100, 200, 400, 800)]
    for dt in dts:
        state = structural.initial_state(model)
        for k in range(1, int(round(1.0 / dt)) + 1):
            state = structural.step_dynamic(model, state,
                                            [math.sin(big_w * k * dt)], dt)
        exact = forced_oscillator_solution(omega, xi, big_w, np.array([1.0]))[0]
        errors.append(abs(state.q[0] - exact))
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    assert 1.9 <= slope <= 2.1

    free = make_oscillator(2 * math.pi)
    dt = 0.1 / (2 * math.pi)
    state = structural.initial_state(free, q0=[1.0])
    energy0 = 0.5 * state.qd[0] ** 2 + 0.5 * (2 * math.pi) ** 2 * state.q[0] ** 2
    drift = 0.0
    for _ in range(10_000):
        state = structural.step_dynamic(free, state, [0.0], dt)
        energy = 0.5 * state.qd[0] ** 2 + 0.5 * (2 * math.pi) ** 2 * state.q[0] ** 2
        drift = max(drift, abs(energy - energy0) / energy0)
    assert drift < 1e-3

    rng = np.random.default_rng(3)
    freqs = np.array([2.0, 5.0, 9.0])
    xi_target = rng.uniform(0.005, 0.05, size=3)
    u_mat = rng.normal(size=(6, 3))
    decoupled = model_io.StructuralModel(
        node_ids=np.array([1]), node_coords=np.zeros((1, 3)), mode_matrix=u_mat,
        frequencies=freqs, gen_mass=np.eye(3), gen_stiff=np.diag(freqs**2),
        damping_ratios=xi_target, diagonal=False)
    c_mat = structural.damping_matrix(decoupled)
    target = np.diag(2.0 * xi_target * freqs)
    damp_err = np.abs(c_mat - target).max() / np.abs(target).max()
    assert damp_err <= 1e-10
    report("A5", f"order slope {slope:.3f}; energy drift {drift:.2e}; "
                 f"damping reconstruction {damp_err:.2e}")


# ---------------------------------------------------------------------------
# A6 - coupling algebra
# ---------------------------------------------------------------------------

def test_a6_coupling_algebra():
    model, _ = synthetic_setup(seed=21)
    factory = lambda: synthetic_setup(seed=21)[1]
    config = model_io.parse_config(
        "MODE = STEADY_COUPLED\nAERO_MODEL = SYNTHETIC\n"
        "SYNTHETIC_P0 = 0.4\nSYNTHETIC_GRAD = 0.8,-0.5,1.1\n"
        "FSI_TOLERANCE = 1e-13\n")
    oracle = monolithic_steady_oracle(config, model, factory)
    result = coupling.run_steady_coupled(config, model, factory())
    mono_err = np.abs(result.states[0].q - oracle).max() / np.abs(oracle).max()
    assert mono_err <= 1e-8

    a, c = -1.5, 2.0
    u, omega, r_prev, converged_at = 0.0, 0.5, None, None
    for k in range(20):
        r = np.array([a * u + c - u])
        if abs(r[0]) < 1e-12:
            converged_at = k
            break
        if k > 0:
            omega, update = coupling.aitken_relax(omega, r_prev, r)
            u += update[0]
        else:
            u += omega * r[0]
        r_prev = r
    assert converged_at is not None and converged_at <= 5
    diverged = 0.0
    for _ in range(20):
        diverged += 1.0 * (a * diverged + c - diverged)
    assert abs(diverged - c / (1 - a)) > 100.0

    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    vel = transfer.grid_velocities(pts, pts + [0.0, 0.0, 0.3], 1e-3,
                                   first_step_with_initial_deformation=True)
    assert np.all(vel == 0.0)
    report("A6", f"monolithic agreement {mono_err:.2e}; Aitken converged in "
                 f"{converged_at} iterations (fixed omega diverges); "
                 "first-step grid velocity exactly zero")


# ---------------------------------------------------------------------------
# A7 - input/output robustness
# ---------------------------------------------------------------------------

def _mutate(text: str, rng: random.Random) -> str:
    lines = text.splitlines()
    op = rng.randrange(6)
    if op == 0 and lines:                       # drop a line
        del lines[rng.randrange(len(lines))]
    elif op == 1 and lines:                     # duplicate a line
        lines.insert(rng.randrange(len(lines)),
                     lines[rng.randrange(len(lines))])
    elif op == 2:                               # corrupt one character
        flat = list("\n".join(lines))
        if flat:
            flat[rng.randrange(len(flat))] = rng.choice("abcXYZ,;.$#@!0123456789")
        return "".join(flat)
    elif op == 3 and lines:                     # truncate the file
        lines = lines[:rng.randrange(len(lines) + 1)]
    elif op == 4 and lines:                     # scramble fields of a line
        i = rng.randrange(len(lines))
        fields = lines[i].split(",")
        rng.shuffle(fields)
        lines[i] = ",".join(fields)
    else:                                       # inject a random line
        lines.insert(rng.randrange(len(lines) + 1),
                     rng.choice(["GRID,", "MODE,9,x", "GENMASS,2", ",,,,",
                                 "DAMP,1", "\x00\x01", "1e999,nan,inf"]))
    return "\n".join(lines)


def test_a7_io_robustness():
    base_model = cases.flutter_model()
    text = model_io.serialize_structural_model(base_model)
    again = model_io.parse_structural_model(text)
    assert model_io.serialize_structural_model(again) == text

    rng_np = np.random.default_rng(11)
    records = []
    t = 0.0
    for _ in range(100):
        records.append(model_io.HistoryRecord(
            time=t, q=rng_np.normal(size=3), qd=rng_np.normal(size=3),
            f=rng_np.normal(size=3)))
        t += 0.01
    csv_text = model_io.format_history(records)
    history = model_io.parse_history(csv_text)
    for rec, row in zip(records, history.data):
        original = np.concatenate([[rec.time], rec.q, rec.qd, rec.f])
        scale = np.maximum(np.abs(original), 1e-300)
        assert np.all(np.abs(row - original) / scale <= 1e-12)

    rng = random.Random(2024)
    crashes = 0
    diagnostics = 0
    for _ in range(1000):
        mutated = text
        for _ in range(rng.randrange(1, 4)):
            mutated = _mutate(mutated, rng)
        try:
            model_io.parse_structural_model(mutated)
        except ModelFormatError:
            diagnostics += 1
        except Exception:
            crashes += 1
    assert crashes == 0
    report("A7", f"round-trip exact; history re-parse <= 1e-12; fuzz: "
                 f"1000 mutants, {diagnostics} diagnostics, {crashes} crashes")
