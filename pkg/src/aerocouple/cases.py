"""Canonical pitch/plunge airfoil cases: model builders and config texts.

The structural mesh mirrors the usual rigid-link idealization: a master
node on the rotation axis plus slave nodes spread over chord and thickness
(the interpolation needs a non-collinear cloud).  Generalized DOFs are the
physical plunge (positive up) and pitch (positive nose-up about +y), so
the mode matrix carries the rigid-link lever arms directly.
"""

from __future__ import annotations

import math

import numpy as np

from .aero import TypicalSectionParams
from .model_io import StructuralModel, serialize_structural_model


def section_model(m: float, s_m: float, i_f: float, k_h: float, k_alpha: float,
                  chord: float, x_f: float,
                  thickness_ratio: float = 0.12) -> StructuralModel:
    """Two-DOF (plunge, pitch) rigid-airfoil model on a five-node cloud.

    ``s_m`` is the classical static unbalance (positive = center of mass aft
    of the axis); with plunge positive up the generalized mass couples with
    the opposite sign.
    """
    half_t = 0.5 * thickness_ratio * chord
    nodes = np.array([
        [x_f, 0.0, 0.0],            # master on the rotation axis
        [0.0, 0.0, 0.0],            # leading edge
        [chord, 0.0, 0.0],          # trailing edge
        [0.3 * chord, 0.0, half_t],
        [0.3 * chord, 0.0, -half_t],
    ])
    ids = np.arange(1, len(nodes) + 1)
    u_mat = np.zeros((6 * len(nodes), 2))
    for i, (x, _, z) in enumerate(nodes):
        u_mat[6 * i + 2, 0] = 1.0            # plunge: u_z = h
        u_mat[6 * i + 0, 1] = z              # pitch:  u_x = theta z
        u_mat[6 * i + 2, 1] = -(x - x_f)     # pitch:  u_z = -theta (x - x_f)
        u_mat[6 * i + 4, 1] = 1.0            # pitch rotation about +y
    gen_mass = np.array([[m, -s_m], [-s_m, i_f]])
    gen_stiff = np.diag([k_h, k_alpha])
    freqs = np.array([math.sqrt(k_h / m), math.sqrt(k_alpha / i_f)])
    model = StructuralModel(
        node_ids=ids, node_coords=nodes, mode_matrix=u_mat,
        frequencies=freqs, gen_mass=gen_mass, gen_stiff=gen_stiff,
        diagonal=False,
    )
    model.validate()
    return model


def section_model_text(*args, **kwargs) -> str:
    return serialize_structural_model(section_model(*args, **kwargs))


# Flow state shared by the static and forced validation cases: temperature
# 293.15 K gives a speed of sound of 343.11 m/s; the static case runs at
# Mach 0.05, the forced case at Mach 0.1.
SOUND_SPEED_293K = math.sqrt(1.4 * 287.058 * 293.15)
STATIC_RHO = 1.223
STATIC_UINF = 0.05 * SOUND_SPEED_293K
FORCED_UINF = 0.1 * SOUND_SPEED_293K

# Nondimensional set for the dynamic-aeroelasticity case.
FLUTTER_CHI = 0.25
FLUTTER_R_ALPHA = 0.5
FLUTTER_OMEGA_ALPHA = 45.0
FLUTTER_OMEGA_BAR = 0.3185
FLUTTER_MASS_RATIO = 100.0
FLUTTER_RHO = 1.225
FLUTTER_SEMICHORD = 0.5


def flutter_params(u_inf: float) -> TypicalSectionParams:
    """Dimensional section data for the dynamic-aeroelasticity parameter set."""
    return TypicalSectionParams.from_nondimensional(
        chi=FLUTTER_CHI, r_alpha=FLUTTER_R_ALPHA,
        omega_alpha=FLUTTER_OMEGA_ALPHA, omega_bar=FLUTTER_OMEGA_BAR,
        mass_ratio=FLUTTER_MASS_RATIO, b=FLUTTER_SEMICHORD,
        rho=FLUTTER_RHO, u_inf=u_inf,
        x_f=0.5 * FLUTTER_SEMICHORD,   # rotation axis on the quarter chord
    )


def flutter_model() -> StructuralModel:
    p = flutter_params(u_inf=1.0)
    return section_model(m=p.m, s_m=p.s_m, i_f=p.i_f, k_h=p.k_h,
                         k_alpha=p.k_alpha, chord=p.chord, x_f=p.x_f)


def static_model() -> StructuralModel:
    """Static-aeroelasticity model: spec stiffnesses, flutter-set inertia."""
    p = flutter_params(u_inf=1.0)
    return section_model(m=p.m, s_m=0.0, i_f=p.i_f, k_h=205.0, k_alpha=2025.0,
                         chord=1.0, x_f=0.25)


def static_config_text() -> str:
    return (
        "# Static aeroelasticity: 3 deg incidence, axis on the quarter chord\n"
        "MODE = STEADY_COUPLED\n"
        "AERO_MODEL = QUASISTEADY\n"
        f"RHO = {STATIC_RHO}\n"
        f"UINF = {STATIC_UINF:.6f}\n"
        "CHORD = 1.0\n"
        "XF = 0.25\n"
        "SREF = 1.0\n"
        "ALPHA_DEG = 3.0\n"
        "DOF_NAMES = h,theta\n"
    )


def forced_config_text(n_steps: int = 1200, dt: float = 1e-3) -> str:
    amp = math.radians(1.0)
    return (
        "# Forced pitching: 1 deg amplitude at 8 Hz, plunge locked\n"
        "MODE = UNSTEADY_IMPOSED\n"
        "AERO_MODEL = WAGNER\n"
        f"DT = {dt}\n"
        f"N_STEPS = {n_steps}\n"
        f"RHO = {STATIC_RHO}\n"
        f"UINF = {FORCED_UINF:.6f}\n"
        "CHORD = 1.0\n"
        "XF = 0.25\n"
        "SREF = 1.0\n"
        "IMPOSED_AMPLITUDE = 0.0,%.17g\n" % amp
        + "IMPOSED_FREQUENCY = 0.0,8.0\n"
        "IMPOSED_BIAS = 0.0,0.0\n"
        "DOF_NAMES = h,theta\n"
    )


def flutter_config_text(u_inf: float, n_steps: int = 4000, dt: float = 1e-3) -> str:
    p = flutter_params(u_inf)
    return (
        "# Dynamic aeroelasticity: free response from a 5 deg pitch condition\n"
        "MODE = UNSTEADY_COUPLED\n"
        "AERO_MODEL = WAGNER\n"
        f"DT = {dt}\n"
        f"N_STEPS = {n_steps}\n"
        f"RHO = {FLUTTER_RHO}\n"
        f"UINF = {u_inf:.6f}\n"
        f"CHORD = {p.chord}\n"
        f"XF = {p.x_f}\n"
        f"SREF = {p.chord}\n"
        "INITIAL_Q = 0.0,%.17g\n" % math.radians(5.0)
        + "FSI_TOLERANCE = 1e-6\n"
        "DOF_NAMES = h,theta\n"
    )


def write_case_files(directory) -> dict:
    """Drop the three validation cases into ``directory``; return the paths."""
    import pathlib

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {
        "naca_static.cfg": static_config_text(),
        "naca_static.bdf": serialize_structural_model(static_model()),
        "naca_forced.cfg": forced_config_text(),
        "naca_forced.bdf": serialize_structural_model(static_model()),
        "naca_flutter.cfg": flutter_config_text(u_inf=120.0),
        "naca_flutter.bdf": serialize_structural_model(flutter_model()),
    }
    paths = {}
    for name, text in files.items():
        path = directory / name
        path.write_text(text)
        paths[name] = str(path)
    return paths
