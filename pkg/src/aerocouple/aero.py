"""Built-in analytical aerodynamic solvers behind the fluid-side contract.

Three desk-scale models replace a CFD solver:

* ``QuasiSteadyAirfoil`` -- thin-airfoil lift from the instantaneous
  three-quarter-chord incidence, lift applied at the quarter chord.
* ``WagnerAirfoil`` -- time-domain unsteady thin-airfoil model: two lag
  states realize a rational approximation of the lift-deficiency function,
  plus the exact non-circulatory (added-mass) terms.
* ``SyntheticPressureSolver`` -- an analytic pressure law integrated over an
  arbitrary closed surface cloud, for transfer and coupling tests.

All solvers honor the same behavioral contract: expose interface points,
receive interface motion, advance from an internal checkpoint (repeatably),
then commit with ``accept``.  A halo query is part of the contract and is
constantly false in this single-process engine.

The lift-deficiency function is evaluated from Hankel functions computed
in-module (ascending series below argument 8, asymptotic expansion above),
so no external special-function dependency exists in the evaluation path.

Conventions: x runs downstream, z up, y spanwise.  Pitch is positive nose
up (rotation about +y); the plunge coordinate reconstructed from interface
motion is positive up.  Classical formulas written for downward plunge are
applied with the sign folded in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import SingularSystemError
from .transfer import InterfaceField

_EULER_GAMMA = 0.5772156649015329
_SERIES_LIMIT = 8.0

# ---------------------------------------------------------------------------
# Bessel/Hankel evaluation and the lift-deficiency function
# ---------------------------------------------------------------------------


def _bessel_series(x: float) -> tuple[float, float, float, float]:
    """Ascending-series J0, J1, Y0, Y1 for 0 < x <= ~9."""
    q = 0.25 * x * x
    log_term = math.log(0.5 * x)

    j0 = 0.0
    y0_sum = 0.0
    term = 1.0
    harmonic = 0.0
    for m in range(0, 40):
        if m > 0:
            term *= -q / (m * m)
            harmonic += 1.0 / m
        j0 += term
        y0_sum -= term * harmonic  # (-1)^(m+1) h_m q^m / (m!)^2
        if abs(term) < 1e-18 * max(abs(j0), 1.0) and m > 4:
            break
    y0 = (2.0 / math.pi) * ((log_term + _EULER_GAMMA) * j0 + y0_sum)

    j1 = 0.0
    y1_sum = 0.0
    term = 0.5 * x
    h_m = 0.0
    h_m1 = 1.0
    for m in range(0, 40):
        if m > 0:
            term *= -q / (m * (m + 1))
            h_m += 1.0 / m
            h_m1 += 1.0 / (m + 1)
        j1 += term
        y1_sum += term * (h_m + h_m1 - 2.0 * _EULER_GAMMA)
        if abs(term) < 1e-18 * max(abs(j1), 1.0) and m > 4:
            break
    y1 = (2.0 / math.pi) * log_term * j1 - 2.0 / (math.pi * x) - y1_sum / math.pi
    return j0, j1, y0, y1


def _bessel_asymptotic(x: float, nu: int) -> tuple[float, float]:
    """Hankel asymptotic expansion of (J_nu, Y_nu); summed to smallest term."""
    mu = 4.0 * nu * nu
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    prev = math.inf
    for k in range(1, 25):
        term *= (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev:
            break
        prev = abs(term)
        quarter = k % 4
        if quarter == 1:
            q_sum += term
        elif quarter == 2:
            p_sum -= term
        elif quarter == 3:
            q_sum -= term
        else:
            p_sum += term
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = math.sqrt(2.0 / (math.pi * x))
    j = amp * (p_sum * math.cos(chi) - q_sum * math.sin(chi))
    y = amp * (p_sum * math.sin(chi) + q_sum * math.cos(chi))
    return j, y


def _hankel2(x: float) -> tuple[complex, complex]:
    """Second-kind Hankel functions (H0, H1) of a positive real argument."""
    if x <= _SERIES_LIMIT:
        j0, j1, y0, y1 = _bessel_series(x)
    else:
        j0, y0 = _bessel_asymptotic(x, 0)
        j1, y1 = _bessel_asymptotic(x, 1)
    return complex(j0, -y0), complex(j1, -y1)


def theodorsen_c(k: float) -> complex:
    """Lift-deficiency function C(k) = H1(k) / (H1(k) + i H0(k)).

    Defined for reduced frequency k >= 0; the k -> 0 limit is 1.
    """
    if k < 0:
        raise ValueError("reduced frequency must be non-negative")
    if k == 0.0:
        return complex(1.0, 0.0)
    h0, h1 = _hankel2(k)
    return h1 / (h1 + 1j * h0)


@dataclass(frozen=True)
class LagCoefficients:
    """Two-pole rational approximation of the indicial lift response.

    Defaults are the classical two-exponential fit (decay rates in
    semichord time); a0 = 1 - a1 - a2 is the instantaneous fraction.
    """

    a1: float = 0.165
    b1: float = 0.0455
    a2: float = 0.335
    b2: float = 0.3

    def __post_init__(self):
        if self.b1 <= 0 or self.b2 <= 0:
            raise ValueError("lag decay rates must be positive")
        if self.a1 + self.a2 >= 1.0:
            raise ValueError("lag gains must satisfy a1 + a2 < 1")

    @property
    def a0(self) -> float:
        return 1.0 - self.a1 - self.a2

    def rational_c(self, k: float) -> complex:
        """Frequency response of the lag realization (matches C(k) shape)."""
        ik = 1j * k
        return self.a0 + self.a1 * self.b1 / (self.b1 + ik) \
            + self.a2 * self.b2 / (self.b2 + ik)

    def wagner(self, s) -> np.ndarray:
        """Indicial response in semichord time s."""
        s = np.asarray(s, dtype=float)
        return 1.0 - self.a1 * np.exp(-self.b1 * s) - self.a2 * np.exp(-self.b2 * s)


# ---------------------------------------------------------------------------
# Typical-section parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypicalSectionParams:
    """Two-DOF pitch/plunge section data.

    ``s_m`` is the static unbalance in the classical convention (positive
    when the center of mass sits aft of the rotation axis).  ``x_f`` is the
    chordwise position of the rotation axis measured from the leading edge.
    """

    m: float
    s_m: float
    i_f: float
    k_h: float
    k_alpha: float
    b: float
    x_f: float
    rho: float
    u_inf: float
    area: float
    c_h: float = 0.0
    c_alpha: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.m <= 0 or self.i_f <= 0:
            raise ValueError("mass and inertia must be positive")
        if self.m * self.i_f - self.s_m**2 <= 0:
            raise ValueError("inertia matrix is not positive definite")
        if self.b <= 0:
            raise ValueError("semichord must be positive")

    @property
    def chord(self) -> float:
        return 2.0 * self.b

    @property
    def omega_h(self) -> float:
        return math.sqrt(self.k_h / self.m)

    @property
    def omega_alpha(self) -> float:
        return math.sqrt(self.k_alpha / self.i_f)

    @property
    def chi(self) -> float:
        return self.s_m / (self.m * self.b)

    @property
    def r_alpha(self) -> float:
        return math.sqrt(self.i_f / (self.m * self.b**2))

    @property
    def mass_ratio(self) -> float:
        return self.m / (math.pi * self.rho * self.b**2)

    @classmethod
    def from_nondimensional(cls, chi, r_alpha, omega_alpha, omega_bar,
                            mass_ratio, b, rho, u_inf, x_f=None, area=None,
                            alpha=0.0) -> "TypicalSectionParams":
        """Build dimensional data from the nondimensional parameter set."""
        m = mass_ratio * math.pi * rho * b * b
        i_f = r_alpha**2 * m * b * b
        k_alpha = i_f * omega_alpha**2
        k_h = m * (omega_bar * omega_alpha) ** 2
        return cls(
            m=m, s_m=chi * m * b, i_f=i_f, k_h=k_h, k_alpha=k_alpha,
            b=b, x_f=(0.5 * b if x_f is None else x_f),
            rho=rho, u_inf=u_inf,
            area=(2.0 * b if area is None else area), alpha=alpha,
        )


def theodorsen_cl(params: TypicalSectionParams, k: float,
                  pitch_amp: complex = 1.0, plunge_amp: complex = 0.0,
                  c_func=None) -> complex:
    """Complex lift-coefficient amplitude for harmonic pitch/plunge.

    Pitch amplitude is in radians about ``x_f``; plunge amplitude is the
    classical downward-positive displacement in meters.  ``c_func`` defaults
    to the exact lift-deficiency function; pass ``lags.rational_c`` to get
    the same rational approximation the time-domain solver realizes.
    """
    if params.u_inf <= 0:
        raise ValueError("free-stream speed must be positive")
    b = params.b
    c = params.chord
    x_f = params.x_f
    ck = theodorsen_c(k) if c_func is None else c_func(k)
    ik = 1j * k
    pitch_term = math.pi * (ik + (x_f - 0.5 * c) * k * k / b) \
        + 2.0 * math.pi * ck * (1.0 + ik * (0.75 * c - x_f) / b)
    plunge_term = -math.pi * k * k / b + 2.0 * math.pi * ck * ik / b
    return pitch_amp * pitch_term + plunge_amp * plunge_term


# ---------------------------------------------------------------------------
# Interface geometry helpers
# ---------------------------------------------------------------------------


def airfoil_surface(chord: float, n_points: int = 200) -> np.ndarray:
    """Symmetric 12%-thick airfoil contour in the x-z plane (y = 0).

    Cosine-spaced points run TE -> upper -> LE -> lower -> TE (open).
    """
    if n_points < 8:
        raise ValueError("need at least 8 surface points")
    n_side = n_points // 2
    beta = np.linspace(0.0, math.pi, n_side)
    xc = 0.5 * (1.0 + np.cos(beta))  # 1 -> 0
    thick = 5 * 0.12 * (
        0.2969 * np.sqrt(xc) - 0.1260 * xc - 0.3516 * xc**2
        + 0.2843 * xc**3 - 0.1015 * xc**4
    )
    upper = np.column_stack([xc * chord, np.zeros(n_side), thick * chord])
    lower = np.column_stack([xc[::-1][1:] * chord, np.zeros(n_side - 1),
                             -thick[::-1][1:] * chord])
    return np.vstack([upper, lower])


def cube_surface(n_per_edge: int = 6, center=(0.0, 0.0, 0.0), size: float = 1.0):
    """Closed unit-cube surface cloud: (points, normals, areas)."""
    if n_per_edge < 2:
        raise ValueError("need at least 2 points per edge")
    u = (np.arange(n_per_edge) + 0.5) / n_per_edge - 0.5
    uu, vv = np.meshgrid(u, u, indexing="ij")
    uu = uu.ravel() * size
    vv = vv.ravel() * size
    cell = (size / n_per_edge) ** 2
    pts, nrm = [], []
    half = 0.5 * size
    for axis in range(3):
        for sign in (-1.0, 1.0):
            n_vec = np.zeros(3)
            n_vec[axis] = sign
            face = np.zeros((len(uu), 3))
            face[:, axis] = sign * half
            other = [d for d in range(3) if d != axis]
            face[:, other[0]] = uu
            face[:, other[1]] = vv
            pts.append(face + np.asarray(center))
            nrm.append(np.tile(n_vec, (len(uu), 1)))
    points = np.vstack(pts)
    normals = np.vstack(nrm)
    areas = np.full(len(points), cell)
    return points, normals, areas


class _RigidFit:
    """Least-squares (plunge, pitch) recovery from interface point motion.

    The model is the linearized rigid field u_x = theta * z,
    u_z = h - theta * (x - x_f); the fit is exact on such fields.
    """

    def __init__(self, points: np.ndarray, x_f: float):
        x = points[:, 0]
        z = points[:, 2]
        rows = np.zeros((2 * len(points), 2))
        rows[:len(points), 1] = z                      # u_x rows
        rows[len(points):, 0] = 1.0                    # u_z rows
        rows[len(points):, 1] = -(x - x_f)
        self._pinv = np.linalg.pinv(rows)

    def __call__(self, values: np.ndarray) -> tuple[float, float]:
        stacked = np.concatenate([values[:, 0], values[:, 2]])
        h, theta = self._pinv @ stacked
        return float(h), float(theta)


# ---------------------------------------------------------------------------
# Solver contract
# ---------------------------------------------------------------------------


class AeroSolverContract:
    """Behavioral base for the fluid side of the coupling.

    The driver only relies on this surface: interface point queries (with a
    halo query that is constantly false in a single process), motion
    application, advancing from an internal checkpoint, force readback and
    checkpoint commit.  Advancing twice from the same checkpoint with the
    same motion must produce identical forces.
    """

    def interface_points(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def halo_flags(self) -> np.ndarray:
        ids, _ = self.interface_points()
        return np.zeros(len(ids), dtype=bool)

    def initialize(self, disp=None, vel=None, acc=None) -> None:
        raise NotImplementedError

    def set_interface_motion(self, disp, vel=None, acc=None) -> None:
        raise NotImplementedError

    def advance(self, t_new: float) -> None:
        raise NotImplementedError

    def run_steady(self) -> None:
        raise NotImplementedError

    def interface_forces(self) -> InterfaceField:
        raise NotImplementedError

    def accept(self) -> None:
        raise NotImplementedError

    def coefficients(self) -> dict:
        return {}

    def write_solution(self, path) -> None:
        field = self.interface_forces()
        with open(path, "w") as handle:
            handle.write("id,x,y,z,fx,fy,fz\n")
            for nid, xyz, val in zip(field.ids, field.points, field.values):
                handle.write(f"{nid}," + ",".join("%.12e" % v for v in (*xyz, *val)) + "\n")

    def finalize(self) -> None:
        pass


class _AirfoilBase(AeroSolverContract):
    """Shared plumbing for the pitch/plunge airfoil models."""

    def __init__(self, rho, u_inf, chord, x_f, area, alpha=0.0, n_points=200,
                 points=None):
        if u_inf <= 0:
            raise ValueError("free-stream speed must be positive")
        self.rho = float(rho)
        self.u_inf = float(u_inf)
        self.chord = float(chord)
        self.b = 0.5 * self.chord
        self.x_f = float(x_f)
        self.area = float(area)
        self.alpha = float(alpha)
        self._points = airfoil_surface(chord, n_points) if points is None \
            else np.asarray(points, dtype=float)
        self._ids = np.arange(1, len(self._points) + 1)
        self._fit = _RigidFit(self._points, self.x_f)
        self._span = self.area / self.chord
        zero = (0.0, 0.0)
        # motion triplets (h, theta), rates and accelerations (None = unknown)
        self._motion = [zero, zero, None]
        self._forces: tuple[float, float] | None = None

    def interface_points(self):
        return self._ids, self._points

    def set_interface_motion(self, disp, vel=None, acc=None):
        disp = np.asarray(disp, dtype=float)
        if disp.shape != self._points.shape:
            raise ValueError("displacement array does not match interface points")
        motion = [self._fit(disp), (0.0, 0.0), None]
        if vel is not None:
            motion[1] = self._fit(np.asarray(vel, dtype=float))
        if acc is not None:
            motion[2] = self._fit(np.asarray(acc, dtype=float))
        self._motion = motion

    def dynamic_pressure(self) -> float:
        return 0.5 * self.rho * self.u_inf**2

    def _resultant_field(self, lift: float, moment: float) -> InterfaceField:
        return InterfaceField(
            ids=np.array([1]),
            points=np.array([[self.x_f, 0.0, 0.0]]),
            values=np.array([[0.0, 0.0, lift]]),
            kind="force",
            moments=np.array([[0.0, moment, 0.0]]),
            resultant=True,
        )

    def interface_forces(self) -> InterfaceField:
        if self._forces is None:
            raise RuntimeError("no forces available: initialize or advance first")
        lift, moment = self._forces
        return self._resultant_field(lift, moment)

    def coefficients(self) -> dict:
        lift, moment = self._forces if self._forces is not None else (0.0, 0.0)
        q_s = self.dynamic_pressure() * self.area
        if q_s == 0.0:
            return {"cl": 0.0, "cm": 0.0}
        return {"cl": lift / q_s, "cm": moment / (q_s * self.chord)}


class QuasiSteadyAirfoil(_AirfoilBase):
    """Quasi-steady thin-airfoil loads from the instantaneous incidence.

    Lift 0.5 rho U^2 S 2 pi alpha_eff acts at the quarter chord (symmetric
    section: zero moment about the aerodynamic center); alpha_eff is taken
    at the three-quarter-chord point.  The model is memoryless, so advance
    and steady solves coincide.
    """

    def _evaluate(self) -> None:
        (h, theta), (hd, thetad), _ = self._motion
        del h
        alpha_eff = self.alpha + theta \
            + (-hd + (0.75 * self.chord - self.x_f) * thetad) / self.u_inf
        lift = self.dynamic_pressure() * self.area * 2.0 * math.pi * alpha_eff
        moment = (self.x_f - 0.25 * self.chord) * lift
        self._forces = (lift, moment)

    def initialize(self, disp=None, vel=None, acc=None):
        if disp is not None:
            self.set_interface_motion(disp, vel, acc)
        self._evaluate()

    def advance(self, t_new):
        self._evaluate()

    def run_steady(self):
        self._evaluate()

    def accept(self):
        pass


class _LagIntegrator:
    """Exact exponential update of dz/ds = w - b z over a fixed step.

    The forcing over a step is reconstructed as a cubic Hermite from the
    endpoint values and slopes (slope-free inputs fall back to linear).
    """

    def __init__(self, decay: float, ds: float):
        self.decay = decay
        self.ds = ds
        x = -decay * ds
        phi = _phi_functions(x, 4)
        # integrals of e^{-b(h - tau)} tau^j over [0, h]
        i0 = ds * phi[0]
        i1 = ds**2 * phi[1]
        i2 = 2.0 * ds**3 * phi[2]
        i3 = 6.0 * ds**4 * phi[3]
        self.efact = math.exp(x)
        h = ds
        self.w_cubic = (
            i0 - 3.0 * i2 / h**2 + 2.0 * i3 / h**3,   # weight on w0
            i1 - 2.0 * i2 / h + i3 / h**2,            # weight on s0
            3.0 * i2 / h**2 - 2.0 * i3 / h**3,        # weight on w1
            -i2 / h + i3 / h**2,                      # weight on s1
        )
        self.w_linear = (i0 - i1 / h, i1 / h)

    def advance(self, z, w0, w1, s0=None, s1=None) -> float:
        if s0 is not None and s1 is not None:
            a, b, c, d = self.w_cubic
            return self.efact * z + a * w0 + b * s0 + c * w1 + d * s1
        a, b = self.w_linear
        return self.efact * z + a * w0 + b * w1


def _phi_functions(x: float, count: int) -> list[float]:
    """phi_k(x) = sum_j x^j / (k + j)!, evaluated stably for small |x|."""
    if abs(x) < 0.5:
        phis = []
        for k in range(1, count + 1):
            term = 1.0 / math.factorial(k)
            total = term
            for j in range(1, 30):
                term *= x / (k + j)
                total += term
                if abs(term) < 1e-18 * abs(total):
                    break
            phis.append(total)
        return phis
    phis = [(math.exp(x) - 1.0) / x]
    for k in range(1, count):
        phis.append((phis[-1] - 1.0 / math.factorial(k)) / x)
    return phis


class WagnerAirfoil(_AirfoilBase):
    """Unsteady thin-airfoil model with a two-lag circulatory realization.

    Lag states filter the three-quarter-chord downwash in semichord time;
    circulatory lift is 2 pi (a0 w + a1 b1 z1 + a2 b2 z2) at the quarter
    chord, and the non-circulatory terms use the supplied velocities and
    accelerations directly.  The lag update is an exact exponential
    integrator, cubic-accurate when accelerations are available.
    """

    def __init__(self, rho, u_inf, chord, x_f, area, dt, alpha=0.0,
                 lags: LagCoefficients = LagCoefficients(), n_points=200,
                 points=None):
        super().__init__(rho, u_inf, chord, x_f, area, alpha, n_points, points)
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.dt = float(dt)
        self.lags = lags
        ds = self.u_inf * self.dt / self.b
        self._integrators = (
            _LagIntegrator(lags.b1, ds),
            _LagIntegrator(lags.b2, ds),
        )
        # committed (checkpoint) state
        self._z = np.zeros(2)
        self._w = 0.0
        self._w_slope: float | None = 0.0
        self._t = 0.0
        # uncommitted state of the last advance
        self._pending: tuple[np.ndarray, float, float | None, float] | None = None

    def _effective_acceleration(self) -> tuple[float, float]:
        """Supplied accelerations, or first differences of the velocities
        relative to the committed time level when no field was given."""
        acc = self._motion[2]
        if acc is not None:
            return acc
        (hd, thetad) = self._motion[1]
        (hd0, thetad0) = self._committed_motion[1]
        return ((hd - hd0) / self.dt, (thetad - thetad0) / self.dt)

    def _downwash(self, acc) -> tuple[float, float]:
        """Effective incidence at 3c/4 and its semichord-time derivative."""
        (_, theta), (hd, thetad), _ = self._motion
        arm = 0.75 * self.chord - self.x_f
        w = self.alpha + theta + (-hd + arm * thetad) / self.u_inf
        hdd, thetadd = acc
        w_dot = thetad + (-hdd + arm * thetadd) / self.u_inf
        return w, w_dot * self.b / self.u_inf

    def _loads(self, w: float, z: np.ndarray, acc) -> tuple[float, float]:
        (_, _), (hd, thetad), _ = self._motion
        hdd, thetadd = acc
        lags = self.lags
        rho, u, b = self.rho, self.u_inf, self.b
        a = (self.x_f - b) / b  # axis position in semichords aft of midchord
        alpha_c = lags.a0 * w + lags.a1 * lags.b1 * z[0] + lags.a2 * lags.b2 * z[1]
        lift_c = math.pi * rho * u * u * self.chord * alpha_c
        h_dd_down = -hdd
        lift_nc = math.pi * rho * b * b * (h_dd_down + u * thetad - b * a * thetadd)
        mom_c = (self.x_f - 0.25 * self.chord) * lift_c
        mom_nc = math.pi * rho * b * b * (
            b * a * h_dd_down - u * b * (0.5 - a) * thetad
            - b * b * (0.125 + a * a) * thetadd
        )
        span = self._span
        return span * (lift_c + lift_nc), span * (mom_c + mom_nc)

    def initialize(self, disp=None, vel=None, acc=None):
        """Set the starting motion; lag states start empty (impulsive)."""
        if disp is not None:
            self.set_interface_motion(disp, vel, acc)
        self._committed_motion = self._motion
        acc_eff = self._effective_acceleration()
        self._w, self._w_slope = self._downwash(acc_eff)
        self._forces = self._loads(self._w, self._z, acc_eff)
        self._pending = None

    def advance(self, t_new):
        acc_eff = self._effective_acceleration()
        w1, s1 = self._downwash(acc_eff)
        z_new = np.array([
            integ.advance(z0, self._w, w1, self._w_slope, s1)
            for integ, z0 in zip(self._integrators, self._z)
        ])
        self._forces = self._loads(w1, z_new, acc_eff)
        self._pending = (z_new, w1, s1, t_new)

    def run_steady(self):
        """Steady limit: lag states relaxed to w / b_i (full circulation)."""
        acc_eff = self._effective_acceleration()
        w, s = self._downwash(acc_eff)
        z_new = np.array([w / self.lags.b1, w / self.lags.b2])
        self._forces = self._loads(w, z_new, acc_eff)
        self._pending = (z_new, w, s, self._t)

    def accept(self):
        if self._pending is None:
            return
        self._z, self._w, self._w_slope, self._t = self._pending
        self._committed_motion = self._motion
        self._pending = None


class SyntheticPressureSolver(AeroSolverContract):
    """Analytic pressure law integrated over a surface cloud.

    Nodal forces are -p(x, t) A n with the pressure evaluated at the
    displaced positions and frozen reference normals/areas, so a linear
    law yields forces exactly linear in the interface displacement.
    """

    def __init__(self, points, normals, areas, p0=0.0, grad=(0.0, 0.0, 0.0),
                 rate=0.0, pressure_law=None):
        self._points = np.asarray(points, dtype=float)
        if normals is None or areas is None:
            raise ValueError("surface normals and areas are required")
        self._normals = np.asarray(normals, dtype=float)
        self._areas = np.asarray(areas, dtype=float)
        if self._normals.shape != self._points.shape:
            raise ValueError("normals must match points")
        if self._areas.shape != (len(self._points),):
            raise ValueError("areas must be one value per point")
        self._ids = np.arange(1, len(self._points) + 1)
        if pressure_law is None:
            grad = np.asarray(grad, dtype=float)
            pressure_law = lambda x, t: (p0 + x @ grad) * (1.0 + rate * t)
        self._law = pressure_law
        self._disp = np.zeros_like(self._points)
        self._t = 0.0
        self._pending_t: float | None = None
        self._forces: np.ndarray | None = None

    def interface_points(self):
        return self._ids, self._points

    def set_interface_motion(self, disp, vel=None, acc=None):
        disp = np.asarray(disp, dtype=float)
        if disp.shape != self._points.shape:
            raise ValueError("displacement array does not match interface points")
        self._disp = disp

    def _evaluate(self, t: float) -> None:
        x = self._points + self._disp
        p = np.asarray([self._law(xi, t) for xi in x], dtype=float)
        self._forces = -(p * self._areas)[:, None] * self._normals

    def initialize(self, disp=None, vel=None, acc=None):
        if disp is not None:
            self.set_interface_motion(disp, vel, acc)
        self._evaluate(self._t)
        self._pending_t = None

    def advance(self, t_new):
        self._evaluate(t_new)
        self._pending_t = t_new

    def run_steady(self):
        self._evaluate(self._t)
        self._pending_t = self._t

    def accept(self):
        if self._pending_t is not None:
            self._t = self._pending_t
            self._pending_t = None

    def interface_forces(self) -> InterfaceField:
        if self._forces is None:
            raise RuntimeError("no forces available: initialize or advance first")
        return InterfaceField(
            ids=self._ids, points=self._points, values=self._forces, kind="force",
        )

    def coefficients(self) -> dict:
        total = self._forces.sum(axis=0) if self._forces is not None else np.zeros(3)
        return {"fx": total[0], "fy": total[1], "fz": total[2]}


# ---------------------------------------------------------------------------
# p-method eigenvalue oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlutterPoint:
    speed: float
    eigenvalues: np.ndarray
    max_real: float
    frequencies: np.ndarray   # Hz, oscillatory modes sorted ascending
    damping: np.ndarray       # ratio per oscillatory mode (positive decays)


@dataclass(frozen=True)
class FlutterSweep:
    points: tuple[FlutterPoint, ...]
    flutter_speed: float | None
    bracket: tuple[float, float] | None

    @property
    def speeds(self) -> np.ndarray:
        return np.array([p.speed for p in self.points])

    @property
    def max_reals(self) -> np.ndarray:
        return np.array([p.max_real for p in self.points])


def _section_system(params: TypicalSectionParams, lags: LagCoefficients,
                    u: float) -> tuple[np.ndarray, np.ndarray]:
    """First-order (E, A) of the section + added mass + two lag states.

    States are (h, theta, h', theta', z1, z2) in the classical
    downward-plunge convention; eigenvalues are convention independent.
    """
    rho, b = params.rho, params.b
    a = (params.x_f - b) / b
    pib2 = math.pi * rho * b * b
    m_aug = np.array([
        [params.m + pib2, params.s_m - pib2 * b * a],
        [params.s_m - pib2 * b * a, params.i_f + pib2 * b * b * (0.125 + a * a)],
    ])
    if abs(np.linalg.det(m_aug)) < 1e-14 * max(np.abs(m_aug).max(), 1.0) ** 2:
        raise SingularSystemError("inertia matrix including added mass is singular")

    e_mat = np.eye(6)
    e_mat[2:4, 2:4] = m_aug

    a_mat = np.zeros((6, 6))
    a_mat[0, 2] = 1.0
    a_mat[1, 3] = 1.0

    # circulatory incidence: w = (h' + u theta + b(1/2 - a) theta') / u
    arm = b * (0.5 - a)
    lift_gain = 2.0 * math.pi * rho * u * b      # times (u w) gives lift
    mom_gain = lift_gain * b * (a + 0.5)         # lift at quarter chord
    w_coeffs = np.zeros(6)
    w_coeffs[2] = 1.0
    w_coeffs[1] = u
    w_coeffs[3] = arm
    lag_part = np.zeros(6)
    lag_part[4] = lags.a1 * lags.b1
    lag_part[5] = lags.a2 * lags.b2
    # alpha_c * u = a0 * (u w) + u * (a1 b1 z1 + a2 b2 z2)
    circ = lags.a0 * w_coeffs + u * lag_part

    a_mat[2, 0] = -params.k_h
    a_mat[2, 2] = -params.c_h
    a_mat[2, 3] -= pib2 * u
    a_mat[2] -= lift_gain * circ

    a_mat[3, 1] = -params.k_alpha
    a_mat[3, 3] = -params.c_alpha
    a_mat[3, 3] -= pib2 * b * (0.5 - a) * u
    a_mat[3] += mom_gain * circ

    # lag dynamics: z_i' = w / b - (u / b) b_i z_i
    a_mat[4] = w_coeffs / b
    a_mat[4, 4] = -u * lags.b1 / b
    a_mat[5] = w_coeffs / b
    a_mat[5, 5] = -u * lags.b2 / b
    return e_mat, a_mat


def section_eigenvalues(params: TypicalSectionParams, lags: LagCoefficients,
                        u: float) -> np.ndarray:
    """Eigenvalues of the coupled section at one speed."""
    e_mat, a_mat = _section_system(params, lags, u)
    return la.eig(la.solve(e_mat, a_mat), right=False)


def flutter_eigen_sweep(params: TypicalSectionParams,
                        speeds, lags: LagCoefficients = LagCoefficients()
                        ) -> FlutterSweep:
    """p-method sweep: eigenvalues per speed and the interpolated onset.

    The flutter speed is the first zero crossing of the largest real part,
    linearly interpolated between sweep points.
    """
    speeds = np.asarray(speeds, dtype=float)
    if np.any(np.diff(speeds) <= 0):
        raise ValueError("speed sweep must be sorted ascending")
    points = []
    for u in speeds:
        eigs = section_eigenvalues(params, lags, u)
        osc = eigs[eigs.imag > 1e-9]
        order = np.argsort(osc.imag)
        osc = osc[order]
        freqs = osc.imag / (2.0 * math.pi)
        damps = -osc.real / np.abs(osc)
        points.append(FlutterPoint(
            speed=float(u), eigenvalues=eigs,
            max_real=float(eigs.real.max()),
            frequencies=freqs, damping=damps,
        ))
    flutter_speed = None
    bracket = None
    for left, right in zip(points, points[1:]):
        if left.max_real < 0.0 <= right.max_real:
            frac = -left.max_real / (right.max_real - left.max_real)
            flutter_speed = left.speed + frac * (right.speed - left.speed)
            bracket = (left.speed, right.speed)
            break
    return FlutterSweep(points=tuple(points), flutter_speed=flutter_speed,
                        bracket=bracket)
