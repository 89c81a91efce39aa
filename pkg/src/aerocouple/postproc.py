"""Signal analysis: transfer functions, modal extraction, flutter location.

Modal identification uses the matrix-pencil method, which stays robust on
the short, lightly damped records a flutter sweep produces.  Transfer
functions are single-frequency Fourier coefficient ratios over an integer
number of periods taken after a configurable transient cut.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SignalError

TRANSIENT_FRACTION = 0.2  # default: discard the first 20% of samples


@dataclass(frozen=True)
class TransferFunctionResult:
    magnitude: float
    phase_deg: float           # in (-180, 180]
    ill_conditioned: bool      # input Fourier content below 1e-3 of its RMS
    periods: int


@dataclass(frozen=True)
class Mode:
    frequency_hz: float
    damping: float             # ratio; positive means decaying
    amplitude: float = 1.0     # peak contribution relative to the dominant mode


@dataclass(frozen=True)
class FlutterBoundary:
    speed: float | None
    bracket: tuple[float, float] | None
    trend: str                 # "crossing", "stable in range", "unstable in range"


def _uniform_dt(times: np.ndarray) -> float:
    steps = np.diff(times)
    if len(steps) == 0:
        raise SignalError("history has fewer than two samples")
    dt = steps[0]
    if dt <= 0 or np.abs(steps - dt).max() > 1e-9 * max(abs(dt), 1e-30):
        raise SignalError("history is not uniformly sampled")
    return float(dt)


def transfer_function(times, input_signal, output_signal, frequency: float,
                      transient_fraction: float = TRANSIENT_FRACTION
                      ) -> TransferFunctionResult:
    """Single-frequency transfer function output/input at ``frequency``.

    Both signals must share a uniform time base and retain at least five
    full periods of steady state after the transient cut.
    """
    times = np.asarray(times, dtype=float)
    x = np.asarray(input_signal, dtype=float)
    y = np.asarray(output_signal, dtype=float)
    if not (len(times) == len(x) == len(y)):
        raise SignalError("time base and signals must have equal length")
    dt = _uniform_dt(times)
    if frequency <= 0:
        raise SignalError("excitation frequency must be positive")
    if frequency >= 0.5 / dt:
        raise SignalError(
            f"frequency {frequency} Hz is at or above Nyquist ({0.5 / dt:.6g} Hz)"
        )
    cut = int(len(times) * transient_fraction)
    n_avail = len(times) - cut
    samples_per_period = 1.0 / (frequency * dt)
    periods = int(n_avail / samples_per_period)
    if periods < 5:
        raise SignalError(
            f"only {periods} full periods after the transient cut; need >= 5"
        )
    n_use = int(round(periods * samples_per_period))
    sel = slice(len(times) - n_use, len(times))
    phase = np.exp(-2j * math.pi * frequency * times[sel])
    x_coeff = np.mean(x[sel] * phase)
    y_coeff = np.mean(y[sel] * phase)

    x_rms = math.sqrt(np.mean(x[sel] ** 2))
    ill = abs(x_coeff) < 1e-3 * max(x_rms, np.finfo(float).tiny)
    ratio = y_coeff / x_coeff
    phase_deg = math.degrees(math.atan2(ratio.imag, ratio.real))
    if phase_deg <= -180.0:
        phase_deg += 360.0
    return TransferFunctionResult(
        magnitude=abs(ratio), phase_deg=phase_deg,
        ill_conditioned=bool(ill), periods=periods,
    )


def modal_identification(signal, dt: float, n_expected: int,
                         rank_tol: float = 1e-8,
                         amplitude_tol: float = 1e-3) -> list[Mode]:
    """Matrix-pencil extraction of (frequency, damping) from a free response.

    Returns up to ``n_expected`` oscillatory modes sorted by frequency.
    Poles whose fitted residue contributes less than ``amplitude_tol`` of
    the dominant one are discarded as artifacts, so a record with less
    modal content than requested yields fewer modes (a constant signal
    yields none) with a warning, never a crash.
    """
    y = np.asarray(signal, dtype=float).ravel()
    if dt <= 0:
        raise SignalError("dt must be positive")
    if n_expected < 1:
        raise SignalError("n_expected must be at least 1")
    n = len(y)
    if n < 8 * n_expected:
        raise SignalError("record too short for the requested mode count")

    pencil = n // 3
    rows = n - pencil
    hankel = np.lib.stride_tricks.sliding_window_view(y, pencil + 1)[:rows]

    svals, vh = np.linalg.svd(hankel, full_matrices=False)[1:]
    if svals[0] == 0.0:
        return []
    rank = int(np.sum(svals > rank_tol * svals[0]))
    rank = min(rank, 2 * n_expected)
    if rank == 0:
        return []
    v = vh[:rank].conj().T            # (pencil + 1, rank)
    pencil_matrix = np.linalg.pinv(v[:-1, :]) @ v[1:, :]
    z = np.linalg.eigvals(pencil_matrix)
    z = z[np.abs(z) > 1e-12]
    if len(z) == 0:
        return []

    # residue fit: peak contribution of each pole over the record window
    steps = np.arange(n)
    vander = z[None, :] ** steps[:, None]
    residues = np.linalg.lstsq(vander, y.astype(complex), rcond=None)[0]
    peaks = np.abs(residues) * np.maximum(1.0, np.abs(z) ** (n - 1))
    significant = peaks > amplitude_tol * peaks.max()

    modes = []
    for z_i, keep, peak in zip(z, significant, peaks):
        if not keep:
            continue
        s_i = np.log(complex(z_i)) / dt
        if s_i.imag <= 1e-9:          # keep one of each conjugate pair
            continue
        freq = s_i.imag / (2.0 * math.pi)
        if freq >= 0.5 / dt:
            continue
        zeta = -s_i.real / abs(s_i)
        modes.append(Mode(frequency_hz=float(freq), damping=float(zeta),
                          amplitude=float(peak / peaks.max())))
    modes.sort(key=lambda m: m.frequency_hz)
    if len(modes) > n_expected:
        modes = modes[:n_expected]
    if len(modes) < n_expected:
        warnings.warn(
            f"identified {len(modes)} oscillatory modes, {n_expected} requested",
            stacklevel=2,
        )
    return modes


def flutter_boundary(speeds, dampings) -> FlutterBoundary:
    """Locate the damping zero crossing by linear interpolation.

    ``dampings`` follow the decay-positive convention, so flutter is the
    first crossing from positive to non-positive damping along the sweep.
    """
    speeds = np.asarray(speeds, dtype=float)
    damp = np.asarray(dampings, dtype=float)
    if speeds.shape != damp.shape or speeds.ndim != 1:
        raise SignalError("speeds and dampings must be matching 1-d arrays")
    if len(speeds) < 2:
        raise SignalError("need at least two sweep points")
    if np.any(np.diff(speeds) <= 0):
        raise SignalError("speed sweep must be sorted ascending")

    for i in range(len(speeds) - 1):
        if damp[i] > 0.0 >= damp[i + 1]:
            frac = damp[i] / (damp[i] - damp[i + 1])
            speed = speeds[i] + frac * (speeds[i + 1] - speeds[i])
            return FlutterBoundary(
                speed=float(speed),
                bracket=(float(speeds[i]), float(speeds[i + 1])),
                trend="crossing",
            )
    if np.all(damp > 0.0):
        return FlutterBoundary(speed=None, bracket=None, trend="stable in range")
    if np.all(damp <= 0.0):
        return FlutterBoundary(speed=None, bracket=None, trend="unstable in range")
    return FlutterBoundary(speed=None, bracket=None, trend="no crossing found")
