"""No-jump amplitude dynamics of a single drive photon and its closed form.

At zero reservoir temperature the stochastic Schroedinger equation only feeds
the vacuum amplitude through its noise term, so the excited amplitudes obey a
closed linear system: waveguide modes ``c_k``, drive mode ``c_d`` and the
signal+idler pair ``c_12``. The vacuum population is recovered from the norm
deficit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import integrate
from .errors import AccuracyError, ValidationError
from .flux import pair_flux, waveguide_flux
from .model import (
    CouplingProfile,
    ModeGrid,
    PhysicalParams,
    Wavepacket,
    build_mode_grid,
    coupling_array,
    omega_kd_from_kappa,
)

FRAMES = ("mode", "common")


@dataclass
class AmplitudeTrajectory:
    """Amplitudes in per-amplitude rotating frames (each at its own frequency).

    ``c_k`` is ``None`` when mode amplitudes were not kept; ``waveguide_pop``
    always holds ``sum_k |c_k|^2``.
    """

    times: np.ndarray
    c_d: np.ndarray
    c_12: np.ndarray
    waveguide_pop: np.ndarray
    vacuum_pop: np.ndarray
    c_k: Optional[np.ndarray] = None
    labels: Optional[list] = None


@dataclass(frozen=True)
class AnalyticSolutionParams:
    kappa_sigma: complex
    p_12: complex
    theta: complex
    g: complex

    @property
    def determinant(self) -> complex:
        return self.kappa_sigma * self.p_12 + abs(self.g) ** 2


def solution_params(params: PhysicalParams, theta_branch: int = 1) -> AnalyticSolutionParams:
    """kappa_sigma, p_12 and theta; ``theta_branch=-1`` picks the other root."""
    ks = complex(params.kappa_sigma)
    p12 = complex(params.pair_decay, params.delta_12)
    theta = np.sqrt(((ks - p12) / 2) ** 2 - abs(params.g) ** 2 + 0j)
    return AnalyticSolutionParams(ks, p12, theta_branch * complex(theta), params.g_complex)


def _sinhc(theta, t):
    """sinh(theta t)/theta with the theta -> 0 limit handled."""
    x = theta * t
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, theta)
    out = np.where(small, t * (1 + x * x / 6 + x**4 / 120), np.sinh(x) / safe)
    return out


def rabi_envelope(t, p: AnalyticSolutionParams):
    """Rabi envelope U(t) in the frame rotating at the drive frequency.

    U(0) = 1 and U'(0) = 0, so the biphoton amplitude leaves zero with zero
    slope as the drive mode starts empty.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    half = (p.kappa_sigma + p.p_12) / 2
    return np.exp(-half * t) * (np.cosh(p.theta * t) + half * _sinhc(p.theta, t))


def _propagator(t, p: AnalyticSolutionParams):
    """Entries (1,1) and (2,1) of exp(M t) for the drive/pair 2x2 block."""
    half = (p.kappa_sigma + p.p_12) / 2
    env = np.exp(-half * t)
    s = _sinhc(p.theta, t)
    e11 = env * (np.cosh(p.theta * t) + (p.p_12 - p.kappa_sigma) / 2 * s)
    e21 = env * 1j * p.g * s
    return e11, e21


def analytic_c12(t, params: PhysicalParams, grid: ModeGrid, packet: Wavepacket,
                 method: str = "resolvent"):
    """Closed-form pair amplitude in the frame rotating at the drive frequency.

    The waveguide enters through the Markov limit of the mode sum (drive mode
    decays at kappa_sigma). ``"resolvent"`` keeps each mode's own detuning in
    the drive/pair response; ``"kernel"`` uses the resonant response for
    every mode, which is the narrowband form ``(Omega g / D)(U(t) A(0) - A(t))``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    p = solution_params(params)
    omega = omega_kd_from_kappa(grid, params.kappa)
    c0 = packet.amplitudes
    delta = np.asarray(grid.detunings)
    if method == "kernel":
        u = rabi_envelope(t, p)
        a_t = np.exp(-1j * np.outer(t, delta)) @ c0
        return omega * p.g / p.determinant * (u * c0.sum() - a_t)
    if method != "resolvent":
        raise ValidationError(f"unknown method {method!r}")
    e11, e21 = _propagator(t, p)
    det_k = (p.kappa_sigma - 1j * delta) * (p.p_12 - 1j * delta) + abs(p.g) ** 2
    phase = np.exp(-1j * np.outer(t, delta))
    # row 2 of (M + i delta)^-1 applied to (exp(Mt) - exp(-i delta t)) e_1
    num = (-1j * p.g) * (e11[:, None] - phase) + (-p.kappa_sigma + 1j * delta) * e21[:, None]
    return 1j * omega * (num / det_k) @ c0


def analytic_c12_sq(t, params: PhysicalParams, grid: ModeGrid, packet: Wavepacket,
                    method: str = "resolvent"):
    """Biphoton population |C_12(t)|^2 from the closed-form solution.

    ``method``:
      * ``"resolvent"`` (default): exact in the Markov limit for any pulse width.
      * ``"factorized"``: narrowband kernel, O(n) per time via
        ``sum_k sum_q C_k C_q* f(k) h(q) = (sum_k C_k f)(sum_q C_q h)*``.
      * ``"double_sum"``: the same kernel summed over all mode pairs, O(n^2).
    """
    scalar = np.ndim(t) == 0
    if method == "double_sum":
        out = _double_sum(np.atleast_1d(np.asarray(t, dtype=float)), params, grid, packet)
    else:
        kind = "kernel" if method == "factorized" else method
        out = np.abs(analytic_c12(t, params, grid, packet, method=kind)) ** 2
    return float(out[0]) if scalar else out


def _double_sum(t, params, grid, packet):
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    p = solution_params(params)
    omega = omega_kd_from_kappa(grid, params.kappa)
    prefactor = abs(p.g) ** 2 * omega**2 / abs(p.determinant) ** 2
    c = packet.amplitudes
    weights = np.outer(c, c.conj())
    delta = np.asarray(grid.detunings)
    out = np.empty(t.size)
    for i, (ti, ui) in enumerate(zip(t, rabi_envelope(t, p))):
        ek = np.exp(-1j * delta * ti)
        kernel = (
            np.outer(ek, ek.conj())
            - np.outer(ek, np.ones_like(ek)) * np.conj(ui)
            - np.outer(np.ones_like(ek), ek.conj()) * ui
            + abs(ui) ** 2
        )
        out[i] = prefactor * np.sum(weights * kernel).real
    return out


def integrate_amplitudes(
    params: PhysicalParams,
    grid: ModeGrid,
    packet: Optional[Wavepacket],
    t_final: float,
    dt_hint: float,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-13,
    frame: str = "mode",
    coupling_profile: Optional[CouplingProfile] = None,
    c_d0: complex = 0.0,
    c_12_0: complex = 0.0,
    keep_modes: bool = True,
) -> AmplitudeTrajectory:
    """Integrate the amplitude equations from t = 0 to ``t_final``.

    ``dt_hint`` is the output sampling interval and the initial step; the
    adaptive integrator picks its own internal steps. ``frame="common"``
    integrates every amplitude in the frame rotating at the drive frequency
    (constant coefficients); results are always returned in the per-amplitude
    rotating frames. ``packet=None`` starts with an empty waveguide, which
    together with ``c_d0``/``c_12_0`` allows cavity-only initial states.
    """
    if not t_final > 0:
        raise ValidationError(f"t_final must be positive, got {t_final}")
    if not dt_hint > 0:
        raise ValidationError(f"dt_hint must be positive, got {dt_hint}")
    if frame not in FRAMES:
        raise ValidationError(f"frame must be one of {FRAMES}, got {frame!r}")
    n = grid.n_modes
    if packet is None:
        ck0 = np.zeros(n, dtype=complex)
    else:
        if packet.n_modes != n:
            raise ValidationError("wavepacket and grid mode counts differ")
        ck0 = np.array(packet.amplitudes, dtype=complex)
    y0 = np.concatenate([ck0, [c_d0, c_12_0]]).astype(complex)
    if np.sum(np.abs(y0) ** 2) > 1 + 1e-12:
        raise ValidationError("initial state norm exceeds 1")
    if t_final > grid.revival_time:
        warnings.warn(
            f"t_final={t_final:.3g} s exceeds the segment round trip "
            f"{grid.revival_time:.3g} s; emitted light re-enters the cavity",
            RuntimeWarning,
            stacklevel=2,
        )

    omega = coupling_array(grid, params.kappa, coupling_profile)
    omega_c = omega.conj()
    delta = np.asarray(grid.detunings)
    half_mu_d = params.mu_d / 2
    pair = params.pair_decay
    d12 = params.delta_12
    g = params.g_complex
    gc = np.conj(g)

    if frame == "mode":
        def rhs(t, y):
            ck, cd, c12 = y[:n], y[n], y[n + 1]
            ph = np.exp(1j * delta * t)
            ph12 = complex(math.cos(d12 * t), math.sin(d12 * t))
            out = np.empty_like(y)
            out[:n] = 1j * omega_c * cd * ph
            out[n] = -half_mu_d * cd + 1j * gc * c12 / ph12 + 1j * np.dot(omega * ph.conj(), ck)
            out[n + 1] = -pair * c12 + 1j * g * cd * ph12
            return out
    else:
        def rhs(t, y):
            ck, cd, c12 = y[:n], y[n], y[n + 1]
            out = np.empty_like(y)
            out[:n] = -1j * delta * ck + 1j * omega_c * cd
            out[n] = -half_mu_d * cd + 1j * gc * c12 + 1j * np.dot(omega, ck)
            out[n + 1] = -(pair + 1j * d12) * c12 + 1j * g * cd
            return out

    n_out = int(math.floor(t_final / dt_hint + 1e-9)) + 1
    times = np.arange(n_out) * dt_hint
    if times[-1] < t_final * (1 - 1e-12):
        times = np.append(times, t_final)
    if keep_modes:
        reduce = None
    else:
        def reduce(t, y):
            ck = y[:n]
            return np.array([np.vdot(ck, ck), y[n], y[n + 1]])
    sol = integrate.solve(rhs, y0, times, rtol=rtol, atol=atol, first_step=min(dt_hint, t_final),
                          reduce=reduce)
    y = sol.y
    if keep_modes:
        c_k = y[:, :n]
        if frame == "common":
            c_k = c_k * np.exp(1j * np.outer(times, delta))
        wg = np.sum(np.abs(c_k) ** 2, axis=1)
        c_d, c_12 = y[:, n], y[:, n + 1]
    else:
        c_k = None
        wg, c_d, c_12 = y[:, 0].real, y[:, 1], y[:, 2]
    if frame == "common":
        c_12 = c_12 * np.exp(1j * d12 * times)
    traj = AmplitudeTrajectory(
        times=times,
        c_d=c_d.copy(),
        c_12=c_12.copy(),
        waveguide_pop=wg,
        vacuum_pop=np.zeros_like(wg),
        c_k=c_k.copy() if keep_modes else None,
        labels=grid.labels() if keep_modes else None,
    )
    traj.vacuum_pop = vacuum_population(traj)
    return traj


def vacuum_population(traj: AmplitudeTrajectory) -> np.ndarray:
    """Norm deficit ``1 - sum|c|^2``; small negative rounding is clamped to 0."""
    deficit = 1.0 - traj.waveguide_pop - np.abs(traj.c_d) ** 2 - np.abs(traj.c_12) ** 2
    worst = float(deficit.min()) if deficit.size else 0.0
    if worst < -1e-6:
        raise AccuracyError(
            f"norm exceeds 1 by {-worst:.3g} at t={traj.times[int(deficit.argmin())]:.6g}; "
            "tighten the integrator tolerance"
        )
    if worst < -1e-8:
        warnings.warn(f"vacuum population dips to {worst:.3g}; clamped at 0", RuntimeWarning,
                      stacklevel=2)
    return np.maximum(deficit, 0.0)


def simulation_grid(
    params: PhysicalParams,
    delta_omega: float,
    *,
    v_g: float = 7.5e7,
    t_window: Optional[float] = None,
    reservoir: float = 5.0,
    spacing_fraction: float = 1.0,
    max_modes: int = 65535,
) -> ModeGrid:
    """Grid that resolves the pulse and acts as a Markovian output reservoir.

    The spacing is ``spacing_fraction * delta_omega`` (tightened so that the
    round trip exceeds ``2 * t_window`` when given) and the grid half-width is
    ``reservoir`` times the fastest cavity rate.
    """
    spacing = spacing_fraction * delta_omega
    if t_window is not None:
        spacing = min(spacing, math.pi / t_window)
    L = 2 * math.pi * v_g / spacing
    rate = params.kappa_sigma + params.pair_decay + params.g + abs(params.delta_12)
    half_width = max(reservoir * rate, 4 * delta_omega)
    return build_mode_grid(L, v_g, half_width, margin=2.0, max_modes=max_modes)


@dataclass
class SteadyRatio:
    ratio_1: float
    ratio_2: float
    spread: float
    window: tuple
    settled: bool


def settle_time(params: PhysicalParams, level: float = 1e-3) -> float:
    """Time for the slowest drive/pair transient to decay by ``level``."""
    p = solution_params(params)
    rate = ((p.kappa_sigma + p.p_12) / 2).real - abs(p.theta.real)
    if rate <= 0:
        return math.inf
    return -math.log(level) / rate


def quasi_steady_ratio(
    traj: AmplitudeTrajectory,
    params: PhysicalParams,
    grid: ModeGrid,
    packet: Wavepacket,
) -> SteadyRatio:
    """Average of Pi_1/Pi_wg over the settled part of the central half of the pulse.

    The pulse peaks at t = 0 for real amplitudes; the window runs from the
    cavity settle time to the half-energy point of the trailing edge.
    """
    t = traj.times
    t_half = 0.4769362762044699 / packet.bandwidth  # erf(x) = 1/2
    t0 = settle_time(params)
    settled = t0 < t_half
    lo = t0 if settled else 0.5 * t_half
    mask = (t >= lo) & (t <= t_half)
    if mask.sum() < 3:
        raise ValidationError("trajectory does not sample the quasi-steady window")
    pi_wg = waveguide_flux(grid, packet, t[mask])
    pi_1, pi_2 = pair_flux(np.abs(traj.c_12[mask]) ** 2, params.kappa_1, params.kappa_2)
    r1 = pi_1 / pi_wg
    r2 = pi_2 / pi_wg
    mean1 = float(np.mean(r1))
    spread = float(np.std(r1) / mean1) if mean1 > 0 else 0.0
    if not settled:
        warnings.warn(
            f"pulse too short for a quasi-steady window (settle {t0:.3g} s vs "
            f"half-width {t_half:.3g} s); relative spread {spread:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return SteadyRatio(mean1, float(np.mean(r2)), spread, (lo, t_half), settled)


def dominant_frequency(times, values) -> float:
    """Angular frequency of the strongest oscillation in a uniformly sampled signal.

    The signal is differentiated first so slowly decaying backgrounds do not
    swamp the spectral peak. No taper is applied: transients carry their
    weight at the start of the record. The zero-padded peak is refined by
    parabolic interpolation.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-6, atol=0):
        raise ValidationError("samples must be uniformly spaced")
    y = np.gradient(values, dt)
    y = y - y.mean()
    n_fft = 16 * int(2 ** math.ceil(math.log2(y.size)))
    spec = np.abs(np.fft.rfft(y, n_fft))
    spec[0] = 0.0
    i = int(np.argmax(spec))
    shift = 0.0
    if 0 < i < spec.size - 1:
        a, b, c = spec[i - 1], spec[i], spec[i + 1]
        denom = a - 2 * b + c
        if denom != 0:
            shift = 0.5 * (a - c) / denom
    return 2 * math.pi * (i + shift) / (n_fft * dt)
