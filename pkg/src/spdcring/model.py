"""Physical parameters, waveguide mode grid and single-photon wavepackets.

All frequencies are stored as detunings from the drive cavity mode; the
absolute drive frequency is carried only as a reference value.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ResourceError, ValidationError

DEFAULT_MARGIN = 8.0
DEFAULT_MAX_MODES = 65535

CouplingProfile = Callable[[np.ndarray], np.ndarray]

_RATE_FIELDS = ("kappa", "kappa_1", "kappa_2", "gamma_1", "gamma_2", "mu_d", "g")


def _check_finite(name, value):
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Rates (1/s) and frequencies (rad/s) of the three-mode ring cavity.

    ``mu_d`` is the drive-mode loss that does not go back into the waveguide;
    signal and idler total amplitude decay rates are ``gamma/2 + kappa``.
    """

    kappa: float
    kappa_1: float
    kappa_2: float
    g: float
    gamma_1: float = 0.0
    gamma_2: float = 0.0
    mu_d: float = 0.0
    delta_12: float = 0.0
    omega_d: float = 2.5e15
    g_phase: float = 0.0

    def __post_init__(self):
        for name in _RATE_FIELDS + ("delta_12", "omega_d", "g_phase"):
            value = float(getattr(self, name))
            _check_finite(name, value)
            object.__setattr__(self, name, value)
        for name in _RATE_FIELDS:
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.omega_d <= 0:
            raise ValidationError(f"omega_d must be > 0, got {self.omega_d}")

    @property
    def kappa_sigma(self) -> float:
        """Total amplitude decay rate of the drive mode."""
        return self.mu_d / 2 + self.kappa

    @property
    def mu_1(self) -> float:
        return self.gamma_1 + 2 * self.kappa_1

    @property
    def mu_2(self) -> float:
        return self.gamma_2 + 2 * self.kappa_2

    @property
    def pair_decay(self) -> float:
        """Amplitude decay rate of the signal+idler pair state, (mu_1 + mu_2)/2."""
        return (self.mu_1 + self.mu_2) / 2

    @property
    def g_complex(self) -> complex:
        return self.g * complex(math.cos(self.g_phase), math.sin(self.g_phase))

    @property
    def is_lossless(self) -> bool:
        return self.gamma_1 == 0 and self.gamma_2 == 0 and self.mu_d == 0

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)


def _readonly(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeGrid:
    """Uniformly spaced waveguide modes of a periodic segment of length ``L``.

    ``detunings[i] = omega_k - omega_d``; with linear dispersion the spacing
    is exactly ``2*pi*v_g/L``.
    """

    L: float
    v_g: float
    n_modes: int
    margin: float = DEFAULT_MARGIN
    detunings: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValidationError(f"L must be positive, got {self.L}")
        if not (self.v_g > 0 and math.isfinite(self.v_g)):
            raise ValidationError(f"v_g must be positive, got {self.v_g}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ValidationError(f"n_modes must be a positive integer, got {self.n_modes}")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        offsets = np.arange(self.n_modes) - (self.n_modes - 1) / 2
        object.__setattr__(self, "detunings", _readonly(offsets * self.spacing))

    @property
    def spacing(self) -> float:
        return 2 * math.pi * self.v_g / self.L

    @property
    def span(self) -> float:
        return self.n_modes * self.spacing

    @property
    def revival_time(self) -> float:
        """Round-trip time of the periodic segment; physics is valid before it."""
        return self.L / self.v_g

    @property
    def center(self) -> int:
        return self.n_modes // 2

    def labels(self):
        offsets = np.arange(self.n_modes) - (self.n_modes - 1) / 2
        if self.n_modes % 2:
            return [f"k{int(o):+d}" for o in offsets]
        return [f"k{o:+.1f}" for o in offsets]


def build_mode_grid(
    L: float,
    v_g: float,
    bandwidth: float,
    margin: float = DEFAULT_MARGIN,
    max_modes: int = DEFAULT_MAX_MODES,
) -> ModeGrid:
    """Smallest odd grid whose span covers ``margin * bandwidth``."""
    for name, value in (("L", L), ("v_g", v_g), ("bandwidth", bandwidth)):
        if not (value > 0 and math.isfinite(value)):
            raise ValidationError(f"{name} must be positive, got {value}")
    if margin < 2:
        raise ValidationError(f"margin must be >= 2, got {margin}")
    spacing = 2 * math.pi * v_g / L
    n = max(1, math.ceil(margin * bandwidth / spacing * (1 - 1e-12)))
    if n % 2 == 0:
        n += 1
    if n > max_modes:
        suggested = L * max_modes / n
        raise ResourceError(
            f"grid needs {n} modes (cap {max_modes}); use L <= {suggested:.4g} m "
            f"or a smaller bandwidth/margin"
        )
    return ModeGrid(L=float(L), v_g=float(v_g), n_modes=n, margin=float(margin))


def grid_from_count(L: float, v_g: float, n_modes: int, margin: float = 2.0) -> ModeGrid:
    """Grid with an explicit mode count. Even counts straddle resonance symmetrically."""
    return ModeGrid(L=float(L), v_g=float(v_g), n_modes=n_modes, margin=float(margin))


@dataclass(frozen=True)
class Wavepacket:
    """Initial single-photon spectral amplitudes ``C_k(0)`` on a grid."""

    amplitudes: np.ndarray
    bandwidth: float

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise ValidationError("amplitudes must be one-dimensional")
        if not np.all(np.isfinite(amps)):
            raise ValidationError("amplitudes must be finite")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"wavepacket norm must be 1 within 1e-12, got {norm!r}")
        if not self.bandwidth > 0:
            raise ValidationError(f"bandwidth must be positive, got {self.bandwidth}")
        object.__setattr__(self, "amplitudes", _readonly(amps))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @classmethod
    def from_amplitudes(cls, amplitudes, bandwidth: float) -> "Wavepacket":
        """Normalize an arbitrary amplitude sequence into a single-photon packet."""
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.sqrt(np.sum(np.abs(amps) ** 2))
        if not norm > 0:
            raise ValidationError("amplitudes must not all vanish")
        return cls(amps / norm, bandwidth)

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size


def gaussian_wavepacket(grid: ModeGrid, delta_omega: float, delay: float = 0.0) -> Wavepacket:
    """Gaussian spectrum ``exp(-delta^2 / (2 delta_omega^2))``.

    With ``delay == 0`` the amplitudes are real and positive, i.e. the pulse
    is centred on the coupling point at t = 0. A positive ``delay`` shifts
    the pulse peak to arrive at ``t = delay``.
    """
    if not (delta_omega > 0 and math.isfinite(delta_omega)):
        raise ValidationError(f"delta_omega must be positive, got {delta_omega}")
    if delta_omega > grid.span / grid.margin * (1 + 1e-12):
        raise ValidationError(
            f"pulse bandwidth {delta_omega:.4g} rad/s exceeds grid span/margin "
            f"{grid.span / grid.margin:.4g} rad/s"
        )
    d = grid.detunings
    amps = np.exp(-(d**2) / (2 * delta_omega**2)).astype(complex)
    if delay:
        amps = amps * np.exp(1j * d * delay)
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return Wavepacket(amps, delta_omega)


def omega_kd_from_kappa(grid: ModeGrid, kappa: float) -> float:
    """Resonant waveguide-to-cavity coupling |Omega| = sqrt(2 kappa v_g / L)."""
    if not kappa >= 0:
        raise ValidationError(f"kappa must be >= 0, got {kappa}")
    return math.sqrt(2 * kappa * grid.v_g / grid.L)


def coupling_array(
    grid: ModeGrid, kappa: float, profile: Optional[CouplingProfile] = None
) -> np.ndarray:
    """Per-mode couplings; flat unless a detuning-dependent ``profile`` is given."""
    omega = omega_kd_from_kappa(grid, kappa)
    if profile is None:
        return np.full(grid.n_modes, omega, dtype=complex)
    shape = np.asarray(profile(np.asarray(grid.detunings)), dtype=complex)
    if shape.shape != (grid.n_modes,):
        raise ValidationError("coupling profile must return one value per mode")
    return omega * shape
