"""Device geometry to model rates.

The nonlinear coupling uses a uniform chi(2) over a ring of volume
``2 pi R S_R`` with single-photon mode amplitudes ``sqrt(hbar w / (2 eps0 n^2 V))``.
That is an order-of-magnitude reconstruction; the overlap factor ``zeta``
absorbs mode-shape and phase-matching details.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .model import ModeGrid


@dataclass(frozen=True)
class Constants:
    hbar: float = 1.054571817e-34  # J s
    eps0: float = 8.8541878128e-12  # F/m
    c: float = 299792458.0  # m/s


SI = Constants()


@dataclass(frozen=True)
class DeviceGeometry:
    ring_radius: float
    ring_cross_section: float
    chi2: float
    lambda_drive: float
    lambda_signal: float
    lambda_idler: float
    n_drive: float = 1.0
    n_signal: float = 1.0
    n_idler: float = 1.0
    overlap_factor: float = 1.0

    def __post_init__(self):
        for name in ("ring_radius", "ring_cross_section", "lambda_drive", "lambda_signal",
                     "lambda_idler", "n_drive", "n_signal", "n_idler", "overlap_factor"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be positive, got {value}")
        if self.chi2 < 0 or not math.isfinite(self.chi2):
            raise ValidationError(f"chi2 must be >= 0, got {self.chi2}")
        if self.overlap_factor > 1:
            raise ValidationError("overlap_factor must not exceed 1")
        inv_d = 1 / self.lambda_drive
        inv_sum = 1 / self.lambda_signal + 1 / self.lambda_idler
        if abs(inv_d - inv_sum) > 1e-3 * inv_d:
            raise ValidationError(
                "wavelengths violate energy conservation: 1/lambda_drive must equal "
                "1/lambda_signal + 1/lambda_idler within 0.1%"
            )

    @property
    def volume(self) -> float:
        return 2 * math.pi * self.ring_radius * self.ring_cross_section


def estimate_g(geom: DeviceGeometry, constants: Constants = SI) -> float:
    """Single-photon nonlinear coupling rate g (1/s) for a uniform chi(2) ring."""
    w_d, w_1, w_2 = (2 * math.pi * constants.c / lam
                     for lam in (geom.lambda_drive, geom.lambda_signal, geom.lambda_idler))
    index = geom.n_drive * geom.n_signal * geom.n_idler
    field = math.sqrt(constants.hbar * w_d * w_1 * w_2 / (8 * constants.eps0 * geom.volume))
    return geom.overlap_factor * geom.chi2 / index * field


def kappa_from_omega(omega_kd: float, grid: ModeGrid) -> float:
    """Inverse of ``omega_kd_from_kappa``: ``kappa = |Omega|^2 L / (2 v_g)``."""
    if not omega_kd >= 0:
        raise ValidationError(f"omega_kd must be >= 0, got {omega_kd}")
    return omega_kd**2 * grid.L / (2 * grid.v_g)


# Reference device: InGaP thin-film microring.
INGAP_RING = DeviceGeometry(
    ring_radius=5e-6,
    ring_cross_section=100e-9 * 400e-9,
    chi2=220e-12,
    lambda_drive=750e-9,
    lambda_signal=1500e-9,
    lambda_idler=1500e-9,
    n_drive=3.3,
    n_signal=3.1,
    n_idler=3.1,
)
