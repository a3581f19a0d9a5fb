"""Biphoton output fluxes and the nonlinear critical-coupling optima.

Everything here is closed-form algebra on :class:`~spdcring.model.PhysicalParams`.
Ratios are signal (``ratio_1``) and idler (``ratio_2``) photon fluxes divided by
the incident single-photon flux in the waveguide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import ModeGrid, PhysicalParams, Wavepacket

# The steady-flux formulas count the two-photon kernel together with its
# complex conjugate, i.e. twice the amplitude population |C_12|^2 produced by
# the amplitude equations. Dynamic populations are scaled by this factor
# before the outcoupling law so dynamic and closed-form ratios share one
# normalization.
PAIR_KERNEL_FACTOR = 2.0


@dataclass(frozen=True)
class FluxReport:
    pi_1: float
    pi_2: float
    pi_wg: float

    @property
    def ratio_1(self) -> float:
        return self.pi_1 / self.pi_wg if self.pi_wg > 0 else 0.0

    @property
    def ratio_2(self) -> float:
        return self.pi_2 / self.pi_wg if self.pi_wg > 0 else 0.0


class DegenerateRidge(ValidationError):
    """Lossless joint optimum: only the product kappa*kappa_1 is fixed."""

    def __init__(self, product: float):
        self.product = product
        super().__init__(
            f"lossless limit has no isolated joint optimum; the maximum lies on "
            f"the ridge kappa*kappa_1 = {product:.6g}"
        )


def instantaneous_flux(c12_sq, kappa_1: float, kappa_2: float):
    """Signal and idler fluxes ``2 kappa_{1,2} |C_12|^2`` (photons/s)."""
    c = np.asarray(c12_sq, dtype=float)
    if np.any(c < 0) or np.any(c > 1 + 1e-9):
        raise ValidationError("c12_sq must lie in [0, 1]")
    if kappa_1 < 0 or kappa_2 < 0:
        raise ValidationError("outcoupling rates must be >= 0")
    if c.ndim == 0:
        return 2 * kappa_1 * float(c), 2 * kappa_2 * float(c)
    return 2 * kappa_1 * c, 2 * kappa_2 * c


def pair_flux(c12_sq, kappa_1: float, kappa_2: float):
    """Fluxes from an amplitude-equation population, in closed-form normalization."""
    c = np.asarray(c12_sq, dtype=float)
    if np.any(c < 0) or np.any(c > 1 + 1e-9):
        raise ValidationError("c12_sq must lie in [0, 1]")
    scaled = PAIR_KERNEL_FACTOR * c
    return 2 * kappa_1 * scaled, 2 * kappa_2 * scaled


def waveguide_flux(grid: ModeGrid, packet: Wavepacket, t):
    """Incident photon flux at the coupling point, ``(v_g/L) |sum_k C_k e^{-i delta_k t}|^2``."""
    t_arr = np.asarray(t, dtype=float)
    amp = np.exp(-1j * np.multiply.outer(t_arr, np.asarray(grid.detunings))) @ packet.amplitudes
    out = grid.v_g / grid.L * np.abs(amp) ** 2
    return float(out) if t_arr.ndim == 0 else out


def _signal_sum(params: PhysicalParams) -> float:
    return params.kappa_1 + params.kappa_2 + params.gamma_1 / 2 + params.gamma_2 / 2


def steady_flux_ratio(params: PhysicalParams) -> tuple[float, float]:
    """Long-pulse quasi-steady ``(Pi_1/Pi_wg, Pi_2/Pi_wg)``.

    At ``delta_12 == 0`` this is
    ``8 kappa_{1,2} kappa g^2 / [(kappa + mu_d/2)(kappa_1 + kappa_2 + gamma_1/2 + gamma_2/2) + g^2]^2``.
    A nonzero mismatch replaces the bracket by ``|kappa_sigma p_12 + g^2|`` with
    ``p_12 = (mu_1 + mu_2)/2 + i delta_12``.
    """
    g2 = params.g**2
    p12 = complex(params.pair_decay, params.delta_12)
    denom = abs(params.kappa_sigma * p12 + g2) ** 2
    if denom == 0:
        return 0.0, 0.0
    common = 8 * params.kappa * g2 / denom
    return common * params.kappa_1, common * params.kappa_2


def flux_report(params: PhysicalParams, pi_wg: float) -> FluxReport:
    r1, r2 = steady_flux_ratio(params)
    return FluxReport(r1 * pi_wg, r2 * pi_wg, pi_wg)


def optimal_g(params: PhysicalParams) -> float:
    """Nonlinear coupling maximizing the signal flux at fixed linear couplings."""
    a = params.kappa_sigma
    b = _signal_sum(params)
    if a <= 0 or b <= 0:
        raise ValidationError("no interior optimum in g: a loss/coupling factor vanishes")
    return math.sqrt(a * b)


def optimal_kappa(params: PhysicalParams) -> float:
    """Drive-mode coupling maximizing the signal flux: ``mu_d/2 + g^2/(signal sum)``.

    For g -> 0 this is the linear critical coupling ``kappa = mu_d/2``.
    """
    b = _signal_sum(params)
    if b <= 0:
        raise ValidationError("kappa_1 + kappa_2 + (gamma_1 + gamma_2)/2 must be positive")
    return params.mu_d / 2 + params.g**2 / b


def optimal_joint(params: PhysicalParams) -> tuple[float, float]:
    """Joint optimum ``(kappa, kappa_1)`` for the degenerate case kappa_1 = kappa_2, gamma_1 = gamma_2.

    ``kappa^2 = mu_d g^2/(2 gamma_1) + mu_d^2/4`` and
    ``kappa_1 = (gamma_1/mu_d) kappa``, i.e.
    ``kappa_1^2 = gamma_1 g^2/(2 mu_d) + gamma_1^2/4``.
    Raises :class:`DegenerateRidge` when either loss vanishes.
    """
    if not math.isclose(params.kappa_1, params.kappa_2, rel_tol=1e-12) or not math.isclose(
        params.gamma_1, params.gamma_2, rel_tol=1e-12
    ):
        raise ValidationError("joint optimum requires kappa_1 == kappa_2 and gamma_1 == gamma_2")
    mu_d, gamma = params.mu_d, params.gamma_1
    g2 = params.g**2
    if mu_d == 0 or gamma == 0:
        raise DegenerateRidge(g2 / 2)
    kappa = math.sqrt(mu_d * g2 / (2 * gamma) + mu_d**2 / 4)
    kappa_1 = math.sqrt(gamma * g2 / (2 * mu_d) + gamma**2 / 4)
    return kappa, kappa_1


def max_ratio(loss_product: float) -> float:
    """Best achievable ``Pi_1/Pi_wg`` given ``mu_d * gamma_1 / g^2``."""
    if not loss_product >= 0:
        raise ValidationError(f"loss product must be >= 0, got {loss_product}")
    return 2 / (math.sqrt(2 + loss_product) + math.sqrt(loss_product)) ** 2


def lossless_ratio(kappa: float, kappa_1: float, g: float) -> float:
    """Symmetric lossless ratio ``8 kappa kappa_1 g^2 / (2 kappa kappa_1 + g^2)^2``."""
    if kappa < 0 or kappa_1 < 0 or g < 0:
        raise ValidationError("inputs must be non-negative")
    prod = kappa * kappa_1
    denom = (2 * prod + g * g) ** 2
    if denom == 0:
        return 0.0
    return 8 * prod * g * g / denom
