import math

import pytest

from spdcring import PhysicalParams

K = 1e9  # reference rate, 1/s
V_G = 7.5e7  # m/s


@pytest.fixture
def lossless():
    """Lossless, symmetric couplings all equal to K."""
    return PhysicalParams(kappa=K, kappa_1=K, kappa_2=K, g=K)


@pytest.fixture
def lossy():
    """Equal absorption: gamma_1 = gamma_2 = mu_d = 2K."""
    return PhysicalParams(kappa=K, kappa_1=K, kappa_2=K, g=K,
                          gamma_1=2 * K, gamma_2=2 * K, mu_d=2 * K)


@pytest.fixture
def equal_loss():
    """gamma_1 = gamma_2 = mu_d = g = K."""
    return PhysicalParams(kappa=K, kappa_1=K, kappa_2=K, g=K,
                          gamma_1=K, gamma_2=K, mu_d=K)


@pytest.fixture
def generic():
    """Asymmetric, lossy, detuned parameter set."""
    return PhysicalParams(kappa=K, kappa_1=0.5 * K, kappa_2=0.7 * K, g=2 * K,
                          gamma_1=0.2 * K, gamma_2=0.1 * K, mu_d=0.3 * K, delta_12=0.1 * K)


def grid_length(spacing):
    """Segment length giving the requested mode spacing at V_G."""
    return 2 * math.pi * V_G / spacing
