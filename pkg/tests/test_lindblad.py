import numpy as np
import pytest

from spdcring import (
    PhysicalParams,
    build_superoperator,
    check_density,
    compare_with_sse,
    evolve_density,
    gaussian_wavepacket,
    grid_from_count,
    initial_density,
    truncated_basis,
)
from spdcring.errors import AccuracyError, ResourceError, ValidationError
from spdcring.lindblad import MAX_ORACLE_MODES

from conftest import K, V_G, grid_length


def _grid(n=8, spacing=0.4 * K):
    return grid_from_count(grid_length(spacing), V_G, n)


def _random_density(dim, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_basis_layout():
    basis = truncated_basis(_grid(4))
    assert basis.dimension == 9
    assert basis.labels[basis.d] == "d"
    assert basis.labels[basis.pair] == "12"
    assert basis.labels[basis.signal_only] == "1_0"
    assert basis.labels[basis.idler_only] == "0_1"
    assert basis.k(0) == 1


def test_superoperator_matrix_matches_action(generic):
    gen = build_superoperator(generic, _grid(6))
    rho = _random_density(gen.basis.dimension)
    direct = gen(rho)
    via_matrix = (gen.matrix() @ rho.ravel()).reshape(rho.shape)
    assert np.max(np.abs(direct - via_matrix)) < 1e-6 * K
    assert abs(np.trace(direct)) < 1e-6
    assert np.max(np.abs(direct - direct.conj().T)) < 1e-6


def test_rabi_oscillation_between_drive_and_pair():
    g = 2 * K
    params = PhysicalParams(kappa=0.0, kappa_1=0.0, kappa_2=0.0, g=g)
    grid = _grid(1)
    gen = build_superoperator(params, grid)
    rho0 = np.zeros((grid.n_modes + 5,) * 2, dtype=complex)
    rho0[gen.basis.d, gen.basis.d] = 1.0
    times, rhos = evolve_density(rho0, gen, 5 / K, 0.05 / K)
    p_d = rhos[:, gen.basis.d, gen.basis.d].real
    p_12 = rhos[:, gen.basis.pair, gen.basis.pair].real
    assert np.max(np.abs(p_d - np.cos(g * times) ** 2)) < 1e-8
    assert np.max(np.abs(p_12 - np.sin(g * times) ** 2)) < 1e-8


def test_drive_loss_empties_into_vacuum():
    mu_d = 0.6 * K
    params = PhysicalParams(kappa=0.0, kappa_1=0.0, kappa_2=0.0, g=0.0, mu_d=mu_d)
    grid = _grid(1)
    gen = build_superoperator(params, grid)
    rho0 = np.zeros((6, 6), dtype=complex)
    rho0[gen.basis.d, gen.basis.d] = 1.0
    times, rhos = evolve_density(rho0, gen, 5 / K, 0.1 / K)
    assert np.max(np.abs(rhos[:, 0, 0].real - (1 - np.exp(-mu_d * times)))) < 1e-8


def test_pair_decay_goes_through_single_photon_states():
    params = PhysicalParams(kappa=0.0, kappa_1=0.3 * K, kappa_2=0.3 * K, g=0.0)
    grid = _grid(1)
    gen = build_superoperator(params, grid)
    rho0 = np.zeros((6, 6), dtype=complex)
    rho0[gen.basis.pair, gen.basis.pair] = 1.0
    times, rhos = evolve_density(rho0, gen, 4 / K, 0.1 / K)
    mu = params.mu_1
    # each photon leaves independently at rate mu
    one_left = rhos[:, gen.basis.signal_only, gen.basis.signal_only].real
    expected = np.exp(-mu * times) * (1 - np.exp(-mu * times))
    assert np.max(np.abs(one_left - expected)) < 1e-8


def test_density_stays_physical(generic):
    grid = _grid(8)
    packet = gaussian_wavepacket(grid, 0.8 * K)
    gen = build_superoperator(generic, grid)
    rho0 = initial_density(grid, packet)
    check_density(rho0)
    times, rhos = evolve_density(rho0, gen, 10 / K, 0.5 / K)
    drift = np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - 1))
    assert drift <= 1e-9
    for rho in rhos:
        check_density(rho)


def test_check_density_rejects_bad_states():
    with pytest.raises(ValidationError):
        check_density(np.eye(2))
    with pytest.raises(ValidationError):
        check_density(np.array([[1.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValidationError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(ValidationError):
        check_density(np.ones(3))


def test_evolve_rejects_bad_times(generic):
    gen = build_superoperator(generic, _grid(2))
    with pytest.raises(ValidationError):
        evolve_density(np.eye(7) / 7, gen, 0.0, 1.0)


def test_trace_drift_detected(generic):
    gen = build_superoperator(generic, _grid(2))

    def leaky(rho):
        return gen(rho) - 0.01 * K * rho

    with pytest.raises(AccuracyError):
        evolve_density(initial_density(_grid(2), gaussian_wavepacket(_grid(2), 0.2 * K)),
                       leaky, 5 / K, 0.5 / K)


def test_oracle_size_cap(generic):
    with pytest.raises(ResourceError):
        build_superoperator(generic, _grid(MAX_ORACLE_MODES + 1))


@pytest.mark.parametrize("g", [0.2 * K, 5 * K])
def test_amplitudes_match_master_equation(generic, g):
    params = generic.replace(g=g)
    grid = _grid(12)
    packet = gaussian_wavepacket(grid, 1.0 * K)
    report = compare_with_sse(params, grid, packet, 8 / K, 0.1 / K)
    assert report.max_discrepancy <= 1e-6
    assert len(report.labels) == 12 + 3
    rows = list(report.rows())
    assert len(rows) == report.times.size * len(report.labels)


def test_wrong_rate_mapping_is_caught(generic):
    grid = _grid(12)
    packet = gaussian_wavepacket(grid, 1.0 * K)
    report = compare_with_sse(generic, grid, packet, 8 / K, 0.1 / K,
                              oracle_params=generic.replace(kappa_1=0.0))
    label, t, diff = report.worst
    assert diff > 1e-3
    assert label in report.labels
