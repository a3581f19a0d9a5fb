"""Density-matrix oracle for the amplitude dynamics.

Evolves the full zero-temperature master equation on the smallest basis that
is closed under the Hamiltonian and all jump operators starting from one
waveguide photon:

    |vac>, |1_k> (one per grid mode), |1_d>, |1_1 1_2>, |1_1 0_2>, |0_1 1_2>

The drive mode loses ``mu_d`` through a jump operator while its coupling to
the waveguide stays Hamiltonian; signal and idler lose ``mu_{1,2} =
gamma_{1,2} + 2 kappa_{1,2}`` through jumps. Waveguide modes are lossless.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import integrate
from .dynamics import AmplitudeTrajectory, integrate_amplitudes
from .errors import AccuracyError, ResourceError, ValidationError
from .model import CouplingProfile, ModeGrid, PhysicalParams, Wavepacket, coupling_array

MAX_ORACLE_MODES = 512


@dataclass(frozen=True)
class TruncatedBasis:
    n_modes: int
    labels: tuple = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.n_modes + 5

    @property
    def vac(self) -> int:
        return 0

    def k(self, i: int) -> int:
        return 1 + i

    @property
    def d(self) -> int:
        return self.n_modes + 1

    @property
    def pair(self) -> int:
        return self.n_modes + 2

    @property
    def signal_only(self) -> int:
        return self.n_modes + 3

    @property
    def idler_only(self) -> int:
        return self.n_modes + 4


def truncated_basis(grid: ModeGrid) -> TruncatedBasis:
    labels = ("vac",) + tuple(grid.labels()) + ("d", "12", "1_0", "0_1")
    return TruncatedBasis(grid.n_modes, labels)


@dataclass
class LindbladGenerator:
    """``rho -> -i[H, rho] + sum_j rate_j (L_j rho L_j^+ - {L_j^+ L_j, rho}/2)``."""

    basis: TruncatedBasis
    hamiltonian: np.ndarray
    jumps: list  # (label, rate, operator)

    def __post_init__(self):
        h_eff = self.hamiltonian.astype(complex).copy()
        for _, rate, op in self.jumps:
            h_eff -= 0.5j * rate * (op.conj().T @ op)
        self._h_eff = h_eff
        self._h_eff_dag = h_eff.conj().T
        self._terms = [(rate, op, op.conj().T) for _, rate, op in self.jumps if rate > 0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self._h_eff @ rho - rho @ self._h_eff_dag)
        for rate, op, op_dag in self._terms:
            out += rate * (op @ rho @ op_dag)
        return out

    def matrix(self) -> np.ndarray:
        """Dense superoperator acting on row-major ``vec(rho)``."""
        dim = self.basis.dimension
        eye = np.eye(dim)
        sup = -1j * (np.kron(self._h_eff, eye) - np.kron(eye, self._h_eff_dag.T))
        for rate, op, op_dag in self._terms:
            sup += rate * np.kron(op, op_dag.T)
        return sup


def build_superoperator(
    params: PhysicalParams,
    grid: ModeGrid,
    coupling_profile: Optional[CouplingProfile] = None,
) -> LindbladGenerator:
    """Generator in the frame rotating at the drive frequency (hbar = 1)."""
    if grid.n_modes > MAX_ORACLE_MODES:
        raise ResourceError(
            f"dense oracle limited to {MAX_ORACLE_MODES} modes, grid has {grid.n_modes}"
        )
    basis = truncated_basis(grid)
    dim = basis.dimension
    n = grid.n_modes
    h = np.zeros((dim, dim), dtype=complex)
    ks = np.arange(1, n + 1)
    h[ks, ks] = grid.detunings
    h[basis.pair, basis.pair] = params.delta_12
    omega = coupling_array(grid, params.kappa, coupling_profile)
    h[basis.d, ks] = -omega
    h[ks, basis.d] = -omega.conj()
    g = params.g_complex
    h[basis.d, basis.pair] = -np.conj(g)
    h[basis.pair, basis.d] = -g

    def op(*pairs):
        m = np.zeros((dim, dim))
        for dst, src in pairs:
            m[dst, src] = 1.0
        return m

    jumps = [
        ("c_d", params.mu_d, op((basis.vac, basis.d))),
        ("c_1", params.mu_1, op((basis.idler_only, basis.pair), (basis.vac, basis.signal_only))),
        ("c_2", params.mu_2, op((basis.signal_only, basis.pair), (basis.vac, basis.idler_only))),
    ]
    return LindbladGenerator(basis, h, jumps)


def initial_density(grid: ModeGrid, packet: Wavepacket) -> np.ndarray:
    psi = np.zeros(grid.n_modes + 5, dtype=complex)
    psi[1 : grid.n_modes + 1] = packet.amplitudes
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Raise unless ``rho`` is Hermitian, unit-trace and positive semidefinite."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValidationError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValidationError(f"trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValidationError("density matrix has negative eigenvalues")


def _hermitize(rho):
    return 0.5 * (rho + rho.conj().T)


def evolve_density(
    rho0: np.ndarray,
    generator,
    t_final: float,
    dt: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-13,
):
    """Sample ``rho(t)`` every ``dt`` up to ``t_final``. Returns ``(times, rhos)``."""
    if not t_final > 0 or not dt > 0:
        raise ValidationError("t_final and dt must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    n_out = int(np.floor(t_final / dt + 1e-9)) + 1
    times = np.arange(n_out) * dt
    if times[-1] < t_final * (1 - 1e-12):
        times = np.append(times, t_final)
    sol = integrate.solve(
        lambda t, r: generator(r), rho0, times, rtol=rtol, atol=atol,
        first_step=min(dt, t_final), project=_hermitize,
    )
    rhos = sol.y
    drift = np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - np.trace(rho0)))
    if drift > 1e-6:
        raise AccuracyError(f"trace drifted by {drift:.3g}")
    return times, rhos


@dataclass
class ComparisonReport:
    times: np.ndarray
    labels: list
    sse: np.ndarray  # (n_times, n_labels)
    lindblad: np.ndarray

    @property
    def abs_diff(self) -> np.ndarray:
        return np.abs(self.sse - self.lindblad)

    @property
    def max_discrepancy(self) -> float:
        return float(self.abs_diff.max())

    @property
    def worst(self) -> tuple:
        """(label, time, discrepancy) of the largest mismatch."""
        i, j = np.unravel_index(np.argmax(self.abs_diff), self.abs_diff.shape)
        return self.labels[j], float(self.times[i]), float(self.abs_diff[i, j])

    def rows(self):
        diff = self.abs_diff
        for i, t in enumerate(self.times):
            for j, label in enumerate(self.labels):
                yield t, label, self.sse[i, j], self.lindblad[i, j], diff[i, j]


def sse_populations(traj: AmplitudeTrajectory):
    return np.column_stack(
        [np.abs(traj.c_k) ** 2, np.abs(traj.c_d) ** 2, np.abs(traj.c_12) ** 2, traj.vacuum_pop]
    )


def lindblad_populations(rhos: np.ndarray, basis: TruncatedBasis):
    pops = np.real(np.diagonal(rhos, axis1=1, axis2=2))
    n = basis.n_modes
    vac = pops[:, basis.vac] + pops[:, basis.signal_only] + pops[:, basis.idler_only]
    return np.column_stack([pops[:, 1 : n + 1], pops[:, basis.d], pops[:, basis.pair], vac])


def compare_with_sse(
    params: PhysicalParams,
    grid: ModeGrid,
    packet: Wavepacket,
    t_final: float,
    dt: float,
    *,
    oracle_params: Optional[PhysicalParams] = None,
    rtol: float = 1e-10,
) -> ComparisonReport:
    """Populations from the amplitude equations and from the master equation.

    ``oracle_params`` lets the master equation run with a different parameter
    set (used to check that the comparison detects a wrong rate mapping).
    """
    traj = integrate_amplitudes(params, grid, packet, t_final, dt, rtol=rtol, frame="common")
    gen = build_superoperator(oracle_params or params, grid)
    _, rhos = evolve_density(initial_density(grid, packet), gen, t_final, dt, rtol=rtol)
    labels = list(grid.labels()) + ["d", "12", "vac+jumps"]
    return ComparisonReport(traj.times, labels, sse_populations(traj),
                            lindblad_populations(rhos, gen.basis))
