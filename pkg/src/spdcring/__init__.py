"""Single-photon driven down-conversion in a waveguide-coupled microring."""

__version__ = "0.1.0"

from .errors import AccuracyError, ResourceError, SpdcError, StiffnessError, ValidationError  # noqa: E402
from .model import (  # noqa: E402
    ModeGrid,
    PhysicalParams,
    Wavepacket,
    build_mode_grid,
    coupling_array,
    gaussian_wavepacket,
    grid_from_count,
    omega_kd_from_kappa,
)
from .dynamics import (  # noqa: E402
    AmplitudeTrajectory,
    AnalyticSolutionParams,
    analytic_c12,
    analytic_c12_sq,
    dominant_frequency,
    integrate_amplitudes,
    quasi_steady_ratio,
    rabi_envelope,
    simulation_grid,
    solution_params,
    vacuum_population,
)
from .flux import (  # noqa: E402
    PAIR_KERNEL_FACTOR,
    DegenerateRidge,
    FluxReport,
    flux_report,
    instantaneous_flux,
    lossless_ratio,
    max_ratio,
    optimal_g,
    optimal_joint,
    optimal_kappa,
    pair_flux,
    steady_flux_ratio,
    waveguide_flux,
)
from .lindblad import (  # noqa: E402
    ComparisonReport,
    build_superoperator,
    check_density,
    compare_with_sse,
    evolve_density,
    initial_density,
    truncated_basis,
)
from .estimate import INGAP_RING, SI, Constants, DeviceGeometry, estimate_g, kappa_from_omega  # noqa: E402
from .sweep import (  # noqa: E402
    NumericOptimum,
    RidgeOptimum,
    SweepAxis,
    SweepResult,
    SweepSpec,
    golden_section_max,
    locate_optimum_numeric,
    run_sweep,
)
