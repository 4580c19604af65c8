"""Breathers and metastable decay in the weakly damped discrete NLS lattice."""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    Observables,
    RealState,
    SystemParams,
    ell2_energy,
    energy_flux,
    hamiltonian,
    site_energies,
    to_physical_frame,
    vector_field,
)
from .breather import (  # noqa: F401
    BreatherProfile,
    SeriesTable,
    breather_series,
    evaluate_series,
    leading_coefficient,
    residual,
    solve_breather,
)
from .spectral import (  # noqa: F401
    Linearization,
    SpectralReport,
    adjoint_frame,
    build_linearization,
    damped_linearization,
    eigenvalues,
    spectral_report,
    spectral_slopes,
    zero_chain,
)
from .dynamics import (  # noqa: F401
    CrossingLog,
    IntegrationConfig,
    Trajectory,
    crossing_ratio_statistic,
    decay_exponent,
    detect_downcrossings,
    initial_condition,
    integrate,
)
from .modulation import (  # noqa: F401
    ModulationPrediction,
    fit_modulation_parameters,
    modulation_prediction,
    predicted_crossing_times,
    predicted_drift,
    predicted_energy_decay,
)
