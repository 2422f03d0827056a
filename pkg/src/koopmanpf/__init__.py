"""Modal participation factors for linear and nonlinear dynamical systems.

Submodules:

* ``numerics``  -- dense linear-algebra wrappers with explicit error types.
* ``lti``       -- classical participation factors and generalized
                   participations of linear systems.
* ``dynsys``    -- vector fields, RK4 integration, the prolonged system,
                   and built-in example systems with closed-form Koopman
                   eigenfunctions and modes.
* ``dmd``       -- Prony-type dynamic mode decomposition.
* ``estimate``  -- data-driven participation estimation and grid sweeps.
* ``cli``       -- command-line interface and CSV/JSON serialization.
"""

from .dmd import DmdSpectrum, prony_dmd
from .dynsys import (
    KoopmanTriple,
    SystemBundle,
    Trajectory,
    VectorField,
    analytic_pf,
    ep_system,
    evaluate_eigenfunction,
    lc_system,
    linear_bundle,
    prolong,
    rk4_integrate,
)
from .estimate import (
    EstimationConfig,
    GridAxis,
    PfEstimate,
    PfGrid,
    estimate_pf,
    grid_sweep,
    match_eigenvalue,
    mean_error,
)
from .lti import (
    ModalBasis,
    ParticipationTensors,
    biorthogonal_eig,
    generalized_participations,
    modal_solution,
    mode_in_state_pf,
    variational_response,
)

__version__ = "0.1.0"

__all__ = [
    "DmdSpectrum",
    "EstimationConfig",
    "GridAxis",
    "KoopmanTriple",
    "ModalBasis",
    "ParticipationTensors",
    "PfEstimate",
    "PfGrid",
    "SystemBundle",
    "Trajectory",
    "VectorField",
    "analytic_pf",
    "biorthogonal_eig",
    "ep_system",
    "estimate_pf",
    "evaluate_eigenfunction",
    "generalized_participations",
    "grid_sweep",
    "lc_system",
    "linear_bundle",
    "match_eigenvalue",
    "mean_error",
    "modal_solution",
    "mode_in_state_pf",
    "prolong",
    "prony_dmd",
    "rk4_integrate",
    "variational_response",
]
