"""Two-size hard-sphere depletion toolkit.

Simulates reflected Brownian dynamics of hard spheres in a bath of smaller
ideal-gas particles, evaluates the induced depletion interaction in closed
form, samples the equilibrium measures, and anneals the bath activity to
recover contact-number-maximizing sphere packings.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .core import (
    Configuration,
    ContactGraph,
    ModelParams,
    contact_graph,
    contact_number,
    is_admissible,
    known_contact_values_3d,
    max_contact_number_2d,
)
from .geometry import (
    EnergyModel,
    OverlapPotential,
    asymptotic_minimal_energy,
    energy_gradient,
    energy_pairwise,
    minimal_energy,
    monte_carlo_union_volume,
    overlap_closed_2d,
    overlap_closed_3d,
    overlap_derivative,
    overlap_quadrature,
    rho_thresholds,
    three_body_2d,
    v_unit_ball,
)
from .potentials import PotentialSpec, psi_value_and_grad
from .dynamics import (
    IntegratorState,
    SimulationError,
    TrajectoryRecord,
    default_dt,
    resolve_constraints,
    simulate,
    step_depletion,
    step_two_type,
)
from .sampling import (
    AnnealSchedule,
    MCMCParams,
    anneal_packing,
    concentration_estimate,
    sample_bath_given_spheres,
    sample_hard_spheres,
    sample_two_type,
)
from .analysis import (
    Histogram,
    effective_sample_size,
    energy_trace,
    ks_statistic,
    modulus_of_continuity,
    pair_distance_histogram,
)
