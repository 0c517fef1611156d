"""Conditional dynamics of two atomic ensembles entangled by photodetection.

Monte Carlo wave-function simulation on the Dicke product grid of two
collective spins probed through a Mach-Zehnder interferometer, with
spontaneous scattering resolved by a surrounding spherical detector.
Tracks entanglement entropy, spin variance, and the overlap with the
maximally entangled state per trajectory and across seeded ensembles.
"""

from .collective_spin import (
    JointState,
    SampleSpec,
    apply_counter_rotation,
    binomial_initial_state,
    fidelity,
    jx_matrix,
    mean_and_variance_jz_sum,
    norm,
    normalize,
    occupancy_weights,
    wigner_rotation,
)
from .config import RunConfig, parse_config
from .entanglement import (
    MetricsSnapshot,
    compute_snapshot,
    entropy_of_entanglement,
    maximally_entangled_state,
    overlap_psi0,
)
from .errors import (
    ConfigError,
    DegenerateBranchError,
    NumericsError,
    ParameterRegimeError,
    SimulationError,
    UnsupportedSizeError,
)
from .numerics import SymTridiag, eig_sym_tridiag, singular_values
from .photon_channel import (
    BranchOutcome,
    Channel,
    ClampMode,
    ClampPolicy,
    PhysicalParams,
    apply_detection_minus,
    apply_detection_plus,
    apply_scatter,
    branch_probabilities,
    detection_step,
    sample_scatter_direction,
)
from .trajectory import (
    EnsembleStats,
    Protocol,
    ProtocolKind,
    TrajectoryRecord,
    child_seed,
    rng_stream,
    run_ensemble,
    run_trajectory,
)

__version__ = "0.1.0"
