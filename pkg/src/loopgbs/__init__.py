"""loopgbs: simulate and validate loop-based time-bin Gaussian boson samplers."""

__version__ = "0.1.0"

from .cert import (
    DeviceCertificate,
    effective_efficiencies,
    load_fixture,
    parse_certificate,
    serialize_certificate,
)
from .compiler import (
    CircuitProgram,
    LoopSpec,
    TransferMatrix,
    compile_unitary,
    connectivity_profile,
    random_program,
    truncate_to_logical,
    uniform_program,
)
from .errors import (
    IngestionError,
    InputError,
    ProgramError,
    ResourceError,
    UnsupportedStateError,
)
from .gaussian import (
    GaussianState,
    InputSpec,
    LossModel,
    apply_loss,
    evolve,
    mean_photons,
    photon_covariance,
    prepare_input,
    vacuum_state,
)
from .hafnian import (
    AdjacencyEncoding,
    build_encoding,
    enumerate_distribution,
    hafnian,
    outcome_probability,
    perfect_matching_count,
    reduce_encoding,
)
from .orbits import (
    FeatureVector,
    OrbitTable,
    feature_vectors,
    orbit_histogram,
    orbit_of,
)
from .pipeline import logical_lossy_matrix, lossy_physical_matrix, output_state
from .samplers import (
    SampleSet,
    empirical_photon_covariance,
    sample_classical,
    sample_distinguishable,
    sample_hypothesis,
    sample_smsv_bruteforce,
)
from .validation import (
    PlaneFit,
    ValidationConfig,
    ValidationReport,
    covariance_distance,
    fit_hyperplane,
    fit_iso_n_lines,
    program_ensemble_feature_points,
    spread_metric,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
