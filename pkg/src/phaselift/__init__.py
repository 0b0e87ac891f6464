"""Phase retrieval from quadratic measurements via PSD-constrained l1 fitting.

Recover a signal x0 from b_i = |<a_i, x0>|^2 by lifting to the rank-1 matrix
X0 = x0 x0* and minimizing the l1 data misfit over the PSD cone. Includes
dual-certificate construction/verification for the lifted problem and a
Monte Carlo harness for transition, universality, stability, injectivity,
and certificate-quality experiments.
"""

from .certificate import (
    Certificate,
    CertificateDiagnostics,
    CertificateReport,
    TangentSpace,
    build_certificate,
    certificate_diagnostics,
    project_T,
    project_Tperp,
    tangent_space,
    truncation_constants,
    verify_certificate,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    run_cert_sweep,
    run_experiment,
    run_stability,
    run_transition,
    run_universality,
    verify_injectivity,
)
from .linalg import (
    eig_sym,
    norms,
    phase_distance,
    project_psd,
    rank1_extract,
    symmetrize,
)
from .measurement import (
    MODELS,
    NOISE_KINDS,
    MeasurementEnsemble,
    NoiseSpec,
    Observations,
    add_noise,
    apply_A,
    apply_At,
    measure,
    random_signal,
    sample_ensemble,
)
from .serialize import load_problem, save_problem
from .solver import (
    SolverOptions,
    SolverResult,
    estimate_opnorm,
    estimate_signal,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CertificateDiagnostics",
    "CertificateReport",
    "ExperimentConfig",
    "MODELS",
    "MeasurementEnsemble",
    "NOISE_KINDS",
    "NoiseSpec",
    "Observations",
    "ResultTable",
    "SolverOptions",
    "SolverResult",
    "TangentSpace",
    "add_noise",
    "apply_A",
    "apply_At",
    "build_certificate",
    "certificate_diagnostics",
    "eig_sym",
    "estimate_opnorm",
    "estimate_signal",
    "load_problem",
    "measure",
    "norms",
    "phase_distance",
    "project_T",
    "project_Tperp",
    "project_psd",
    "rank1_extract",
    "random_signal",
    "run_cert_sweep",
    "run_experiment",
    "run_stability",
    "run_transition",
    "run_universality",
    "sample_ensemble",
    "save_problem",
    "solve",
    "symmetrize",
    "tangent_space",
    "truncation_constants",
    "verify_certificate",
    "verify_injectivity",
]
