"""Random Fourier features for Gaussian-kernel ridge regression.

Classical and leverage-aware feature sampling, exact and preconditioned
solvers, spectral-approximation diagnostics, risk computations and the
constructions that show where classical sampling falls short.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateProposalError,
    InvalidArgumentError,
    NonConvergenceError,
    NumericalError,
    RegimeError,
    RegimeWarning,
    RffSpecError,
    SupportWarning,
    UnsupportedDimensionError,
)
from .features import (  # noqa: E402
    FeatureMap,
    Proposal,
    build_feature_map,
    classical_feature_map,
    feature_map_from_proposal,
    recommended_sample_size,
    surrogate_gram,
    uniform_box_proposal,
)
from .kernelspace import (  # noqa: E402
    Dataset,
    GaussianKernel,
    KernelModel,
    fourier_density,
    kernel_eval,
    kernel_matrix,
    z_vector,
)
from .leverage import (  # noqa: E402
    envelope_mass,
    improved_envelope,
    leverage_exact,
    leverage_integral,
    lower_certificate,
    statistical_dimension,
    upper_certificate,
)
from .risk import exact_risk, risk_inflation_check, risk_upper_bound, smoother_risk  # noqa: E402
from .sampler import improved_proposal, sample_improved, sampler_state  # noqa: E402
from .solvers import krr_fit, krr_predict, pcg_solve, rff_fit, rff_predict, spectral_delta  # noqa: E402
