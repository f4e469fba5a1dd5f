"""Sliced inverse regression and sparse variants, with a Monte Carlo harness."""

from .errors import (
    ConfigError,
    DimensionError,
    EstimationError,
    InputError,
    RankError,
    SDRError,
)
from .linalg import orthonormalize, projection_loss, random_orthogonal, sym_eig_topd
from .models import (
    Dataset,
    ModelSpec,
    clipped_g,
    custom_model,
    dtsir_model,
    generate,
    kappa_to_n,
    linear_mu,
    make_dtsir_beta,
    true_lambda,
    two_index_conjecture,
)
from .sir import (
    CondCovEstimate,
    SlicedView,
    SubspaceEstimate,
    estimate_lambda,
    sir,
    sir_subspace,
    slice_data,
    sliced_stability_diagnostic,
    top_eigenvalues,
)
from .sparse import (
    AggregationConfig,
    ThresholdConfig,
    aggregation_estimator,
    calibrated_c1,
    default_threshold,
    dt_sir,
    effective_support_size,
    oracle_estimator,
    weak_lq_radius,
)

__version__ = "0.1.0"
