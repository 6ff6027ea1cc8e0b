"""Toolkit for mutually exciting point processes on a small set of marks.

Covers simulation (cluster expansion, thinning, and an exact sampler for
exponential kernels), penalized likelihood and least-squares estimation,
structure and clustering analysis, residual goodness of fit, and a batch
CLI that emits plot-ready files.
"""

from .core import (
    DiscretizedKernel,
    Event,
    EventSequence,
    ExponentialKernel,
    GaussianBasisKernel,
    HawkesError,
    HawkesModel,
    StabilityWarning,
    UnsupportedKernelError,
    ValidationError,
    branching_matrix,
    compensator,
    intensity,
    intensity_profile,
    kernel_lag_averages,
    log_likelihood,
    spectral_radius,
    window_compensator,
)
from .data import (
    Corpus,
    CsvSchema,
    FormatError,
    ParseError,
    SchemaError,
    load_corpus,
    load_csv,
    load_model,
    save_corpus,
    save_model,
    split_train_test,
    stitch,
    subsample,
    thin_events,
)
from .simulate import (
    SimConfig,
    SimulationOverflowError,
    benchmark_simulators,
    read_benchmark_csv,
    simulate_branch,
    simulate_exact_exp,
    simulate_ogata,
    write_benchmark_csv,
)
from .learn import (
    FitReport,
    LearnConfig,
    Penalty,
    RankDeficiencyError,
    estimation_error,
    exp_nll_and_grad,
    fit_ls,
    fit_mle,
    fit_mle_ode,
)
from .analyze import (
    ClusterResult,
    DistanceParams,
    GrangerGraph,
    TvhpFit,
    TvhpModel,
    cluster_distance,
    cluster_mixture,
    cluster_purity,
    distance_matrix,
    fit_tvhp,
    granger_graph,
    granger_to_dot,
    load_distance_csv,
    load_granger,
    load_granger_dot,
    load_tvhp,
    load_tvhp_csv,
    save_distance_csv,
    save_granger,
    save_granger_dot,
    save_tvhp,
    save_tvhp_csv,
    sequence_distance,
    tvhp_log_likelihood,
    tvhp_variation,
)
from .evaluate import (
    compare_learners,
    heldout_loglik,
    ks_bound,
    read_compare_csv,
    rescaling_test,
    write_compare_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "ClusterResult",
    "CsvSchema",
    "DiscretizedKernel",
    "DistanceParams",
    "Event",
    "EventSequence",
    "ExponentialKernel",
    "FitReport",
    "FormatError",
    "GaussianBasisKernel",
    "GrangerGraph",
    "HawkesError",
    "HawkesModel",
    "LearnConfig",
    "ParseError",
    "Penalty",
    "RankDeficiencyError",
    "SchemaError",
    "SimConfig",
    "SimulationOverflowError",
    "StabilityWarning",
    "TvhpFit",
    "TvhpModel",
    "UnsupportedKernelError",
    "ValidationError",
    "benchmark_simulators",
    "branching_matrix",
    "cluster_distance",
    "cluster_mixture",
    "cluster_purity",
    "compare_learners",
    "compensator",
    "distance_matrix",
    "estimation_error",
    "exp_nll_and_grad",
    "fit_ls",
    "fit_mle",
    "fit_mle_ode",
    "fit_tvhp",
    "granger_graph",
    "granger_to_dot",
    "heldout_loglik",
    "intensity",
    "intensity_profile",
    "kernel_lag_averages",
    "ks_bound",
    "load_corpus",
    "load_csv",
    "load_distance_csv",
    "load_granger",
    "load_granger_dot",
    "load_model",
    "load_tvhp",
    "load_tvhp_csv",
    "log_likelihood",
    "read_benchmark_csv",
    "read_compare_csv",
    "rescaling_test",
    "save_corpus",
    "save_distance_csv",
    "save_granger",
    "save_granger_dot",
    "save_model",
    "save_tvhp",
    "save_tvhp_csv",
    "sequence_distance",
    "simulate_branch",
    "simulate_exact_exp",
    "simulate_ogata",
    "spectral_radius",
    "split_train_test",
    "stitch",
    "subsample",
    "thin_events",
    "tvhp_log_likelihood",
    "tvhp_variation",
    "window_compensator",
    "write_benchmark_csv",
    "write_compare_csv",
]
