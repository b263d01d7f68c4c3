"""Minimum-distance approximate Bayesian computation.

Posterior inference for simulator models by comparing the empirical
measure of observed data with that of simulated data under the
Hellinger, Cramer-von Mises or Wasserstein distance.
"""
__version__ = "0.1.0"

from .distances import (
    DistanceContext,
    DistanceKind,
    cvm_distance,
    distance,
    hellinger_distance,
    hellinger_from_densities,
    wasserstein_1d,
)
from .estimators import (
    MdEstimate,
    MdOptimizerConfig,
    PosteriorSummary,
    md_point_estimate,
    posterior_mean_vs_md_gap,
    summarize,
)
from .exceptions import (
    ConfigError,
    DegenerateCloud,
    DegenerateSample,
    DimensionMismatch,
    EmptyCloud,
    GridTooNarrow,
    InvalidParameter,
    IoFailure,
    LengthMismatch,
    MDABCError,
    NoAcceptances,
    OptimizerFailure,
    QOutOfRange,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    MethodSpec,
    SweepReport,
    emit_report,
    load_report,
    run_experiment,
    run_replications,
    run_zeta_sweep,
)
from .measures import (
    Dataset,
    EmpiricalMeasure,
    IntegrationGrid,
    SmoothedDensity,
    ecdf_eval,
    kde_smooth,
    silverman_bandwidth,
    smooth_model_density,
)
from .models import (
    ContaminationSpec,
    ModelSpec,
    ParameterVector,
    PriorSpec,
    generate_observed,
    gk_quantile,
    mixture_cdf,
    mixture_density,
    model_simulate,
    prior_logdensity,
    prior_sample,
)
from .rng import RngStream
from .samplers import ParticleCloud, SmcConfig, rejection_abc, smc_abc, systematic_resample
