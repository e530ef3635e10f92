"""Confidence-aware Gaussian-process preference learning."""

from .acquisition import (
    AcquisitionConfig,
    StoppingConfig,
    pair_score,
    select_next_query,
    should_stop,
)
from .calibration import (
    CalibrationCurve,
    CalibrationSession,
    calibrate_user,
    compute_delta_flap_curve,
    default_uncertainty_factors,
    generate_calibration_queries,
)
from .domain import Domain
from .gmm import GmmModel, build_gmm, gmm_density, scale_covariance
from .numerics import (
    KernelConfig,
    binary_entropy,
    build_covariance,
    median_heuristic_gamma,
    rbf_kernel,
    sample_correlation,
    solve_spd,
    std_normal_cdf,
    std_normal_pdf,
)
from .preference import (
    PosteriorState,
    PredictiveDistribution,
    PreferenceDataset,
    PreferencePair,
    UncertaintyFactors,
    choice_probability,
    fit_posterior,
    laplace_mode,
    log_likelihood,
    posterior_covariance,
    predict,
    predict_marginals,
)
from .simulation import (
    GroundTruthTask,
    MethodConfig,
    OracleConfig,
    TrialResult,
    driving_task,
    export_results,
    ground_truth_eval,
    oracle_answer,
    run_experiment,
    run_trial,
    tabletop_task,
    thermal_task,
)

__version__ = "0.1.0"
