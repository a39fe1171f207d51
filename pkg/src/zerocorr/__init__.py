"""Two-point correlations of real zeros of Gaussian random polynomial systems:
closed-form covariance structure, Monte Carlo estimators for the correlation
integrals, fitted short-range constants, and empirical cross-checks from
sampled roots.
"""

__version__ = "0.1.0"

from .specfun import double_factorial, gamma, log_gamma, sphere_area
from .ensembles import (
    CovarianceEntries,
    IsomGaf,
    KostlanAffine,
    NormalizedG,
    ParabolaDeg3,
    Pullback,
    PullbackSpec,
    SyntheticIdentity,
    entries_for,
    entries_g,
    entries_identity,
    entries_isom,
    entries_kostlan,
    entries_kostlan_rescaled,
    entries_parabola,
    entries_pullback,
    psi_square,
    psi_zero,
    pullback_point_covariance,
)
from .kacrice import (
    DegenerateSpectrum,
    NotPositiveDefinite,
    OmegaMatrix,
    PairCovariance,
    Spectrum,
    assemble_pair_covariance,
    density_closed,
    density_from_block,
    det_closed,
    omega,
    pd_max_separation,
    point_density,
    prefactor_identity_check,
    single_point_covariance,
    spectrum,
)
from .mc import (
    DEFAULT_CHUNK_COUNT,
    WORKER_ENV,
    JacobianPair,
    McEstimate,
    correlation_joint_mc,
    correlation_mc,
    density_mc,
    parallelotope_moment_mc,
    perturbation_gap,
    sphere_det_integral_mc,
    worker_count,
)
from .asymptotics import (
    CorrelationCurve,
    CurvePoint,
    FitResult,
    LongRangeResidual,
    UniversalityGap,
    correlation_curve,
    describe_kind,
    dn_constant,
    fit_power_law,
    former_base_closed,
    former_base_quadrature,
    latter_integral,
    long_range_residual,
    parabola_constant,
    parallelotope_moment,
    parallelotope_moment_quadrature,
    short_range_constant,
    smooth_curve,
    universality_gap,
)
from .empirical import (
    PairHistogram,
    RootSample,
    angle_to_separation,
    gaf_intensity,
    gaf_root_samples,
    kostlan_intensity,
    kostlan_root_samples,
    pair_correlation_estimate,
    poisson_control_samples,
    sample_gaf_roots,
    sample_kostlan_roots,
    separation_to_angle,
    sturm_root_count,
)
from .validate import CheckResult, check_names, run_checks

__all__ = [name for name in dir() if not name.startswith("_")]
