"""Covariate-adjusted ROC curves and AUC for two-population marker data.

The main entry points are :class:`EstimatorSpec` (fit and evaluate one of
the AUC estimators on a covariate grid), :func:`bootstrap_auc` (percentile
bands) and the simulation harness in :mod:`covroc.simulation`.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bandwidth import (
    BandwidthGrid,
    BandwidthSet,
    GridScale,
    SelectionMethod,
    loo_cv_bandwidth,
    select_all,
)
from .bootstrap import AucBand, BootstrapConfig, RefitMode, bootstrap_auc, percentile_interval
from .errors import (
    BootstrapFailureError,
    CovrocError,
    EmptySampleError,
    EstimationError,
    InfeasibleBandwidthError,
    InputError,
    InsufficientLocalDataError,
    SimulationFailureError,
    ZeroDenominatorError,
)
from .estimators import (
    AucEstimate,
    Estimator,
    KnownCurves,
    RocPoint,
    WorkingSample,
    auc_bivariate_kernel,
    auc_normal,
    camwe,
    mann_whitney,
    roc_curve_camwe,
    roc_curve_normal,
    sens_spec_camwe,
    sens_spec_normal,
    standardized_residuals,
    working_sample,
    youden_index,
)
from .kernels import Kernel, KernelFamily, equivalent_kernel, kernel_moment, kernel_roughness
from .locpoly import (
    FittedCurves,
    LocalPolyFit,
    Population,
    SamplePairs,
    eval_mean,
    fit_all,
    fit_mean,
    fit_variance,
)
from .pipeline import EstimatorSpec

__all__ = [
    "__version__",
    "AucBand",
    "AucEstimate",
    "BandwidthGrid",
    "BandwidthSet",
    "BootstrapConfig",
    "BootstrapFailureError",
    "CovrocError",
    "EmptySampleError",
    "EstimationError",
    "Estimator",
    "EstimatorSpec",
    "FittedCurves",
    "GridScale",
    "InfeasibleBandwidthError",
    "InputError",
    "InsufficientLocalDataError",
    "Kernel",
    "KernelFamily",
    "KnownCurves",
    "LocalPolyFit",
    "Population",
    "RefitMode",
    "RocPoint",
    "SamplePairs",
    "SelectionMethod",
    "SimulationFailureError",
    "WorkingSample",
    "ZeroDenominatorError",
    "auc_bivariate_kernel",
    "auc_normal",
    "bootstrap_auc",
    "camwe",
    "equivalent_kernel",
    "eval_mean",
    "fit_all",
    "fit_mean",
    "fit_variance",
    "kernel_moment",
    "kernel_roughness",
    "loo_cv_bandwidth",
    "mann_whitney",
    "percentile_interval",
    "roc_curve_camwe",
    "roc_curve_normal",
    "select_all",
    "sens_spec_camwe",
    "sens_spec_normal",
    "standardized_residuals",
    "working_sample",
    "youden_index",
]
