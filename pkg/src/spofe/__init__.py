"""Sparse interpretable proxies for kernel principal components.

The pipeline approximates kernel principal components with a small set of
named degree-2 polynomial features, selected by an eigenvalue-weighted
model-X knockoff filter with finite-sample FDR control and p-value
calibration on the aggregated scores.
"""

from ._version import __version__
from .dataio import (
    Dataset,
    PipelineConfig,
    StandardizationParams,
    load_csv,
    standardize,
    subsample,
)
from .errors import (
    BoundsError,
    DegenerateDistribution,
    DegenerateInput,
    EmptyInput,
    InsufficientData,
    NonConvergence,
    NumericalError,
    ParseError,
    SpofeError,
)
from .inference import (
    ComponentFit,
    PValueVector,
    SelectionResult,
    fit_component,
    pvalues_lognormal,
    pvalues_percentile,
    ridge_fit,
    select_bh,
    select_fixed,
    select_threshold,
    select_varying,
)
from .kernels import KernelMatrix, KernelSpec, center, kernel_matrix, kernel_value, rff_features
from .knockoff import (
    KnockoffModel,
    KnockoffStats,
    WekoScores,
    fit_knockoff_model,
    knockoff_stats_lcd,
    knockoff_threshold,
    lasso_cd,
    sample_knockoffs,
    weko,
)
from .kpca import SignalBundle, eigendecompose, s4gen
from .pipeline import SelectionReport, run_pipeline
from .polybasis import (
    FeatureMatrix,
    PolyBasis,
    PolyTerm,
    build_basis,
    expand,
    expected_d_max,
    term_name,
)
from .simulate import SimulationSpec, simulate_fdr

__all__ = [
    "__version__",
    "Dataset",
    "StandardizationParams",
    "PipelineConfig",
    "load_csv",
    "standardize",
    "subsample",
    "KernelSpec",
    "KernelMatrix",
    "kernel_value",
    "kernel_matrix",
    "center",
    "rff_features",
    "SignalBundle",
    "eigendecompose",
    "s4gen",
    "PolyTerm",
    "PolyBasis",
    "FeatureMatrix",
    "build_basis",
    "expand",
    "term_name",
    "expected_d_max",
    "KnockoffModel",
    "KnockoffStats",
    "WekoScores",
    "fit_knockoff_model",
    "sample_knockoffs",
    "lasso_cd",
    "knockoff_stats_lcd",
    "knockoff_threshold",
    "weko",
    "PValueVector",
    "SelectionResult",
    "ComponentFit",
    "pvalues_percentile",
    "pvalues_lognormal",
    "select_threshold",
    "select_bh",
    "select_fixed",
    "select_varying",
    "ridge_fit",
    "fit_component",
    "SelectionReport",
    "run_pipeline",
    "SimulationSpec",
    "simulate_fdr",
    "SpofeError",
    "ParseError",
    "EmptyInput",
    "DegenerateInput",
    "BoundsError",
    "NumericalError",
    "NonConvergence",
    "InsufficientData",
    "DegenerateDistribution",
]
