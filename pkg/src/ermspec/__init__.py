"""Spectral ensembles of Gaussian-cloud emission-rate matrices.

The package covers the full pipeline: sample a cloud, assemble its dense
emission-rate matrix, decompose it, pool realizations into ensemble
statistics, extrapolate finite-size trends, and locate the critical
cooperativeness where a macroscopic fraction of decay rates condenses at
zero.
"""

from ._version import __version__
from .cloud import Cloud, CloudConfig, pairwise_distance, realization_seed, sample_cloud
from .ensemble import (
    EmpiricalCDF,
    EnsembleSummary,
    Histogram,
    aggregate,
    small_lambda_cdf,
)
from .errors import (
    ConfigurationError,
    ErmspecError,
    InsufficientDataError,
    NumericalError,
    ResourceError,
    UsageError,
)
from .fits import (
    CondensateExtrapolation,
    LambdaMinExtrapolation,
    LinearFit,
    PowerLawFit,
    extrapolate_condensate,
    extrapolate_lambda_min,
    linear_fit,
    scan_power_law,
)
from .harness import (
    AnalysisReport,
    RunManifest,
    SweepPlan,
    analyze,
    default_plan,
    load_manifest,
    load_plan,
    run_sweep,
    write_plan,
)
from .locator import LocatorResult, b_c0, lbar_analytic, lbar_monte_carlo, locator_result
from .matrix import EmissionMatrix, build_matrix, peak_density, sinc
from .spectral import (
    DecayCurve,
    Spectrum,
    ZERO_THRESHOLD,
    archive_filename,
    count_condensate,
    decay_curve,
    eigenvalues,
    min_eigenvalue,
    psd_tolerance,
    read_spectrum_archive,
    write_spectrum_archive,
)

__all__ = [
    "__version__",
    "AnalysisReport",
    "Cloud",
    "CloudConfig",
    "CondensateExtrapolation",
    "ConfigurationError",
    "DecayCurve",
    "EmissionMatrix",
    "EmpiricalCDF",
    "EnsembleSummary",
    "ErmspecError",
    "Histogram",
    "InsufficientDataError",
    "LambdaMinExtrapolation",
    "LinearFit",
    "LocatorResult",
    "NumericalError",
    "PowerLawFit",
    "ResourceError",
    "RunManifest",
    "Spectrum",
    "SweepPlan",
    "UsageError",
    "ZERO_THRESHOLD",
    "aggregate",
    "analyze",
    "archive_filename",
    "b_c0",
    "build_matrix",
    "count_condensate",
    "decay_curve",
    "default_plan",
    "eigenvalues",
    "extrapolate_condensate",
    "extrapolate_lambda_min",
    "lbar_analytic",
    "lbar_monte_carlo",
    "linear_fit",
    "load_manifest",
    "load_plan",
    "locator_result",
    "min_eigenvalue",
    "pairwise_distance",
    "peak_density",
    "psd_tolerance",
    "read_spectrum_archive",
    "realization_seed",
    "run_sweep",
    "sample_cloud",
    "scan_power_law",
    "sinc",
    "small_lambda_cdf",
    "write_plan",
    "write_spectrum_archive",
]
