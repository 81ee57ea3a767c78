"""Ensemble statistics over spectra sharing one (b, N) cell.

Pooled eigenvalue counts use right-closed bins whose first edge sits strictly
below the pooled minimum. That convention makes the edge CDF (fraction of
eigenvalues <= threshold) agree exactly with the cumulative bin mass, so the
histogram and CDF of a cell can never drift apart.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .spectral import Spectrum, ZERO_THRESHOLD, count_condensate, min_eigenvalue

DEFAULT_BIN_WIDTH = 0.05
DEFAULT_BULK_MAX = 5.0

# Default grid for resolving the near-zero tail: 60 log-spaced thresholds
# spanning working precision up to 1e-2.
SMALL_LAMBDA_GRID = np.logspace(-13.0, -2.0, 60)

_GRID_RTOL = 1e-9


@dataclass(frozen=True)
class Histogram:
    """Density histogram; densities integrate to 1 over the bin edges."""

    bin_edges: np.ndarray
    densities: np.ndarray


@dataclass(frozen=True)
class EmpiricalCDF:
    """values[k] is the fraction of pooled eigenvalues <= thresholds[k]."""

    thresholds: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class EnsembleSummary:
    b: float
    n_atoms: int
    n_realizations: int
    lambda_min_mean: float
    lambda_min_median: float
    condensate_fraction_mean: float
    condensate_fraction_stderr: float
    histogram: Histogram
    cdf: EmpiricalCDF


def _require_same_cell(spectra) -> tuple[float, int]:
    if not spectra:
        raise UsageError("need at least one spectrum")
    b = spectra[0].b
    n = spectra[0].n_atoms
    for s in spectra:
        if s.b != b or s.n_atoms != n:
            raise UsageError(
                f"mixed cells: expected (b={b:.12g}, N={n}), "
                f"got (b={s.b:.12g}, N={s.n_atoms})"
            )
    return b, n


def _bulk_edges(pooled_sorted: np.ndarray, bin_width: float, bulk_max: float) -> np.ndarray:
    lo = float(pooled_sorted[0])
    hi = float(pooled_sorted[-1])
    n_bins = int(round(bulk_max / bin_width))
    edges = np.linspace(0.0, bulk_max, n_bins + 1)
    if lo <= 0.0:
        # keep the first edge strictly below all mass so no eigenvalue is lost
        edges[0] = np.nextafter(lo, -np.inf)
    top = bulk_max + bin_width if hi <= bulk_max else hi
    return np.append(edges, top)


def aggregate(
    spectra,
    zero_threshold: float = ZERO_THRESHOLD,
    bin_width: float = DEFAULT_BIN_WIDTH,
    bulk_max: float = DEFAULT_BULK_MAX,
) -> EnsembleSummary:
    """Summarize the realizations of one cell.

    Condensate fractions are averaged as exact integer counts over R*N; the
    standard error is the realization-to-realization spread (0.0 for a single
    realization). The histogram covers [0, bulk_max] in bins of ``bin_width``
    plus one overflow bin that absorbs everything above.
    """
    spectra = list(spectra)
    b, n = _require_same_cell(spectra)
    if not (math.isfinite(bin_width) and bin_width > 0.0):
        raise UsageError(f"bin_width must be positive, got {bin_width!r}")
    if not (math.isfinite(bulk_max) and bulk_max > bin_width):
        raise UsageError(f"bulk_max must exceed bin_width, got {bulk_max!r}")
    r = len(spectra)
    lam_min = np.array([min_eigenvalue(s) for s in spectra])
    counts = np.array([count_condensate(s, zero_threshold) for s in spectra])
    fraction_mean = int(counts.sum()) / (r * n)
    if r > 1:
        fraction_stderr = float(np.std(counts / n, ddof=1) / math.sqrt(r))
    else:
        fraction_stderr = 0.0

    pooled = np.sort(np.concatenate([s.eigenvalues for s in spectra]))
    edges = _bulk_edges(pooled, bin_width, bulk_max)
    cumulative = np.searchsorted(pooled, edges, side="right")
    bin_counts = np.diff(cumulative)
    densities = bin_counts / (pooled.size * np.diff(edges))
    return EnsembleSummary(
        b=b,
        n_atoms=n,
        n_realizations=r,
        lambda_min_mean=float(lam_min.mean()),
        lambda_min_median=float(np.median(lam_min)),
        condensate_fraction_mean=fraction_mean,
        condensate_fraction_stderr=fraction_stderr,
        histogram=Histogram(bin_edges=edges, densities=densities),
        cdf=EmpiricalCDF(thresholds=edges.copy(), values=cumulative / pooled.size),
    )


def small_lambda_cdf(spectra, lambda_grid=None) -> EmpiricalCDF:
    """Empirical CDF of pooled eigenvalues on a near-zero threshold grid.

    The grid must be ascending and stay within [1e-13, 1e-2] up to relative
    slack of 1e-9. Eigenvalues below the lowest threshold (including the tiny
    negative excursions the solver is allowed) count toward every bin.
    """
    spectra = list(spectra)
    if not spectra:
        raise UsageError("need at least one spectrum")
    if lambda_grid is None:
        grid = SMALL_LAMBDA_GRID.copy()
    else:
        grid = np.asarray(lambda_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise UsageError("lambda_grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0.0):
        raise UsageError("lambda_grid must be finite and strictly ascending")
    lo_limit = 1e-13 * (1.0 - _GRID_RTOL)
    hi_limit = 1e-2 * (1.0 + _GRID_RTOL)
    if grid[0] < lo_limit or grid[-1] > hi_limit:
        raise UsageError(
            f"lambda_grid must lie within [1e-13, 1e-2], got "
            f"[{grid[0]:.6g}, {grid[-1]:.6g}]"
        )
    pooled = np.sort(np.concatenate([s.eigenvalues for s in spectra]))
    values = np.searchsorted(pooled, grid, side="right") / pooled.size
    return EmpiricalCDF(thresholds=grid, values=values)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def summary_to_dict(summary: EnsembleSummary) -> dict:
    return {
        "b": summary.b,
        "n_atoms": summary.n_atoms,
        "n_realizations": summary.n_realizations,
        "lambda_min_mean": summary.lambda_min_mean,
        "lambda_min_median": summary.lambda_min_median,
        "condensate_fraction_mean": summary.condensate_fraction_mean,
        "condensate_fraction_stderr": summary.condensate_fraction_stderr,
        "histogram": {
            "bin_edges": summary.histogram.bin_edges.tolist(),
            "densities": summary.histogram.densities.tolist(),
        },
        "cdf": {
            "thresholds": summary.cdf.thresholds.tolist(),
            "values": summary.cdf.values.tolist(),
        },
    }


def write_summary_json(summary: EnsembleSummary, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(summary_to_dict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_histogram_csv(histogram: Histogram, path) -> None:
    """Two columns: bin center and density."""
    centers = 0.5 * (histogram.bin_edges[:-1] + histogram.bin_edges[1:])
    with open(path, "w", encoding="ascii") as fh:
        fh.write("value,density\n")
        for c, d in zip(centers, histogram.densities):
            fh.write(f"{float(c)!r},{float(d)!r}\n")


def write_cdf_csv(cdf: EmpiricalCDF, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("lambda,cdf\n")
        for t, v in zip(cdf.thresholds, cdf.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
