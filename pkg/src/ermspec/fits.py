"""Least-squares fits: finite-size extrapolations and the critical-point scan.

Both extrapolations work against 1/log10(N), the natural variable for the
slow logarithmic drift of dense-cloud spectra, so the intercept at 0 is the
infinite-size limit. The power-law scan fits log10(fraction) against
log10(b - c) for every candidate threshold c on a grid and keeps the best
coefficient of determination.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, UsageError
from .spectral import ZERO_THRESHOLD

VANISHING = "vanishing"
GAPPED = "gapped"

DEFAULT_CANDIDATES = np.linspace(4.0, 5.2, 241)  # step 0.005
DEFAULT_FIT_B_MAX = 10.0
DEFAULT_FIT_MARGIN = 0.01

# Slack when comparing the extrapolated intercept to zero at one standard
# error, so an intercept of exactly 0.0 with zero spread counts as vanishing.
_INTERCEPT_ATOL = 1e-12


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    residuals: np.ndarray
    slope_stderr: float
    intercept_stderr: float


@dataclass(frozen=True)
class LambdaMinExtrapolation:
    b: float
    verdict: str
    fit: LinearFit | None
    points: list          # (n_atoms, lambda_min_mean) pairs entering the fit
    excluded: list        # pairs whose mean sat below the zero threshold


@dataclass(frozen=True)
class CondensateExtrapolation:
    b: float
    fit: LinearFit
    asymptotic_fraction: float   # intercept clamped to [0, 1]
    points: list


@dataclass(frozen=True)
class PowerLawFit:
    b_c_prime: float
    beta_exponent: float
    amplitude: float
    r_squared: float
    scan_grid: np.ndarray        # columns: candidate, r_squared (NaN = skipped)
    fit: LinearFit


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares y = intercept + slope * x.

    Requires at least two points with non-degenerate x. r_squared is clipped
    to [0, 1] and reported as 1.0 for a perfectly flat response. Parameter
    standard errors use the usual residual-variance estimate and are 0.0 when
    there are no degrees of freedom left.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1 or xa.shape != ya.shape:
        raise UsageError("x and y must be 1-D arrays of equal length")
    n = xa.size
    if n < 2:
        raise UsageError(f"need at least 2 points, got {n}")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise UsageError("x and y must be finite")
    xbar = xa.mean()
    ybar = ya.mean()
    dx = xa - xbar
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise UsageError("x values are all identical; slope is undefined")
    slope = float(dx @ (ya - ybar)) / sxx
    intercept = float(ybar - slope * xbar)
    residuals = ya - (intercept + slope * xa)
    ss_res = float(residuals @ residuals)
    ss_tot = float((ya - ybar) @ (ya - ybar))
    if ss_tot == 0.0:
        r_squared = 1.0
    else:
        r_squared = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    dof = n - 2
    sigma2 = ss_res / dof if dof > 0 else 0.0
    slope_stderr = math.sqrt(sigma2 / sxx)
    intercept_stderr = math.sqrt(sigma2 * (1.0 / n + xbar * xbar / sxx))
    return LinearFit(
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        n_points=n,
        residuals=residuals,
        slope_stderr=slope_stderr,
        intercept_stderr=intercept_stderr,
    )


def _extrapolation_points(summaries) -> tuple[float, list]:
    summaries = list(summaries)
    if not summaries:
        raise UsageError("need at least one summary")
    b = summaries[0].b
    seen = set()
    points = []
    for s in summaries:
        if s.b != b:
            raise UsageError(
                f"mixed b values: {s.b:.12g} vs {b:.12g}; extrapolate one b at a time"
            )
        if s.n_atoms in seen:
            raise UsageError(f"duplicate N={s.n_atoms} in extrapolation input")
        if s.n_atoms < 2:
            raise UsageError("extrapolation requires N >= 2 (log10 N must be positive)")
        seen.add(s.n_atoms)
        points.append(s)
    points.sort(key=lambda s: s.n_atoms)
    return b, points


def extrapolate_lambda_min(summaries, zero_threshold: float = ZERO_THRESHOLD) -> LambdaMinExtrapolation:
    """Classify the infinite-size fate of the smallest eigenvalue at fixed b.

    Cells whose mean minimum sits below the zero threshold carry no usable
    magnitude, but they are direct evidence of a vanishing minimum: if any
    are present the verdict is ``vanishing`` regardless of the fit (which is
    still attempted on whatever usable points remain). With all points usable
    the verdict follows the sign of the extrapolated intercept of
    1/log10(lambda_min) versus 1/log10(N), compared to zero at one standard
    error: a significantly negative intercept means a finite gap.
    """
    b, cells = _extrapolation_points(summaries)
    if len(cells) < 3:
        raise InsufficientDataError(
            f"need summaries at >= 3 distinct N values, got {len(cells)}"
        )
    usable = []
    excluded = []
    for s in cells:
        m = s.lambda_min_mean
        if m < zero_threshold:
            excluded.append((s.n_atoms, m))
            continue
        if m >= 1.0:
            raise UsageError(
                f"lambda_min_mean={m!r} at N={s.n_atoms} is not below 1; "
                "1/log10 scaling does not apply"
            )
        usable.append((s.n_atoms, m))
    fit = None
    if len(usable) >= 2:
        xs = np.array([1.0 / math.log10(n) for n, _ in usable])
        ys = np.array([1.0 / math.log10(m) for _, m in usable])
        fit = linear_fit(xs, ys)
    if excluded:
        verdict = VANISHING
    elif fit is None:
        raise InsufficientDataError(
            f"only {len(usable)} usable points above the zero threshold"
        )
    elif fit.intercept >= -(fit.intercept_stderr + _INTERCEPT_ATOL):
        verdict = VANISHING
    else:
        verdict = GAPPED
    return LambdaMinExtrapolation(
        b=b, verdict=verdict, fit=fit, points=usable, excluded=excluded
    )


def extrapolate_condensate(summaries) -> CondensateExtrapolation:
    """Infinite-size condensate fraction at fixed b.

    Fits the fraction against 1/log10(N); the intercept is the asymptotic
    fraction, clamped to [0, 1] for reporting (the raw value stays on the
    fit).
    """
    b, cells = _extrapolation_points(summaries)
    if len(cells) < 3:
        raise InsufficientDataError(
            f"need summaries at >= 3 distinct N values, got {len(cells)}"
        )
    xs = np.array([1.0 / math.log10(s.n_atoms) for s in cells])
    ys = np.array([s.condensate_fraction_mean for s in cells])
    fit = linear_fit(xs, ys)
    points = [(s.n_atoms, s.condensate_fraction_mean) for s in cells]
    return CondensateExtrapolation(
        b=b,
        fit=fit,
        asymptotic_fraction=min(1.0, max(0.0, fit.intercept)),
        points=points,
    )


def scan_power_law(
    points,
    candidates=None,
    b_max: float = DEFAULT_FIT_B_MAX,
    window_margin: float = DEFAULT_FIT_MARGIN,
) -> PowerLawFit:
    """Locate the critical cooperativeness by scanning power-law thresholds.

    ``points`` is a sequence of (b, fraction) pairs with positive fractions.
    For each candidate c the points with b in [c + window_margin, b_max] are
    fit as log10(fraction) = log10(A) + beta * log10(b - c); candidates whose
    window holds fewer than 3 points are skipped (one warning summarizes how
    many). The candidate with the largest r_squared wins; ties go to the
    smallest candidate.
    """
    pts = [(float(b), float(f)) for b, f in points]
    if len(pts) < 3:
        raise UsageError(f"need at least 3 (b, fraction) points, got {len(pts)}")
    for b, f in pts:
        if not (math.isfinite(b) and b > 0.0):
            raise UsageError(f"b values must be positive and finite, got {b!r}")
        if not (math.isfinite(f) and f > 0.0):
            raise UsageError(f"fractions must be positive and finite, got {f!r}")
    if candidates is None:
        cand = DEFAULT_CANDIDATES.copy()
    else:
        cand = np.asarray(candidates, dtype=np.float64)
    if cand.ndim != 1 or cand.size < 2:
        raise UsageError("candidates must be a 1-D grid with at least 2 values")
    if not np.all(np.isfinite(cand)) or np.any(np.diff(cand) <= 0.0):
        raise UsageError("candidates must be finite and strictly ascending")
    if not (math.isfinite(window_margin) and window_margin > 0.0):
        raise UsageError(f"window_margin must be positive, got {window_margin!r}")

    bs = np.array([p[0] for p in pts])
    fs = np.array([p[1] for p in pts])
    r2 = np.full(cand.size, np.nan)
    fits: dict[int, LinearFit] = {}
    skipped = 0
    for i, c in enumerate(cand):
        mask = (bs >= c + window_margin) & (bs <= b_max)
        if int(mask.sum()) < 3:
            skipped += 1
            continue
        f = linear_fit(np.log10(bs[mask] - c), np.log10(fs[mask]))
        r2[i] = f.r_squared
        fits[i] = f
    if skipped:
        warnings.warn(
            f"{skipped} of {cand.size} candidates skipped: fewer than 3 points "
            f"in the fit window",
            stacklevel=2,
        )
    if not fits:
        raise UsageError(
            "no candidate retained at least 3 points; widen the candidate grid "
            "or supply more (b, fraction) data"
        )
    best = int(np.nanargmax(r2))  # first maximum = smallest candidate on ties
    bf = fits[best]
    return PowerLawFit(
        b_c_prime=float(cand[best]),
        beta_exponent=bf.slope,
        amplitude=10.0 ** bf.intercept,
        r_squared=bf.r_squared,
        scan_grid=np.column_stack([cand, r2]),
        fit=bf,
    )
