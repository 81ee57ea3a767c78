"""Sweep orchestration and report generation.

A sweep plan is a grid over (b, N) with R realizations per cell. Each
realization becomes one spectrum archive on disk plus a manifest entry with
its SHA-256, so a sweep can be resumed: archives that exist and verify are
never recomputed, corrupted or missing ones are. The manifest is written by
the parent process only, atomically, after every completed cell.

``analyze`` turns a manifest into a report bundle: per-cell summaries and
delimited eigenvalue statistics, finite-size extrapolations per b, the
critical-point scan, the locator estimate, and rendered figures. Everything
except the isolated ``report_meta.json`` (which carries the timestamp) is
byte-deterministic for a given manifest.
"""

from __future__ import annotations

import concurrent.futures
import datetime
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from ._version import __version__
from .cloud import CloudConfig, sample_cloud
from .ensemble import (
    aggregate,
    small_lambda_cdf,
    write_cdf_csv,
    write_histogram_csv,
    write_summary_json,
)
from .errors import ConfigurationError, InsufficientDataError, UsageError
from .fits import (
    CondensateExtrapolation,
    LambdaMinExtrapolation,
    LinearFit,
    PowerLawFit,
    extrapolate_condensate,
    extrapolate_lambda_min,
    scan_power_law,
)
from .locator import locator_result
from .matrix import build_matrix
from .spectral import (
    ZERO_THRESHOLD,
    archive_filename,
    eigenvalues,
    read_spectrum_archive,
    write_spectrum_archive,
)

WORKERS_ENV = "ERMSPEC_WORKERS"

# Above this size a dense double-precision matrix passes half a gigabyte and
# the cubic solve dominates wall time; larger runs must be requested
# explicitly.
DEFAULT_ATOM_CAP = 8000

MANIFEST_NAME = "manifest.json"
_MANIFEST_FORMAT = "ermspec-manifest/1"

_PLAN_KEYS = {
    "b_values",
    "n_values",
    "realizations_per_cell",
    "base_seed",
    "zero_threshold",
    "output_dir",
}


def _fmt(value: float) -> str:
    return f"{value:.12g}"


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPlan:
    b_values: tuple
    n_values: tuple
    realizations_per_cell: int
    base_seed: int
    output_dir: str
    zero_threshold: float = ZERO_THRESHOLD

    def __post_init__(self) -> None:
        object.__setattr__(self, "b_values", tuple(float(b) for b in self.b_values))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "realizations_per_cell", int(self.realizations_per_cell))
        object.__setattr__(self, "base_seed", int(self.base_seed))
        object.__setattr__(self, "output_dir", str(self.output_dir))
        object.__setattr__(self, "zero_threshold", float(self.zero_threshold))
        self.validate()

    def validate(self) -> None:
        if not self.b_values:
            raise ConfigurationError("plan needs at least one b value")
        if not self.n_values:
            raise ConfigurationError("plan needs at least one N value")
        for b in self.b_values:
            if not math.isfinite(b) or b <= 0.0:
                raise ConfigurationError(f"b values must be positive and finite, got {b!r}")
        if len(set(self.b_values)) != len(self.b_values):
            raise ConfigurationError("duplicate b values in plan")
        for n in self.n_values:
            if n < 1:
                raise ConfigurationError(f"N values must be >= 1, got {n}")
        if len(set(self.n_values)) != len(self.n_values):
            raise ConfigurationError("duplicate N values in plan")
        if self.realizations_per_cell < 1:
            raise ConfigurationError(
                f"realizations_per_cell must be >= 1, got {self.realizations_per_cell}"
            )
        if not 0 <= self.base_seed < 2**64:
            raise ConfigurationError(f"base_seed must lie in [0, 2**64), got {self.base_seed}")
        t = self.zero_threshold
        if not math.isfinite(t) or t <= 0.0:
            raise ConfigurationError(f"zero_threshold must be positive, got {t!r}")
        if not str(self.output_dir):
            raise ConfigurationError("output_dir must be a non-empty path")

    def cell_keys(self):
        """Deterministic cell order: plan order for b and N, then realization."""
        for b in self.b_values:
            for n in self.n_values:
                for r in range(self.realizations_per_cell):
                    yield b, n, r

    def to_dict(self) -> dict:
        return {
            "b_values": list(self.b_values),
            "n_values": list(self.n_values),
            "realizations_per_cell": self.realizations_per_cell,
            "base_seed": self.base_seed,
            "zero_threshold": self.zero_threshold,
            "output_dir": str(self.output_dir),
        }


def plan_from_dict(data: dict) -> SweepPlan:
    if not isinstance(data, dict):
        raise ConfigurationError("plan must be a JSON object")
    unknown = set(data) - _PLAN_KEYS
    if unknown:
        raise ConfigurationError(f"unknown plan keys: {sorted(unknown)}")
    missing = _PLAN_KEYS - {"zero_threshold"} - set(data)
    if missing:
        raise ConfigurationError(f"plan is missing keys: {sorted(missing)}")
    try:
        return SweepPlan(
            b_values=tuple(data["b_values"]),
            n_values=tuple(data["n_values"]),
            realizations_per_cell=int(data["realizations_per_cell"]),
            base_seed=int(data["base_seed"]),
            output_dir=str(data["output_dir"]),
            zero_threshold=float(data.get("zero_threshold", ZERO_THRESHOLD)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed plan: {exc}") from exc


def load_plan(path) -> SweepPlan:
    with open(path, "r", encoding="ascii") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    return plan_from_dict(data)


def write_plan(plan: SweepPlan, path) -> None:
    _write_json_atomic(plan.to_dict(), path)


def default_plan(output_dir, base_seed: int = 271828182) -> SweepPlan:
    """Desk-scale grid spanning both phases; runs in minutes on one core."""
    return SweepPlan(
        b_values=(3.0, 4.0, 4.5, 4.75, 5.0, 5.5, 6.0, 7.0, 8.0, 10.0, 20.0),
        n_values=(500, 1000, 2000),
        realizations_per_cell=10,
        base_seed=base_seed,
        output_dir=str(output_dir),
    )


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    """Outcome of one realization: an archive plus checksum, or an error."""

    b: float
    n_atoms: int
    realization_index: int
    path: str
    sha256: str | None
    status: str              # "ok" | "error"
    error: str | None = None

    def key(self):
        return (self.b, self.n_atoms, self.realization_index)

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "n_atoms": self.n_atoms,
            "realization_index": self.realization_index,
            "path": self.path,
            "sha256": self.sha256,
            "status": self.status,
            "error": self.error,
        }


@dataclass
class RunManifest:
    plan: SweepPlan
    cells: list = field(default_factory=list)
    toolkit_version: str = __version__

    def ok_cells(self):
        return [c for c in self.cells if c.status == "ok"]

    def error_cells(self):
        return [c for c in self.cells if c.status != "ok"]

    def to_dict(self) -> dict:
        ordered = sorted(self.cells, key=lambda c: c.key())
        return {
            "format": _MANIFEST_FORMAT,
            "toolkit_version": self.toolkit_version,
            "plan": self.plan.to_dict(),
            "cells": [c.to_dict() for c in ordered],
        }


def load_manifest(path) -> RunManifest:
    with open(path, "r", encoding="ascii") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != _MANIFEST_FORMAT:
        raise ConfigurationError(f"{path}: not a sweep manifest")
    plan = plan_from_dict(data["plan"])
    cells = []
    for raw in data.get("cells", []):
        cells.append(
            CellResult(
                b=float(raw["b"]),
                n_atoms=int(raw["n_atoms"]),
                realization_index=int(raw["realization_index"]),
                path=str(raw["path"]),
                sha256=raw.get("sha256"),
                status=str(raw["status"]),
                error=raw.get("error"),
            )
        )
    return RunManifest(
        plan=plan, cells=cells, toolkit_version=str(data.get("toolkit_version", ""))
    )


def _write_json_atomic(data, path) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write(text)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def write_manifest(manifest: RunManifest, path) -> None:
    _write_json_atomic(manifest.to_dict(), path)


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Sweep execution
# ---------------------------------------------------------------------------

def _compute_cell(base_seed: int, b: float, n: int, r: int, out_dir: str) -> CellResult:
    """Worker entry point; must stay importable for process pools."""
    fname = archive_filename(b, n, r)
    target = os.path.join(out_dir, fname)
    try:
        config = CloudConfig(n_atoms=n, b=b, base_seed=base_seed, realization_index=r)
        spectrum = eigenvalues(build_matrix(sample_cloud(config)))
        write_spectrum_archive(spectrum, target)
        return CellResult(
            b=b, n_atoms=n, realization_index=r, path=fname,
            sha256=_sha256_file(target), status="ok",
        )
    except Exception as exc:  # the sweep must keep going past a bad cell
        return CellResult(
            b=b, n_atoms=n, realization_index=r, path=fname,
            sha256=None, status="error", error=f"{type(exc).__name__}: {exc}",
        )


def _resolve_workers(workers) -> int:
    if workers is None:
        raw = os.environ.get(WORKERS_ENV)
        if raw is None:
            return 1
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{WORKERS_ENV}={raw!r} is not an integer") from exc
    workers = int(workers)
    if workers < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {workers}")
    return workers


def _verified_cells(manifest: RunManifest, out_dir: Path) -> dict:
    """Cells from a previous run whose archives still verify."""
    good = {}
    for rec in manifest.ok_cells():
        target = out_dir / rec.path
        if rec.sha256 and target.is_file() and _sha256_file(target) == rec.sha256:
            good[rec.key()] = rec
    return good


def run_sweep(
    plan: SweepPlan,
    workers=None,
    atom_cap: int = DEFAULT_ATOM_CAP,
    allow_large: bool = False,
) -> RunManifest:
    """Execute a sweep plan, resuming any verified previous progress.

    Failed cells are recorded in the manifest with their error message and do
    not stop the rest of the grid. The returned manifest reflects the final
    on-disk state.
    """
    plan.validate()
    biggest = max(plan.n_values)
    if not allow_large and biggest > atom_cap:
        raise ConfigurationError(
            f"N={biggest} exceeds the dense-solve cap of {atom_cap}; "
            f"pass allow_large=True (or --allow-large) to proceed"
        )
    workers = _resolve_workers(workers)
    out_dir = Path(plan.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / MANIFEST_NAME

    records: dict = {}
    if manifest_path.is_file():
        previous = load_manifest(manifest_path)
        if previous.plan.to_dict() != plan.to_dict():
            raise ConfigurationError(
                f"{out_dir} already holds a sweep with a different plan; "
                f"choose another output_dir"
            )
        records = _verified_cells(previous, out_dir)

    pending = [key for key in plan.cell_keys() if key not in records]
    manifest = RunManifest(plan=plan, cells=list(records.values()))
    write_manifest(manifest, manifest_path)

    def record(result: CellResult) -> None:
        records[result.key()] = result
        manifest.cells = list(records.values())
        write_manifest(manifest, manifest_path)

    if workers == 1 or len(pending) <= 1:
        for b, n, r in pending:
            record(_compute_cell(plan.base_seed, b, n, r, str(out_dir)))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_compute_cell, plan.base_seed, b, n, r, str(out_dir))
                for b, n, r in pending
            ]
            for future in concurrent.futures.as_completed(futures):
                record(future.result())
    return manifest


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------

@dataclass
class AnalysisReport:
    report_dir: Path
    analysis: dict
    summaries: dict          # (b, n_atoms) -> EnsembleSummary
    skipped_archives: list
    figure_paths: list


def _fit_to_dict(fit: LinearFit | None) -> dict | None:
    if fit is None:
        return None
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "n_points": fit.n_points,
        "slope_stderr": fit.slope_stderr,
        "intercept_stderr": fit.intercept_stderr,
    }


def _lambda_extrap_to_dict(e: LambdaMinExtrapolation) -> dict:
    return {
        "b": e.b,
        "verdict": e.verdict,
        "fit": _fit_to_dict(e.fit),
        "points": [{"n_atoms": n, "lambda_min_mean": m} for n, m in e.points],
        "excluded": [{"n_atoms": n, "lambda_min_mean": m} for n, m in e.excluded],
    }


def _condensate_extrap_to_dict(e: CondensateExtrapolation) -> dict:
    return {
        "b": e.b,
        "asymptotic_fraction": e.asymptotic_fraction,
        "fit": _fit_to_dict(e.fit),
        "points": [{"n_atoms": n, "fraction_mean": f} for n, f in e.points],
    }


def _power_law_to_dict(p: PowerLawFit) -> dict:
    grid = [
        {"candidate": float(c), "r_squared": None if math.isnan(r) else float(r)}
        for c, r in p.scan_grid
    ]
    return {
        "b_c_prime": p.b_c_prime,
        "beta_exponent": p.beta_exponent,
        "amplitude": p.amplitude,
        "r_squared": p.r_squared,
        "fit": _fit_to_dict(p.fit),
        "scan_grid": grid,
    }


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else repr(float(v)) for v in row) + "\n")


def analyze(
    manifest,
    report_dir=None,
    candidates=None,
    locator_pairs: int = 1_000_000,
    small_lambda_grid=None,
    render_figures: bool = True,
) -> AnalysisReport:
    """Build the full report bundle for a completed (or partial) sweep.

    ``manifest`` may be a RunManifest or a path to one. Archives that are
    missing, corrupted, or recorded as failed are listed under
    ``skipped_archives`` and excluded from every statistic; cells left with
    no verified realizations are flagged rather than silently dropped.
    """
    if isinstance(manifest, (str, os.PathLike)):
        manifest_path = Path(manifest)
        manifest = load_manifest(manifest_path)
        base_dir = manifest_path.parent
    else:
        base_dir = Path(manifest.plan.output_dir)
    plan = manifest.plan
    report_dir = Path(report_dir) if report_dir is not None else base_dir / "report"
    cells_dir = report_dir / "cells"
    scaling_dir = report_dir / "scaling"
    for d in (report_dir, cells_dir, scaling_dir):
        d.mkdir(parents=True, exist_ok=True)

    skipped = []
    spectra_by_cell: dict = {}
    for rec in sorted(manifest.cells, key=lambda c: c.key()):
        if rec.status != "ok":
            skipped.append({"path": rec.path, "reason": f"cell error: {rec.error}"})
            continue
        target = base_dir / rec.path
        if not target.is_file():
            skipped.append({"path": rec.path, "reason": "archive missing"})
            continue
        if not rec.sha256 or _sha256_file(target) != rec.sha256:
            skipped.append({"path": rec.path, "reason": "checksum mismatch"})
            continue
        try:
            spectrum = read_spectrum_archive(target)
        except UsageError as exc:
            skipped.append({"path": rec.path, "reason": f"unreadable archive: {exc}"})
            continue
        spectra_by_cell.setdefault((rec.b, rec.n_atoms), []).append(spectrum)

    summaries: dict = {}
    small_cdfs: dict = {}
    empty_cells = []
    for b in plan.b_values:
        for n in plan.n_values:
            spectra = spectra_by_cell.get((b, n))
            if not spectra:
                empty_cells.append({"b": b, "n_atoms": n})
                continue
            summary = aggregate(spectra, zero_threshold=plan.zero_threshold)
            summaries[(b, n)] = summary
            small_cdfs[(b, n)] = small_lambda_cdf(spectra, small_lambda_grid)
            stem = f"b{_fmt(b)}_N{n}"
            write_summary_json(summary, cells_dir / f"summary_{stem}.json")
            write_histogram_csv(summary.histogram, cells_dir / f"hist_{stem}.csv")
            write_cdf_csv(summary.cdf, cells_dir / f"cdf_{stem}.csv")
            write_cdf_csv(small_cdfs[(b, n)], cells_dir / f"smallcdf_{stem}.csv")

    # Largest-N view of the spectral floor versus cooperativeness.
    floor_rows = []
    for b in sorted(plan.b_values):
        sizes = [n for (bb, n) in summaries if bb == b]
        if not sizes:
            continue
        top = max(sizes)
        s = summaries[(b, top)]
        floor_rows.append((b, top, s.lambda_min_mean, s.lambda_min_median))
    _write_csv(
        report_dir / "lambda_min_vs_b.csv",
        "b,n_atoms,lambda_min_mean,lambda_min_median",
        floor_rows,
    )

    lambda_extraps = []
    lambda_entries = []
    cond_extraps = []
    cond_entries = []
    for b in sorted(plan.b_values):
        cell_summaries = sorted(
            (summaries[key] for key in summaries if key[0] == b),
            key=lambda s: s.n_atoms,
        )
        distinct = len({s.n_atoms for s in cell_summaries})
        if distinct < 3:
            msg = f"insufficient data: {distinct} distinct N values"
            lambda_entries.append({"b": b, "error": msg})
            cond_entries.append({"b": b, "error": msg})
            continue
        try:
            lam = extrapolate_lambda_min(cell_summaries, zero_threshold=plan.zero_threshold)
            lambda_extraps.append(lam)
            lambda_entries.append(_lambda_extrap_to_dict(lam))
            rows = []
            if lam.fit is not None:
                for n, m in lam.points:
                    xv = 1.0 / math.log10(n)
                    rows.append(
                        (n, xv, m, 1.0 / math.log10(m), lam.fit.intercept + lam.fit.slope * xv)
                    )
            _write_csv(
                scaling_dir / f"lambda_min_b{_fmt(b)}.csv",
                "n_atoms,inv_log10_n,lambda_min_mean,inv_log10_lambda_min,fitted",
                rows,
            )
        except (InsufficientDataError, UsageError) as exc:
            lambda_entries.append({"b": b, "error": str(exc)})
        try:
            cond = extrapolate_condensate(cell_summaries)
            cond_extraps.append(cond)
            cond_entries.append(_condensate_extrap_to_dict(cond))
            rows = []
            for n, f in cond.points:
                xv = 1.0 / math.log10(n)
                rows.append((n, xv, f, cond.fit.intercept + cond.fit.slope * xv))
            _write_csv(
                scaling_dir / f"condensate_b{_fmt(b)}.csv",
                "n_atoms,inv_log10_n,fraction_mean,fitted",
                rows,
            )
        except (InsufficientDataError, UsageError) as exc:
            cond_entries.append({"b": b, "error": str(exc)})

    power_points = [
        (e.b, e.asymptotic_fraction) for e in cond_extraps if e.asymptotic_fraction > 0.0
    ]
    power_fit = None
    if len(power_points) >= 3:
        try:
            power_fit = scan_power_law(power_points, candidates=candidates)
            power_entry = _power_law_to_dict(power_fit)
        except UsageError as exc:
            power_entry = {"error": str(exc), "points": [list(p) for p in power_points]}
    else:
        power_entry = {
            "error": f"insufficient data: {len(power_points)} cooperativeness values "
            f"with a positive asymptotic fraction",
            "points": [list(p) for p in power_points],
        }
    if power_fit is not None:
        _write_csv(
            report_dir / "powerlaw_scan.csv",
            "candidate,r_squared",
            [
                (c, None if math.isnan(r) else r)
                for c, r in power_fit.scan_grid
            ],
        )
        _write_csv(
            report_dir / "powerlaw_points.csv",
            "b,fraction,fitted_fraction",
            [
                (
                    b,
                    f,
                    power_fit.amplitude * (b - power_fit.b_c_prime) ** power_fit.beta_exponent
                    if b > power_fit.b_c_prime
                    else None,
                )
                for b, f in power_points
            ],
        )

    locator = locator_result(locator_pairs, seed=plan.base_seed)

    cell_rows = []
    for (b, n) in sorted(summaries):
        s = summaries[(b, n)]
        cell_rows.append(
            {
                "b": b,
                "n_atoms": n,
                "n_realizations": s.n_realizations,
                "lambda_min_mean": s.lambda_min_mean,
                "lambda_min_median": s.lambda_min_median,
                "condensate_fraction_mean": s.condensate_fraction_mean,
                "condensate_fraction_stderr": s.condensate_fraction_stderr,
            }
        )

    analysis = {
        "plan": plan.to_dict(),
        "toolkit_version": manifest.toolkit_version,
        "cells": cell_rows,
        "cells_without_data": empty_cells,
        "skipped_archives": skipped,
        "lambda_min_vs_b": [
            {"b": b, "n_atoms": n, "lambda_min_mean": m, "lambda_min_median": md}
            for b, n, m, md in floor_rows
        ],
        "lambda_min_extrapolations": lambda_entries,
        "condensate_extrapolations": cond_entries,
        "power_law": power_entry,
        "locator": locator.to_dict(),
    }
    _write_json_atomic(analysis, report_dir / "analysis.json")
    _write_json_atomic(
        {
            "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "toolkit_version": __version__,
        },
        report_dir / "report_meta.json",
    )

    figure_paths = []
    if render_figures:
        from .figures import render_report_figures

        figure_paths = render_report_figures(
            summaries=summaries,
            small_cdfs=small_cdfs,
            lambda_extraps=lambda_extraps,
            cond_extraps=cond_extraps,
            power_fit=power_fit,
            zero_threshold=plan.zero_threshold,
            report_dir=report_dir,
        )

    return AnalysisReport(
        report_dir=report_dir,
        analysis=analysis,
        summaries=summaries,
        skipped_archives=skipped,
        figure_paths=figure_paths,
    )
