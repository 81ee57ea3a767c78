"""Eigenvalue engine, decay curves, and the spectrum archive format."""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .cloud import CloudConfig
from .errors import NumericalError, UsageError
from .matrix import EmissionMatrix

# Eigenvalues below this are numerically indistinguishable from zero at
# double precision once the solver's own error is accounted for.
ZERO_THRESHOLD = 1e-13

# Tolerated negative excursion of the smallest eigenvalue, per atom.
PSD_TOL_PER_ATOM = 1e-10

# Relative tolerance on the trace identity sum(lambda) = N.
TRACE_RTOL = 1e-10

ARCHIVE_MAGIC = b"ERMSPEC1"
_ARCHIVE_HEADER = struct.Struct("<8sQdQQ")


def psd_tolerance(n_atoms: int) -> float:
    return PSD_TOL_PER_ATOM * n_atoms


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of one realization, ascending, with provenance.

    psd_violation records how far below zero the smallest eigenvalue fell
    (0.0 when none did); it is informational as long as the excursion stays
    within psd_tolerance(n_atoms).
    """

    eigenvalues: np.ndarray
    n_atoms: int
    b: float
    provenance: CloudConfig
    psd_violation: float


@dataclass(frozen=True)
class DecayCurve:
    """Survival probability sampled on a time grid (time unit: one inverse
    single-atom rate)."""

    times: np.ndarray
    survival: np.ndarray


def _cell_tag(cfg: CloudConfig) -> str:
    return (
        f"N={cfg.n_atoms} b={cfg.b:.12g} base_seed={cfg.base_seed} "
        f"realization_index={cfg.realization_index}"
    )


def eigenvalues(matrix: EmissionMatrix) -> Spectrum:
    """Full eigenvalue decomposition of an emission matrix.

    The result is checked against the structural guarantees of the kernel:
    the spectrum must sum to N to relative 1e-10, must not dip below
    -psd_tolerance(N), and must not exceed N by more than the same margin.
    Violations raise NumericalError naming the offending realization; nothing
    is clamped.
    """
    cfg = matrix.provenance
    try:
        vals = np.linalg.eigvalsh(matrix.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed for {_cell_tag(cfg)}: {exc}") from exc
    n = matrix.n_atoms
    eps = psd_tolerance(n)
    trace_err = abs(float(vals.sum()) - n) / n
    if trace_err > TRACE_RTOL:
        raise NumericalError(
            f"trace identity violated for {_cell_tag(cfg)}: relative error {trace_err:.3e}"
        )
    lo = float(vals[0])
    hi = float(vals[-1])
    if lo < -eps:
        raise NumericalError(
            f"eigenvalue {lo:.6e} below -{eps:.3e} for {_cell_tag(cfg)}"
        )
    if hi > n + eps:
        raise NumericalError(
            f"eigenvalue {hi:.6e} above N + {eps:.3e} for {_cell_tag(cfg)}"
        )
    return Spectrum(
        eigenvalues=vals,
        n_atoms=n,
        b=matrix.b,
        provenance=cfg,
        psd_violation=min(0.0, lo),
    )


def min_eigenvalue(spectrum: Spectrum) -> float:
    return float(spectrum.eigenvalues[0])


def count_condensate(spectrum: Spectrum, threshold: float = ZERO_THRESHOLD) -> int:
    """Number of eigenvalues strictly below the zero threshold."""
    t = float(threshold)
    if not math.isfinite(t) or t <= 0.0:
        raise UsageError(f"threshold must be positive and finite, got {threshold!r}")
    return int(np.searchsorted(spectrum.eigenvalues, t, side="left"))


def decay_curve(matrix: EmissionMatrix, initial: np.ndarray, times: np.ndarray) -> DecayCurve:
    """Survival probability of an initial single-excitation amplitude vector.

    The amplitudes evolve under minus one half the rate matrix, so each
    eigenmode k decays as exp(-lambda_k t) in probability. ``initial`` must be
    unit-norm to 1e-12; ``times`` must be a non-negative strictly increasing
    1-D grid.
    """
    init = np.asarray(initial, dtype=np.float64)
    if init.shape != (matrix.n_atoms,):
        raise UsageError(
            f"initial state must have shape ({matrix.n_atoms},), got {init.shape}"
        )
    norm = float(np.linalg.norm(init))
    if abs(norm - 1.0) > 1e-12:
        raise UsageError(f"initial state must be unit norm, got |v| = {norm!r}")
    t = np.asarray(times, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise UsageError("times must be a non-empty 1-D array")
    if not np.all(np.isfinite(t)) or t[0] < 0.0 or np.any(np.diff(t) <= 0.0):
        raise UsageError("times must be finite, non-negative, and strictly increasing")
    try:
        w, vecs = np.linalg.eigh(matrix.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed for {_cell_tag(matrix.provenance)}: {exc}"
        ) from exc
    weights = np.square(vecs.T @ init)
    survival = weights @ np.exp(-np.outer(w, t))
    return DecayCurve(times=t.copy(), survival=survival)


# ---------------------------------------------------------------------------
# Archive format: magic 'ERMSPEC1', u64 N, f64 b, u64 base_seed,
# u64 realization_index, then N ascending f64 eigenvalues, all little-endian.
# ---------------------------------------------------------------------------

def archive_filename(b: float, n_atoms: int, realization_index: int) -> str:
    return f"spec_b{b:.12g}_N{n_atoms}_r{realization_index}.bin"


def write_spectrum_archive(spectrum: Spectrum, path) -> None:
    """Write one spectrum; the file appears atomically via rename."""
    cfg = spectrum.provenance
    header = _ARCHIVE_HEADER.pack(
        ARCHIVE_MAGIC,
        spectrum.n_atoms,
        spectrum.b,
        cfg.base_seed,
        cfg.realization_index,
    )
    payload = np.ascontiguousarray(spectrum.eigenvalues, dtype="<f8").tobytes()
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_spectrum_archive(path) -> Spectrum:
    """Read a spectrum archive.

    Only structural properties are checked here (magic, payload size, finite
    ascending eigenvalues); the physical invariants were enforced when the
    spectrum was computed, and synthetic archives are legitimate inputs for
    the analysis pipeline.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _ARCHIVE_HEADER.size:
        raise UsageError(f"{path}: truncated spectrum archive")
    magic, n, b, base_seed, realization_index = _ARCHIVE_HEADER.unpack_from(raw)
    if magic != ARCHIVE_MAGIC:
        raise UsageError(f"{path}: not a spectrum archive (bad magic {magic!r})")
    payload = raw[_ARCHIVE_HEADER.size:]
    if len(payload) != 8 * n:
        raise UsageError(
            f"{path}: expected {8 * n} payload bytes for N={n}, found {len(payload)}"
        )
    vals = np.frombuffer(payload, dtype="<f8").copy()
    if not np.all(np.isfinite(vals)):
        raise UsageError(f"{path}: archive contains non-finite eigenvalues")
    if np.any(np.diff(vals) < 0.0):
        raise UsageError(f"{path}: eigenvalues are not ascending")
    cfg = CloudConfig(
        n_atoms=int(n), b=float(b), base_seed=int(base_seed),
        realization_index=int(realization_index),
    )
    lo = float(vals[0]) if n else 0.0
    return Spectrum(
        eigenvalues=vals,
        n_atoms=int(n),
        b=float(b),
        provenance=cfg,
        psd_violation=min(0.0, lo),
    )
