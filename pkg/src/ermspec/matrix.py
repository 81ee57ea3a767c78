"""Dense emission-rate matrices over Gaussian clouds.

The matrix element between atoms i and j is sinc of sqrt(N/b) times their
separation, with unit diagonal. Entries are assembled from the condensed
pairwise-distance vector so each unordered pair is evaluated exactly once and
the result is exactly symmetric.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .cloud import Cloud, CloudConfig
from .errors import ResourceError, UsageError

# Below this |x| the two-term series 1 - x^2/6 is exact to double precision
# (the next term is x^4/120 ~ 8e-19) and avoids the 0/0 at the origin.
SINC_TAYLOR_CUTOFF = 1e-4

MATRIX_MAGIC = b"ERMS"
_MATRIX_HEADER = struct.Struct("<4sQd")


@dataclass(frozen=True)
class EmissionMatrix:
    """Dense symmetric rate matrix with its provenance."""

    entries: np.ndarray
    n_atoms: int
    b: float
    provenance: CloudConfig


def sinc(x):
    """Unnormalized sinc, sin(x)/x, with sinc(0) = 1.

    Accepts a scalar or an ndarray; scalars come back as float. Relative
    accuracy is within a few ulp everywhere, including near the zeros of sin.
    """
    if np.ndim(x) == 0:
        xf = float(x)
        if abs(xf) < SINC_TAYLOR_CUTOFF:
            return 1.0 - xf * xf / 6.0
        return float(np.sin(xf)) / xf
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    small = np.abs(arr) < SINC_TAYLOR_CUTOFF
    xs = arr[small]
    out[small] = 1.0 - xs * xs / 6.0
    xl = arr[~small]
    out[~small] = np.sin(xl) / xl
    return out


def build_matrix(cloud: Cloud) -> EmissionMatrix:
    """Assemble the emission-rate matrix of a cloud.

    Storage is dense float64, so memory grows as N^2; an allocation failure is
    reported as a ResourceError naming the offending N.
    """
    cfg = cloud.config
    n = cfg.n_atoms
    try:
        condensed = pdist(cloud.positions)
        scale = np.sqrt(n / cfg.b)
        entries = squareform(sinc(scale * condensed), checks=False)
        np.fill_diagonal(entries, 1.0)
    except MemoryError as exc:
        raise ResourceError(
            f"cannot hold a dense {n}x{n} emission matrix in memory (N={n})"
        ) from exc
    return EmissionMatrix(entries=entries, n_atoms=n, b=cfg.b, provenance=cfg)


def peak_density(n_atoms: int, b: float) -> float:
    """Peak number density per cubic resonant wavelength, (2 pi b)^1.5 / sqrt(N).

    Useful for judging whether a parameter pair sits in the dilute regime.
    """
    if not isinstance(n_atoms, (int, np.integer)) or isinstance(n_atoms, bool) or n_atoms < 1:
        raise UsageError(f"n_atoms must be a positive integer, got {n_atoms!r}")
    bf = float(b)
    if not math.isfinite(bf) or bf <= 0.0:
        raise UsageError(f"b must be positive and finite, got {b!r}")
    return (2.0 * math.pi * bf) ** 1.5 / math.sqrt(n_atoms)


def write_matrix_binary(matrix: EmissionMatrix, path) -> None:
    """Debug dump: magic 'ERMS', u64 N, f64 b, then N*N row-major f64, all LE."""
    entries = np.ascontiguousarray(matrix.entries, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_MATRIX_HEADER.pack(MATRIX_MAGIC, matrix.n_atoms, matrix.b))
        fh.write(entries.tobytes(order="C"))


def read_matrix_binary(path) -> tuple[np.ndarray, int, float]:
    """Read a debug dump back; returns (entries, n_atoms, b).

    Provenance is not stored in this format, only the raw matrix.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _MATRIX_HEADER.size:
        raise UsageError(f"{path}: truncated matrix dump")
    magic, n, b = _MATRIX_HEADER.unpack_from(raw)
    if magic != MATRIX_MAGIC:
        raise UsageError(f"{path}: not a matrix dump (bad magic {magic!r})")
    payload = raw[_MATRIX_HEADER.size:]
    expected = 8 * n * n
    if len(payload) != expected:
        raise UsageError(
            f"{path}: expected {expected} payload bytes for N={n}, found {len(payload)}"
        )
    entries = np.frombuffer(payload, dtype="<f8").reshape(n, n).copy()
    return entries, int(n), float(b)
