import sys
from pathlib import Path

import numpy as np

from ermspec import CloudConfig, Spectrum

sys.path.insert(0, str(Path(__file__).parent))

# One pass/fail line per acceptance criterion, printed after the run.
ACCEPTANCE_RESULTS: dict = {}


def record_acceptance(number: int, label: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[number] = (label, passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        label, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number} [{status}] {label}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


def synthetic_spectrum(values, b: float = 1.0, base_seed: int = 0,
                       realization_index: int = 0) -> Spectrum:
    """Spectrum built from explicit eigenvalues, bypassing the solver."""
    vals = np.sort(np.asarray(values, dtype=np.float64))
    cfg = CloudConfig(
        n_atoms=vals.size, b=b, base_seed=base_seed,
        realization_index=realization_index,
    )
    return Spectrum(
        eigenvalues=vals,
        n_atoms=vals.size,
        b=float(b),
        provenance=cfg,
        psd_violation=min(0.0, float(vals[0])),
    )
