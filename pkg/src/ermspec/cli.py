"""Command-line interface.

Exit status: 0 on full success; 1 when a sweep recorded failed cells or an
analysis had to skip archives; 2 for configuration and usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from ._version import __version__
from .cloud import CloudConfig, sample_cloud
from .errors import ErmspecError
from .fits import (
    DEFAULT_FIT_B_MAX,
    DEFAULT_FIT_MARGIN,
    scan_power_law,
)
from .locator import locator_result
from .matrix import build_matrix
from .spectral import decay_curve, eigenvalues


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ermspec",
        description=(
            "Spectral ensembles of Gaussian-cloud emission-rate matrices: "
            "run sweeps, analyze them, and probe single realizations."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="execute a sweep plan (resumable)")
    p.add_argument("plan", help="path to a sweep plan JSON file")
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel workers (default: ${harness.WORKERS_ENV} or 1)")
    p.add_argument("--output-dir", default=None,
                   help="override the plan's output directory")
    p.add_argument("--atom-cap", type=int, default=harness.DEFAULT_ATOM_CAP,
                   help="largest N accepted without --allow-large")
    p.add_argument("--allow-large", action="store_true",
                   help="accept N beyond the dense-solve cap")

    p = sub.add_parser("analyze", help="build the report bundle for a sweep")
    p.add_argument("manifest", help="path to a sweep manifest JSON file")
    p.add_argument("--report-dir", default=None,
                   help="where to write the report (default: <sweep dir>/report)")
    p.add_argument("--locator-pairs", type=int, default=1_000_000,
                   help="Monte Carlo pairs for the onset estimate")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")

    p = sub.add_parser("spectrum", help="print the spectrum of one realization as CSV")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--idx", type=int, default=0, help="realization index")

    p = sub.add_parser("decay", help="print the survival probability curve as CSV")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--idx", type=int, default=0, help="realization index")

    p = sub.add_parser("locator", help="print the condensate onset estimate as JSON")
    p.add_argument("--pairs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fit-powerlaw", help="fit a critical power law to a fractions CSV")
    p.add_argument("csv", help="CSV with header containing b and fraction columns")
    p.add_argument("--b-max", type=float, default=DEFAULT_FIT_B_MAX)
    p.add_argument("--margin", type=float, default=DEFAULT_FIT_MARGIN)
    p.add_argument("--candidates", type=float, nargs=3, default=None,
                   metavar=("START", "STOP", "STEP"))
    return parser


def _cmd_sweep(args) -> int:
    plan = harness.load_plan(args.plan)
    if args.output_dir is not None:
        data = plan.to_dict()
        data["output_dir"] = args.output_dir
        plan = harness.plan_from_dict(data)
    manifest = harness.run_sweep(
        plan,
        workers=args.workers,
        atom_cap=args.atom_cap,
        allow_large=args.allow_large,
    )
    ok = len(manifest.ok_cells())
    bad = len(manifest.error_cells())
    print(f"sweep finished: {ok} cells ok, {bad} failed")
    print(f"manifest: {harness.Path(plan.output_dir) / harness.MANIFEST_NAME}")
    for cell in manifest.error_cells():
        print(f"  failed {cell.path}: {cell.error}", file=sys.stderr)
    return 0 if bad == 0 else 1


def _cmd_analyze(args) -> int:
    report = harness.analyze(
        args.manifest,
        report_dir=args.report_dir,
        locator_pairs=args.locator_pairs,
        render_figures=not args.no_figures,
    )
    print(f"report written to {report.report_dir}")
    for item in report.skipped_archives:
        print(f"  skipped {item['path']}: {item['reason']}", file=sys.stderr)
    return 0 if not report.skipped_archives else 1


def _realization_spectrum(args):
    config = CloudConfig(
        n_atoms=args.n, b=args.b, base_seed=args.seed, realization_index=args.idx
    )
    return eigenvalues(build_matrix(sample_cloud(config)))


def _cmd_spectrum(args) -> int:
    spectrum = _realization_spectrum(args)
    print("index,eigenvalue")
    for i, v in enumerate(spectrum.eigenvalues):
        print(f"{i},{float(v)!r}")
    return 0


def _cmd_decay(args) -> int:
    if args.steps < 1:
        raise ErmspecError(f"--steps must be >= 1, got {args.steps}")
    if args.t_max <= 0.0:
        raise ErmspecError(f"--t-max must be positive, got {args.t_max}")
    config = CloudConfig(
        n_atoms=args.n, b=args.b, base_seed=args.seed, realization_index=args.idx
    )
    matrix = build_matrix(sample_cloud(config))
    # uniform unit initial state: every atom equally excited
    initial = np.full(args.n, 1.0 / np.sqrt(args.n))
    times = np.linspace(0.0, args.t_max, args.steps + 1)
    curve = decay_curve(matrix, initial, times)
    print("time,survival")
    for t, p in zip(curve.times, curve.survival):
        print(f"{float(t)!r},{float(p)!r}")
    return 0


def _cmd_locator(args) -> int:
    result = locator_result(args.pairs, seed=args.seed)
    print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    return 0


def _read_fractions_csv(path):
    import csv

    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"b", "fraction"} <= set(reader.fieldnames):
            raise ErmspecError(f"{path}: need a CSV header with b and fraction columns")
        points = []
        for row in reader:
            points.append((float(row["b"]), float(row["fraction"])))
    return points


def _cmd_fit_powerlaw(args) -> int:
    points = _read_fractions_csv(args.csv)
    candidates = None
    if args.candidates is not None:
        start, stop, step = args.candidates
        if step <= 0.0 or stop <= start:
            raise ErmspecError("--candidates needs STOP > START and STEP > 0")
        count = int(round((stop - start) / step)) + 1
        candidates = np.linspace(start, stop, count)
    fit = scan_power_law(
        points, candidates=candidates, b_max=args.b_max, window_margin=args.margin
    )
    payload = {
        "b_c_prime": fit.b_c_prime,
        "beta_exponent": fit.beta_exponent,
        "amplitude": fit.amplitude,
        "r_squared": fit.r_squared,
        "n_points": fit.fit.n_points,
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "spectrum": _cmd_spectrum,
    "decay": _cmd_decay,
    "locator": _cmd_locator,
    "fit-powerlaw": _cmd_fit_powerlaw,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ErmspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
