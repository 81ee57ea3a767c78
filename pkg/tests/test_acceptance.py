"""Release gate: one test and one printed pass/fail line per criterion.

Every guarantee the package makes is measured here at its stated tolerance,
against independent oracles or closed forms where they exist. The summary
lines come from the terminal hook in conftest.
"""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from ermspec import (
    CloudConfig,
    SweepPlan,
    analyze,
    b_c0,
    build_matrix,
    decay_curve,
    eigenvalues,
    lbar_analytic,
    lbar_monte_carlo,
    load_plan,
    pairwise_distance,
    run_sweep,
    sample_cloud,
    scan_power_law,
    sinc,
)
from ermspec.ensemble import EnsembleSummary
from ermspec.fits import extrapolate_condensate, extrapolate_lambda_min
from ermspec.harness import plan_from_dict

import oracles
from conftest import record_acceptance


def _check(number: int, label: str, passed: bool, detail: str = "") -> None:
    record_acceptance(number, label, passed, detail)
    assert passed, f"criterion {number}: {label} ({detail})"


def _summary(n_atoms, b, lambda_min_mean, fraction):
    return EnsembleSummary(
        b=b, n_atoms=n_atoms, n_realizations=10,
        lambda_min_mean=lambda_min_mean, lambda_min_median=lambda_min_mean,
        condensate_fraction_mean=fraction, condensate_fraction_stderr=0.0,
        histogram=None, cdf=None,
    )


@pytest.fixture(scope="module")
def default_report(tmp_path_factory):
    """Run the shipped default plan once; several criteria read from it."""
    shipped = load_plan(Path(__file__).parent.parent / "plans" / "default_plan.json")
    data = shipped.to_dict()
    data["output_dir"] = str(tmp_path_factory.mktemp("default") / "runs")
    plan = plan_from_dict(data)
    manifest = run_sweep(plan, workers=max(1, min(4, os.cpu_count() or 1)))
    assert not manifest.error_cells()
    report = analyze(manifest, locator_pairs=10_000, render_figures=False)
    assert not report.skipped_archives
    return report


def test_criterion_1_structural_invariants():
    rng = np.random.default_rng(20260814)
    worst_trace = worst_floor = worst_top = 0.0
    entries_bounded = True
    for _ in range(50):
        n = int(rng.integers(2, 501))
        b = float(rng.uniform(0.1, 30.0))
        config = CloudConfig(n_atoms=n, b=b, base_seed=int(rng.integers(1 << 32)))
        matrix = build_matrix(sample_cloud(config))
        vals = eigenvalues(matrix).eigenvalues
        entries_bounded &= bool(np.abs(matrix.entries).max() <= 1.0)
        worst_trace = max(worst_trace, abs(float(vals.sum()) - n) / n)
        worst_floor = max(worst_floor, -float(vals[0]) / n)
        worst_top = max(worst_top, (float(vals[-1]) - n) / n)
    ok = (worst_trace <= 1e-10 and worst_floor <= 1e-10
          and worst_top <= 1e-10 and entries_bounded)
    _check(1, "structural invariants over 50 random cells", ok,
           f"trace dev {worst_trace:.1e}, floor {worst_floor:.1e}, "
           f"top {worst_top:.1e}, entries bounded {entries_bounded}")


def test_criterion_2_two_atom_closed_form():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        b = float(rng.uniform(0.3, 25.0))
        config = CloudConfig(n_atoms=2, b=b, base_seed=int(rng.integers(1 << 32)))
        cloud = sample_cloud(config)
        s = abs(sinc(pairwise_distance(cloud, 0, 1) * math.sqrt(2.0 / b)))
        expected = np.array([1.0 - s, 1.0 + s])
        got = eigenvalues(build_matrix(cloud)).eigenvalues
        worst = max(worst, float(np.abs(got - expected).max()))
    _check(2, "two-atom spectrum matches 1 +/- sinc over 1000 pairs",
           worst <= 1e-12, f"max dev {worst:.1e}")


def test_criterion_3_bracketing_oracle_equivalence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        b = float(rng.uniform(0.5, 20.0))
        config = CloudConfig(n_atoms=n, b=b, base_seed=int(rng.integers(1 << 32)))
        matrix = build_matrix(sample_cloud(config))
        got = eigenvalues(matrix).eigenvalues
        ref = oracles.bracketed_eigenvalues(matrix.entries)
        worst = max(worst, float(np.abs(got - ref).max()))
    _check(3, "solver matches root-bracketing oracle on 100 small clouds",
           worst <= 1e-10, f"max dev {worst:.1e}")


def test_criterion_4_locator_constants():
    lbar = lbar_analytic()
    onset = b_c0(lbar)
    estimate, stderr = lbar_monte_carlo(1_000_000, seed=2026)
    rel = abs(estimate - lbar) / lbar
    ok = (round(lbar, 3) == 2.037
          and abs(onset - 11.277) <= 1e-3
          and rel <= 0.005)
    _check(4, "onset locator constants and 1e6-pair Monte Carlo", ok,
           f"lbar {lbar:.6f}, b_c0 {onset:.4f}, MC rel dev {rel:.2e} "
           f"(stderr {stderr:.2e})")


def test_criterion_5_decay_dynamics():
    # single atom: survival is exactly exponential
    config = CloudConfig(n_atoms=1, b=3.0, base_seed=5)
    matrix = build_matrix(sample_cloud(config))
    times = np.linspace(0.0, 5.0, 51)
    curve = decay_curve(matrix, np.array([1.0]), times)
    worst_single = float(np.abs(curve.survival - np.exp(-times)).max())

    # five atoms: against fixed-step integration of the amplitude equations
    config = CloudConfig(n_atoms=5, b=4.0, base_seed=7)
    matrix = build_matrix(sample_cloud(config))
    initial = np.full(5, 1.0 / math.sqrt(5.0))
    checkpoints = np.array([0.5, 1.0, 1.5, 2.0, 3.0])
    curve = decay_curve(matrix, initial, checkpoints)
    worst_multi = 0.0
    for t, got in zip(checkpoints, curve.survival):
        ref = oracles.rk4_survival(matrix.entries, initial, float(t))
        worst_multi = max(worst_multi, abs(float(got) - ref))

    ok = worst_single <= 1e-12 and worst_multi <= 1e-6
    _check(5, "decay dynamics against closed form and integration oracle", ok,
           f"single-atom dev {worst_single:.1e}, five-atom dev {worst_multi:.1e}")


def test_criterion_6_synthetic_fit_recovery():
    rng = np.random.default_rng(0)
    b_grid = np.arange(4.8, 10.01, 0.2)
    fractions = 0.3 * (b_grid - 4.735) ** 0.623
    fractions *= 1.0 + 0.05 * rng.standard_normal(b_grid.size)
    fit = scan_power_law(list(zip(b_grid.tolist(), fractions.tolist())))
    dev_bc = abs(fit.b_c_prime - 4.735)
    dev_beta = abs(fit.beta_exponent - 0.623)

    lam_slope, lam_icpt = -1.1, -2.3
    frac_slope, frac_icpt = -0.8, 0.42
    planted = []
    for n in (1000, 2000, 5000, 10000):
        x = 1.0 / math.log10(n)
        planted.append(_summary(
            n, 6.0,
            lambda_min_mean=10.0 ** (1.0 / (lam_icpt + lam_slope * x)),
            fraction=frac_icpt + frac_slope * x,
        ))
    lam_fit = extrapolate_lambda_min(planted).fit
    cond_fit = extrapolate_condensate(planted).fit
    dev_linear = max(
        abs(lam_fit.slope - lam_slope), abs(lam_fit.intercept - lam_icpt),
        abs(cond_fit.slope - frac_slope), abs(cond_fit.intercept - frac_icpt),
    )

    ok = dev_bc <= 0.05 and dev_beta <= 0.05 and dev_linear <= 1e-9
    _check(6, "planted power law and linear extrapolations recovered", ok,
           f"b_c' dev {dev_bc:.3f}, beta dev {dev_beta:.3f}, "
           f"linear dev {dev_linear:.1e}")


def test_criterion_7_desk_scale_transition_bracket(default_report):
    analysis = default_report.analysis
    cells = {(row["b"], row["n_atoms"]): row for row in analysis["cells"]}
    quiet = all(
        cells[(3.0, n)]["condensate_fraction_mean"] == 0.0
        for n in (500, 1000, 2000)
    )

    fractions = {
        e["b"]: e["asymptotic_fraction"]
        for e in analysis["condensate_extrapolations"]
        if "asymptotic_fraction" in e
    }
    ladder = [fractions[b] for b in (6.0, 8.0, 10.0, 20.0)]
    growing = all(lo < hi for lo, hi in zip(ladder, ladder[1:]))
    saturates = ladder[-1] > 0.8

    b_c_prime = analysis["power_law"].get("b_c_prime")
    bracketed = b_c_prime is not None and 4.0 <= b_c_prime <= 5.5

    verdicts = {e["b"]: e.get("verdict") for e in analysis["lambda_min_extrapolations"]}
    phases = verdicts.get(3.0) == "gapped" and verdicts.get(6.0) == "vanishing"

    ok = quiet and growing and saturates and bracketed and phases
    _check(7, "default-plan ensembles bracket the transition", ok,
           f"b=3 quiet {quiet}; fractions at 6/8/10/20 "
           f"{['%.3f' % f for f in ladder]}; b_c' {b_c_prime}; "
           f"verdicts b=3 {verdicts.get(3.0)}, b=6 {verdicts.get(6.0)}")


def test_criterion_8_determinism_and_resume(tmp_path):
    def plan_for(name):
        return SweepPlan(
            b_values=(2.0, 6.0), n_values=(8, 16), realizations_per_cell=2,
            base_seed=77, output_dir=str(tmp_path / name),
        )

    first = run_sweep(plan_for("a"))
    second = run_sweep(plan_for("b"))
    names = sorted(c.path for c in first.cells)
    identical = all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
        for n in names
    )

    blobs = {n: (tmp_path / "a" / n).read_bytes() for n in names}
    mtimes = {n: (tmp_path / "a" / n).stat().st_mtime_ns for n in names}
    (tmp_path / "a" / names[0]).unlink()
    run_sweep(plan_for("a"))
    recomputed = (tmp_path / "a" / names[0]).read_bytes() == blobs[names[0]]
    untouched = all(
        (tmp_path / "a" / n).stat().st_mtime_ns == mtimes[n] for n in names[1:]
    )

    ok = identical and recomputed and untouched and not second.error_cells()
    _check(8, "byte-identical re-runs and resume without recomputation", ok,
           f"identical {identical}, resumed byte-identical {recomputed}, "
           f"others untouched {untouched}")
