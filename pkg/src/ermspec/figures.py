"""Figure rendering for report bundles. All output goes to PNG files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_DPI = 150


def _save(fig, path: Path, paths: list) -> None:
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    paths.append(path)


def _largest_n_view(summaries: dict) -> dict:
    view = {}
    for (b, n), s in summaries.items():
        if b not in view or n > view[b].n_atoms:
            view[b] = s
    return view


def _distribution_figure(view: dict, fig_dir: Path, paths: list) -> None:
    bs = sorted(view)
    if len(bs) > 4:
        idx = [round(i * (len(bs) - 1) / 3) for i in range(4)]
        bs = [bs[i] for i in sorted(set(idx))]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    for ax, b in zip(axes.flat, bs):
        s = view[b]
        edges = s.histogram.bin_edges
        centers = 0.5 * (edges[:-1] + edges[1:])
        ax.step(centers, s.histogram.densities, where="mid")
        ax.axvline(1.0, color="gray", ls=":", lw=0.8)
        ax.set_title(f"b = {b:g}, N = {s.n_atoms}", fontsize=9)
        ax.set_xlim(0.0, 3.0)
    for ax in axes.flat[len(bs):]:
        ax.set_visible(False)
    fig.supxlabel("eigenvalue")
    fig.supylabel("density")
    fig.tight_layout()
    _save(fig, fig_dir / "eigenvalue_distributions.png", paths)


def _small_cdf_figure(summaries: dict, small_cdfs: dict, fig_dir: Path, paths: list) -> None:
    view = _largest_n_view(summaries)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for b in sorted(view):
        key = (b, view[b].n_atoms)
        cdf = small_cdfs.get(key)
        if cdf is None:
            continue
        ax.plot(cdf.thresholds, cdf.values, label=f"b = {b:g}")
    ax.set_xscale("log")
    ax.set_xlabel("eigenvalue threshold")
    ax.set_ylabel("fraction of eigenvalues below")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    _save(fig, fig_dir / "small_lambda_cdf.png", paths)


def _floor_figure(view: dict, fig_dir: Path, paths: list) -> None:
    bs = sorted(view)
    means = [max(view[b].lambda_min_mean, 1e-17) for b in bs]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.semilogy(bs, means, "o-")
    ax.set_xlabel("cooperativeness b")
    ax.set_ylabel("mean smallest eigenvalue")
    fig.tight_layout()
    _save(fig, fig_dir / "lambda_min_vs_b.png", paths)


def _condensate_figure(cond_extraps, power_fit, fig_dir: Path, paths: list) -> None:
    if not cond_extraps:
        return
    bs = [e.b for e in cond_extraps]
    fractions = [e.asymptotic_fraction for e in cond_extraps]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(bs, fractions, "o", label="extrapolated fraction")
    if power_fit is not None:
        import numpy as np

        lo = power_fit.b_c_prime + 1e-3
        hi = max(bs)
        grid = np.linspace(lo, hi, 200)
        curve = power_fit.amplitude * (grid - power_fit.b_c_prime) ** power_fit.beta_exponent
        ax.plot(grid, curve, "--", label=(
            f"fit: {power_fit.amplitude:.3g} (b - {power_fit.b_c_prime:g})^"
            f"{power_fit.beta_exponent:.3g}"
        ))
    ax.set_xlabel("cooperativeness b")
    ax.set_ylabel("asymptotic condensate fraction")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, fig_dir / "condensate_fraction_vs_b.png", paths)


def _scan_figure(power_fit, cond_extraps, fig_dir: Path, paths: list) -> None:
    if power_fit is None:
        return
    import numpy as np

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    grid = power_fit.scan_grid
    ax1.plot(grid[:, 0], grid[:, 1], lw=1.0)
    ax1.axvline(power_fit.b_c_prime, color="tab:red", ls=":", lw=0.8)
    ax1.set_xlabel("candidate threshold")
    ax1.set_ylabel("r squared")
    from .fits import DEFAULT_FIT_B_MAX

    pts = [
        (e.b, e.asymptotic_fraction)
        for e in cond_extraps
        if e.asymptotic_fraction > 0.0
        and power_fit.b_c_prime < e.b <= DEFAULT_FIT_B_MAX
    ]
    if pts:
        xs = np.log10([b - power_fit.b_c_prime for b, _ in pts])
        ys = np.log10([f for _, f in pts])
        ax2.plot(xs, ys, "o", ms=5)
        span = np.linspace(xs.min(), xs.max(), 50)
        fit = power_fit.fit
        ax2.plot(span, fit.intercept + fit.slope * span, "--", lw=1.0)
    ax2.set_xlabel("log10(b - b_c')")
    ax2.set_ylabel("log10(fraction)")
    ax2.set_title(
        f"b_c' = {power_fit.b_c_prime:g}, beta = {power_fit.beta_exponent:.3f}",
        fontsize=9,
    )
    fig.tight_layout()
    _save(fig, fig_dir / "powerlaw_scan.png", paths)


def _scaling_figures(lambda_extraps, cond_extraps, zero_threshold, fig_dir: Path, paths: list) -> None:
    if lambda_extraps:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        floor_y = 1.0 / math.log10(zero_threshold)
        ax.axhspan(floor_y, 0.0, color="khaki", alpha=0.4, lw=0)
        for e in lambda_extraps:
            if not e.points:
                continue
            xs = [1.0 / math.log10(n) for n, _ in e.points]
            ys = [1.0 / math.log10(m) for _, m in e.points]
            line = ax.plot(xs, ys, "o", ms=4, label=f"b = {e.b:g}")
            if e.fit is not None:
                color = line[0].get_color()
                ax.plot(
                    [0.0, max(xs)],
                    [e.fit.intercept, e.fit.intercept + e.fit.slope * max(xs)],
                    "--", lw=0.8, color=color,
                )
        ax.set_xlabel("1 / log10(N)")
        ax.set_ylabel("1 / log10(smallest eigenvalue)")
        ax.set_xlim(left=0.0)
        ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        _save(fig, fig_dir / "lambda_min_scaling.png", paths)
    if cond_extraps:
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for e in cond_extraps:
            xs = [1.0 / math.log10(n) for n, _ in e.points]
            ys = [f for _, f in e.points]
            line = ax.plot(xs, ys, "o", ms=4, label=f"b = {e.b:g}")
            color = line[0].get_color()
            ax.plot(
                [0.0, max(xs)],
                [e.fit.intercept, e.fit.intercept + e.fit.slope * max(xs)],
                "--", lw=0.8, color=color,
            )
        ax.set_xlabel("1 / log10(N)")
        ax.set_ylabel("condensate fraction")
        ax.set_xlim(left=0.0)
        ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        _save(fig, fig_dir / "condensate_scaling.png", paths)


def render_report_figures(
    summaries: dict,
    small_cdfs: dict,
    lambda_extraps,
    cond_extraps,
    power_fit,
    zero_threshold: float,
    report_dir,
) -> list:
    """Render every report figure that has data behind it; returns the paths."""
    fig_dir = Path(report_dir) / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    paths: list = []
    if summaries:
        view = _largest_n_view(summaries)
        _distribution_figure(view, fig_dir, paths)
        _small_cdf_figure(summaries, small_cdfs, fig_dir, paths)
        _floor_figure(view, fig_dir, paths)
    _condensate_figure(cond_extraps, power_fit, fig_dir, paths)
    _scan_figure(power_fit, cond_extraps, fig_dir, paths)
    _scaling_figures(lambda_extraps, cond_extraps, zero_threshold, fig_dir, paths)
    return paths
