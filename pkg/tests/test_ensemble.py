import numpy as np
import pytest

from ermspec import (
    CloudConfig,
    UsageError,
    aggregate,
    build_matrix,
    eigenvalues,
    sample_cloud,
    small_lambda_cdf,
)
from ermspec.ensemble import (
    SMALL_LAMBDA_GRID,
    write_cdf_csv,
    write_histogram_csv,
    write_summary_json,
)

from conftest import synthetic_spectrum


def _real_spectra(n, b, count, base_seed=60):
    out = []
    for idx in range(count):
        cfg = CloudConfig(n_atoms=n, b=b, base_seed=base_seed, realization_index=idx)
        out.append(eigenvalues(build_matrix(sample_cloud(cfg))))
    return out


def test_identical_single_atom_spectra():
    spectra = [synthetic_spectrum([1.0]) for _ in range(3)]
    s = aggregate(spectra)
    assert s.n_realizations == 3
    assert s.lambda_min_mean == 1.0
    assert s.lambda_min_median == 1.0
    assert s.condensate_fraction_mean == 0.0
    assert s.condensate_fraction_stderr == 0.0


def test_synthetic_mixture_fraction_and_cdf():
    spectra = [synthetic_spectrum([0.0, 2.0]), synthetic_spectrum([1.0, 1.0])]
    s = aggregate(spectra)
    # one of four eigenvalues is a numerical zero, concentrated in one spectrum
    assert s.condensate_fraction_mean == 0.25
    # pooled CDF at threshold 1: three of {0, 1, 1, 2} are <= 1
    idx = int(np.argmin(np.abs(s.cdf.thresholds - 1.0)))
    assert abs(s.cdf.thresholds[idx] - 1.0) < 1e-9
    assert s.cdf.values[idx] == 0.75
    assert s.cdf.values[-1] == 1.0


def test_histogram_integrates_to_one():
    for spectra in (
        [synthetic_spectrum([0.0, 2.0]), synthetic_spectrum([1.0, 1.0])],
        _real_spectra(150, 8.0, 3),
        [synthetic_spectrum([0.5, 6.5, 9.0])],  # mass beyond the bulk window
    ):
        s = aggregate(spectra)
        total = float((s.histogram.densities * np.diff(s.histogram.bin_edges)).sum())
        assert abs(total - 1.0) < 1e-12


def _assert_consistent(s):
    widths = np.diff(s.histogram.bin_edges)
    cumulative = np.concatenate([[0.0], np.cumsum(s.histogram.densities * widths)])
    assert np.max(np.abs(cumulative - s.cdf.values)) < 1e-9


def test_histogram_and_cdf_stay_consistent():
    # cumulative bin mass must reproduce the CDF at every edge
    _assert_consistent(aggregate(_real_spectra(300, 12.0, 4)))
    _assert_consistent(aggregate(_real_spectra(200, 1.0, 3)))


def test_consistency_with_negative_solver_jitter():
    # eigenvalues at or below zero must not fall off the low edge
    spectra = [
        synthetic_spectrum([-3e-15, 0.0, 0.8, 3.2]),
        synthetic_spectrum([-1e-16, 0.4, 0.9, 2.7]),
    ]
    s = aggregate(spectra)
    _assert_consistent(s)
    assert s.cdf.values[-1] == 1.0
    assert s.condensate_fraction_mean == 3.0 / 8.0


def test_histogram_bulk_binning():
    s = aggregate([synthetic_spectrum([0.26, 1.07, 4.99])])
    edges = s.histogram.bin_edges
    # 100 bins of width 0.05 across [0, 5], one overflow bin on top
    assert edges.size == 102
    assert abs(edges[1] - 0.05) < 1e-12
    assert abs(edges[-2] - 5.0) < 1e-12
    assert edges[-1] > 5.0


def test_overflow_bin_catches_superradiant_tail():
    s = aggregate([synthetic_spectrum([0.1, 0.4, 8.5])])
    edges = s.histogram.bin_edges
    assert edges[-1] == 8.5
    # exactly one eigenvalue above the bulk window
    mass = s.histogram.densities[-1] * (edges[-1] - edges[-2])
    assert abs(mass - 1.0 / 3.0) < 1e-12


def test_fraction_stderr_from_known_counts():
    # counts 0, 1, 2 of N=4 across three realizations
    spectra = [
        synthetic_spectrum([0.5, 0.6, 0.7, 0.8]),
        synthetic_spectrum([0.0, 0.6, 0.7, 0.8]),
        synthetic_spectrum([0.0, 0.0, 0.7, 0.8]),
    ]
    s = aggregate(spectra)
    fractions = np.array([0.0, 0.25, 0.5])
    assert s.condensate_fraction_mean == 0.25
    expected = float(np.std(fractions, ddof=1) / np.sqrt(3))
    assert abs(s.condensate_fraction_stderr - expected) < 1e-15


def test_aggregate_rejects_mixed_cells():
    with pytest.raises(UsageError):
        aggregate([synthetic_spectrum([1.0]), synthetic_spectrum([0.5, 1.5])])
    with pytest.raises(UsageError):
        aggregate([synthetic_spectrum([1.0], b=1.0), synthetic_spectrum([1.0], b=2.0)])
    with pytest.raises(UsageError):
        aggregate([])


def test_small_lambda_cdf_thresholds():
    spectra = [synthetic_spectrum([1e-14, 1e-6, 1.0])]
    cdf = small_lambda_cdf(spectra, lambda_grid=[1e-10, 1e-5])
    assert cdf.values[0] == pytest.approx(1.0 / 3.0)
    assert cdf.values[1] == pytest.approx(2.0 / 3.0)


def test_small_lambda_default_grid():
    assert SMALL_LAMBDA_GRID.size == 60
    assert SMALL_LAMBDA_GRID[0] == pytest.approx(1e-13, rel=1e-12)
    assert SMALL_LAMBDA_GRID[-1] == pytest.approx(1e-2, rel=1e-12)
    spectra = [synthetic_spectrum([-1e-15, 1e-7, 0.5, 1.0])]
    cdf = small_lambda_cdf(spectra)
    # the sub-precision eigenvalue counts toward every threshold
    assert cdf.values[0] == 0.25
    assert cdf.values[-1] == 0.5
    assert np.all(np.diff(cdf.values) >= 0.0)


def test_small_lambda_grid_validation():
    spectra = [synthetic_spectrum([0.5])]
    small_lambda_cdf(spectra, lambda_grid=SMALL_LAMBDA_GRID)  # in-window passes
    with pytest.raises(UsageError):
        small_lambda_cdf(spectra, lambda_grid=[1e-14, 1e-5])
    with pytest.raises(UsageError):
        small_lambda_cdf(spectra, lambda_grid=[1e-5, 0.5])
    with pytest.raises(UsageError):
        small_lambda_cdf(spectra, lambda_grid=[1e-5, 1e-7])
    with pytest.raises(UsageError):
        small_lambda_cdf(spectra, lambda_grid=[])
    with pytest.raises(UsageError):
        small_lambda_cdf([], lambda_grid=[1e-5])


def test_quiet_phase_has_empty_small_lambda_tail():
    # below the transition no eigenvalue comes anywhere near zero
    spectra = _real_spectra(500, 3.0, 5)
    cdf = small_lambda_cdf(spectra)
    below_1em9 = cdf.values[cdf.thresholds <= 1e-9]
    assert np.all(below_1em9 == 0.0)


def test_pooled_skewness_contrast_across_phases():
    # the quiet-phase bulk sits near lambda = 1 and is only mildly skewed;
    # deep in the condensed phase the zero spike plus superradiant tail skew
    # the pooled spectrum hard (desk-scale N, frozen bounds)
    from scipy import stats

    def pooled_skew(b):
        vals = np.concatenate(
            [s.eigenvalues for s in _real_spectra(300, b, 5, base_seed=11)]
        )
        return float(stats.skew(vals))

    quiet = pooled_skew(1.0)
    condensed = pooled_skew(20.0)
    assert 0.3 < quiet < 1.0
    assert condensed > 2.0
    assert quiet < condensed / 3.0


def test_export_files(tmp_path):
    s = aggregate(_real_spectra(60, 5.0, 2))
    write_summary_json(s, tmp_path / "summary.json")
    write_histogram_csv(s.histogram, tmp_path / "hist.csv")
    write_cdf_csv(s.cdf, tmp_path / "cdf.csv")

    import json

    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["b"] == 5.0
    assert data["n_atoms"] == 60
    assert data["n_realizations"] == 2
    assert len(data["histogram"]["densities"]) == len(data["histogram"]["bin_edges"]) - 1
    assert len(data["cdf"]["values"]) == len(data["cdf"]["thresholds"])

    hist_lines = (tmp_path / "hist.csv").read_text().splitlines()
    assert hist_lines[0] == "value,density"
    assert len(hist_lines) == 1 + len(data["histogram"]["densities"])
    cdf_lines = (tmp_path / "cdf.csv").read_text().splitlines()
    assert cdf_lines[0] == "lambda,cdf"
    first = cdf_lines[1].split(",")
    assert float(first[1]) == data["cdf"]["values"][0]
