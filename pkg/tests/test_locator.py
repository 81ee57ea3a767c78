import math

import mpmath
import numpy as np
import pytest

from ermspec import (
    UsageError,
    b_c0,
    lbar_analytic,
    lbar_monte_carlo,
    locator_result,
)


def test_analytic_constants():
    mpmath.mp.dps = 30
    reference = float(mpmath.exp(1 - mpmath.euler / 2))
    assert abs(lbar_analytic() - reference) < 1e-12
    # printed-precision agreement with the standard value 2.037
    assert round(lbar_analytic(), 3) == 2.037
    assert abs(b_c0(lbar_analytic()) - 11.277) < 1e-3


def test_onset_formula():
    assert b_c0(1.0) == math.e
    assert b_c0(2.0) == 4.0 * math.e
    with pytest.raises(UsageError):
        b_c0(0.0)
    with pytest.raises(UsageError):
        b_c0(float("nan"))


def test_onset_sits_above_measured_transition():
    # first-order perturbation overshoots the true critical point by ~2.4x
    ratio = b_c0(lbar_analytic()) / 4.73
    assert 2.3 < ratio < 2.5


def test_monte_carlo_close_to_analytic():
    est, err = lbar_monte_carlo(1_000_000, seed=0)
    assert abs(est - lbar_analytic()) / lbar_analytic() < 0.005
    assert err > 0.0
    # the estimate should sit within a few reported standard errors
    assert abs(est - lbar_analytic()) < 4.0 * err


def test_monte_carlo_stderr_magnitude():
    # Var[ln d] = (pi^2/2 - 4)/4 for Gaussian pairs; delta method gives the
    # standard error of the geometric mean
    n = 1_000_000
    est, err = lbar_monte_carlo(n, seed=1)
    predicted = est * math.sqrt((math.pi**2 / 2.0 - 4.0) / 4.0 / n)
    assert abs(err - predicted) / predicted < 0.05


def test_monte_carlo_is_deterministic():
    a = lbar_monte_carlo(50_000, seed=42)
    b = lbar_monte_carlo(50_000, seed=42)
    assert a == b
    c = lbar_monte_carlo(50_000, seed=43)
    assert c != a


def test_chunking_does_not_change_the_estimate():
    # same draw stream, different partial-sum boundaries
    whole, _ = lbar_monte_carlo(40_000, seed=7, chunk_size=40_000)
    parts, _ = lbar_monte_carlo(40_000, seed=7, chunk_size=1_000)
    assert abs(whole - parts) < 1e-12 * whole


def test_monte_carlo_validation():
    with pytest.raises(UsageError):
        lbar_monte_carlo(1)
    with pytest.raises(UsageError):
        lbar_monte_carlo(10.5)
    with pytest.raises(UsageError):
        lbar_monte_carlo(100, chunk_size=0)


def test_locator_result_bundle():
    result = locator_result(10_000, seed=5)
    assert result.n_pairs == 10_000
    assert result.lbar_analytic == lbar_analytic()
    assert result.b_c0_analytic == b_c0(lbar_analytic())
    assert result.b_c0_mc == b_c0(result.lbar_mc)
    payload = result.to_dict()
    assert set(payload) == {
        "lbar_analytic", "lbar_mc", "lbar_mc_stderr",
        "b_c0_analytic", "b_c0_mc", "n_pairs",
    }
