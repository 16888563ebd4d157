import numpy as np
import pytest
from scipy import stats

from ere.core.entropy import EreEstimate, pseudo_r2
from ere.core.errors import ConfigurationError
from ere.core.inference import chi2_log_sf, chi2_sf, infer, ncx2_cdf, solve_noncentrality


def _estimate(h_hat: float, n: int, s_tilde_m: int, **flags) -> EreEstimate:
    return EreEstimate(h_hat=h_hat, raw_diff=h_hat, s_tilde_m=s_tilde_m, n=n, **flags)


def test_ncx2_cdf_central_case():
    assert ncx2_cdf(1, 0.0, 3.8414588) == pytest.approx(0.95, abs=1e-7)
    for k in (1, 2, 5, 20):
        for x in (0.5, 3.0, 12.0, 40.0):
            assert ncx2_cdf(k, 0.0, x) == pytest.approx(stats.chi2.cdf(x, k), abs=1e-9)


def test_ncx2_cdf_edge_cases():
    assert ncx2_cdf(3, 4.0, 0.0) == 0.0
    assert ncx2_cdf(3, 4.0, -1.0) == 0.0
    with pytest.raises(ConfigurationError):
        ncx2_cdf(0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        ncx2_cdf(2, -1.0, 1.0)


def test_ncx2_cdf_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(1, 21))
        theta = float(rng.uniform(0.0, 100.0))
        x = float(rng.uniform(0.1, 200.0))
        assert ncx2_cdf(k, theta, x) == pytest.approx(stats.ncx2.cdf(x, k, theta), abs=1e-7)


def test_ncx2_cdf_large_noncentrality():
    value = ncx2_cdf(5, 1e6, 1e6)
    assert 0.0 <= value <= 1.0
    normal = stats.norm.cdf((1e6 - (5 + 1e6)) / np.sqrt(2 * (5 + 2e6)))
    assert value == pytest.approx(normal, abs=1e-2)


def test_ncx2_cdf_matches_sampling():
    rng = np.random.default_rng(1)
    z = rng.standard_normal((1_000_000, 2))
    draws = (z[:, 0] + np.sqrt(5.0)) ** 2 + z[:, 1] ** 2
    assert ncx2_cdf(2, 5.0, 6.0) == pytest.approx(np.mean(draws <= 6.0), abs=2e-3)


def test_ncx2_cdf_decreasing_in_theta():
    values = [ncx2_cdf(3, theta, 10.0) for theta in np.linspace(0.0, 30.0, 31)]
    assert np.all(np.diff(values) < 0)


def test_chi2_tails():
    assert chi2_sf(3, 10.0) == pytest.approx(0.01857, abs=1e-5)
    assert chi2_sf(3, 0.0) == 1.0
    assert chi2_log_sf(3, 10.0) == pytest.approx(np.log(chi2_sf(3, 10.0)))
    # хвосты, где P исчезает в double: точные формулы для k = 2 и k = 4
    assert chi2_sf(2, 1500.0) == 0.0
    assert chi2_log_sf(2, 1500.0) == pytest.approx(-750.0, rel=1e-12)
    assert chi2_log_sf(4, 1600.0) == pytest.approx(-800.0 + np.log(801.0), rel=1e-12)


def test_solve_noncentrality_clamps_to_zero():
    assert solve_noncentrality(1, 3.8414588, 0.975) == 0.0
    assert solve_noncentrality(4, 0.0, 0.5) == 0.0


def test_solve_noncentrality_round_trip():
    target = ncx2_cdf(4, 7.3, 9.0)
    assert solve_noncentrality(4, 9.0, target) == pytest.approx(7.3, abs=1e-6)


def test_solve_noncentrality_self_consistent():
    theta = solve_noncentrality(3, 50.0, 0.025)
    assert theta > 0
    assert ncx2_cdf(3, theta, 50.0) == pytest.approx(0.025, abs=1e-8)


def test_solve_noncentrality_validation():
    with pytest.raises(ConfigurationError):
        solve_noncentrality(2, 5.0, 1.0)
    with pytest.raises(ConfigurationError):
        solve_noncentrality(0, 5.0, 0.5)


def test_infer_zero_estimate():
    result = infer(_estimate(0.0, 200, 4))
    assert result.p_value == 1.0
    assert result.ci_lower == 0.0
    assert result.ci_upper == 0.0


def test_infer_p_value_and_interval():
    result = infer(_estimate(0.10, 100, 3))
    assert result.p_value == pytest.approx(stats.chi2.sf(10.0, 3), rel=1e-9)
    assert result.p_value == pytest.approx(0.01857, abs=1e-5)
    assert 0.0 < result.ci_lower < result.h_hat < result.ci_upper
    assert ncx2_cdf(3, 100 * result.ci_lower, 10.0) == pytest.approx(0.975, abs=1e-8)
    assert ncx2_cdf(3, 100 * result.ci_upper, 10.0) == pytest.approx(0.025, abs=1e-8)


def test_infer_lower_clamp():
    n, statistic = 300, 3.8414588
    result = infer(_estimate(statistic / n, n, 1), alpha=0.05)
    assert result.ci_lower == 0.0
    assert result.ci_upper == pytest.approx(solve_noncentrality(1, statistic, 0.025) / n, rel=1e-12)
    assert ncx2_cdf(1, n * result.ci_upper, statistic) == pytest.approx(0.025, abs=1e-8)


def test_infer_one_sided():
    result = infer(_estimate(0.10, 100, 3), two_sided=False)
    assert result.one_sided
    assert np.isinf(result.ci_upper)
    assert result.r2_ci_upper == 1.0
    assert result.ci_lower == pytest.approx(solve_noncentrality(3, 10.0, 0.95) / 100, rel=1e-12)
    assert result.ci_lower > infer(_estimate(0.10, 100, 3)).ci_lower


def test_infer_screened_out():
    result = infer(_estimate(0.0, 100, 0, screened_out=True))
    assert result.screened_out
    assert result.p_value == 1.0
    assert (result.ci_lower, result.ci_upper) == (0.0, 0.0)


def test_infer_r2_interval_is_transformed_h_interval():
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(50, 1000))
        k = int(rng.integers(1, 10))
        h = float(rng.exponential(0.1))
        result = infer(_estimate(h, n, k), alpha=float(rng.uniform(0.01, 0.2)))
        assert result.r2_hat == pseudo_r2(result.h_hat)
        assert result.r2_ci_lower == pseudo_r2(result.ci_lower)
        assert result.r2_ci_upper == pseudo_r2(result.ci_upper)
        assert result.ci_lower <= result.ci_upper


def test_infer_validation():
    with pytest.raises(ConfigurationError):
        infer(_estimate(0.1, 100, 2), alpha=1.0)
