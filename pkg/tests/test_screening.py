import numpy as np
import pytest

from conftest import linear_data
from ere.core.data import Dataset
from ere.core.errors import ConfigurationError, EmptyFeasibleGridError
from ere.core.glm import GlmFamily, bic, fit_mle
from ere.core.screening import (
    default_threshold_grid,
    marginal_mmle,
    marginal_mmle_all,
    run_screening,
    screen,
    select_threshold,
)
from ere.enums import FamilyKind, GridSizeRule


def test_marginal_mmle_simple_regression(gaussian):
    data = Dataset(X=[[-1.0], [0.0], [1.0]], y=[0.0, 1.0, 2.0])
    fit = marginal_mmle(data, 0, gaussian)
    assert fit.converged
    assert fit.intercept == pytest.approx(1.0, abs=1e-8)
    assert fit.slope == pytest.approx(1.0, abs=1e-8)


def test_marginal_mmle_matches_closed_form_slope(gaussian):
    data = linear_data(2, 150, [1.0, -0.5, 0.0, 2.0])
    _, slopes, converged, _ = marginal_mmle_all(data, gaussian)
    centered = data.X - data.X.mean(axis=0)
    expected = centered.T @ (data.y - data.y.mean()) / np.sum(centered**2, axis=0)
    assert converged.all()
    assert np.allclose(slopes, expected, atol=1e-8)


def test_marginal_mmle_independent_logistic(logistic):
    rng = np.random.default_rng(17)
    n = 4000
    data = Dataset(X=rng.standard_normal((n, 1)), y=rng.integers(0, 2, n))
    assert abs(marginal_mmle(data, 0, logistic).slope) < 0.15


def test_marginal_mmle_constant_column(logistic):
    rng = np.random.default_rng(4)
    data = Dataset(X=np.full((50, 1), 3.0), y=rng.integers(0, 2, 50))
    fit = marginal_mmle(data, 0, logistic)
    assert fit.slope == 0.0
    assert fit.degenerate


def test_marginal_mmle_all_is_blockwise_consistent(logistic):
    rng = np.random.default_rng(8)
    X = rng.standard_normal((200, 7))
    y = (rng.random(200) < 1 / (1 + np.exp(-X[:, 0]))).astype(float)
    data = Dataset(X=X, y=y)
    whole = marginal_mmle_all(data, logistic, block_size=256)
    split = marginal_mmle_all(data, logistic, block_size=3, threads=2)
    for a, b in zip(whole, split):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_screen_examples():
    mmle = np.array([0.5, 0.01, -0.3])
    assert screen(mmle, 0.1).tolist() == [0, 2]
    assert screen(mmle, 0.0).tolist() == [0, 1, 2]
    assert screen(mmle, 0.6).size == 0
    assert screen(mmle, 0.3).tolist() == [0, 2]


def test_screen_monotone_in_threshold():
    mmle = np.random.default_rng(0).standard_normal(100)
    grid = np.linspace(0.0, 3.0, 31)
    sets = [set(screen(mmle, gamma)) for gamma in grid]
    assert all(later <= earlier for earlier, later in zip(sets, sets[1:]))


def test_select_threshold_single_point(gaussian):
    data = linear_data(3, 100, [1.0, 0.0, 0.5])
    _, slopes, _, _ = marginal_mmle_all(data, gaussian)
    gamma, trace = select_threshold(data, slopes, [0.2], gaussian)
    assert gamma == 0.2
    assert len(trace) == 1


def test_select_threshold_true_support_has_minimum_bic(gaussian):
    beta = [3.0, 3.0] + [0.0] * 8
    data = linear_data(21, 200, beta)
    _, slopes, _, _ = marginal_mmle_all(data, gaussian)
    assert screen(slopes, 1.5).tolist() == [0, 1]
    gamma, trace = select_threshold(data, slopes, [0.0, 1.5, 10.0], gaussian)
    best = min(trace, key=lambda point: point.bic)
    assert best.threshold == 1.5
    assert gamma in {point.threshold for point in trace}
    assert bic(data, fit_mle(data, [0, 1], gaussian), gaussian) == pytest.approx(best.bic)


def test_select_threshold_drops_infeasible_points(gaussian):
    data = linear_data(3, 5, [1.0] * 8)
    _, slopes, _, _ = marginal_mmle_all(data, gaussian)
    with pytest.raises(EmptyFeasibleGridError):
        select_threshold(data, slopes, [0.0], gaussian)


def test_default_threshold_grid_is_feasible(gaussian):
    data = linear_data(9, 40, [1.0] + [0.0] * 59, intercept=True)
    _, slopes, _, _ = marginal_mmle_all(data, gaussian)
    grid = default_threshold_grid(slopes, data.n, intercept=True)
    assert screen(slopes, grid.min()).size + 1 < data.n
    assert np.all(np.diff(grid) > 0)


def test_threshold_grid_rules():
    rng = np.random.default_rng(4)
    mmle = rng.standard_normal(200)
    magnitudes = np.sort(np.abs(mmle))[::-1]
    n = 80

    feasible = default_threshold_grid(mmle, n, intercept=True, rule=GridSizeRule.FEASIBLE)
    assert feasible.size == 20
    assert screen(mmle, feasible[0]).size == n - 2
    assert feasible[-1] == pytest.approx(np.quantile(magnitudes, 0.9))

    capped = default_threshold_grid(mmle, n, intercept=True)
    cap = int(n / np.log(n))
    assert screen(mmle, capped[0]).size == cap
    assert capped[-1] == pytest.approx(np.quantile(magnitudes[:cap], 0.9))
    assert capped[0] > feasible[0]

    assert np.array_equal(default_threshold_grid(np.zeros(5), n), [0.0])


def test_run_screening_fixed_threshold(gaussian):
    data = linear_data(12, 120, [2.0, 0.0, 0.0, -2.0])
    result = run_screening(data, gaussian, threshold=1.0)
    assert result.selected.tolist() == [0, 3]
    assert result.s_tilde == 2
    assert result.bic_trace == ()


def test_run_screening_selected_below_n():
    family = GlmFamily(FamilyKind.GAUSSIAN)
    data = linear_data(13, 60, [1.5, -1.5] + [0.0] * 100, intercept=True)
    result = run_screening(data, family)
    assert result.s_tilde + 1 < data.n
    assert {0, 1} <= set(result.selected.tolist())


def test_run_screening_rejects_oversized_threshold(gaussian):
    data = linear_data(14, 5, [1.0] * 8)
    with pytest.raises(ConfigurationError):
        run_screening(data, gaussian, threshold=0.0)
