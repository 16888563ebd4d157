import numpy as np
import pytest

from conftest import linear_data
from ere.core.data import Dataset
from ere.core.errors import ConfigurationError, DataError, FamilyDomainError, RankDeficiencyError
from ere.core.glm import GlmFamily, bic, deviance_difference, family_eval, fit_mle, log_likelihood
from ere.enums import DispersionMode, FamilyKind


@pytest.mark.parametrize(
    "name, theta, expected",
    [
        ("binomial-logit", 0.0, (np.log(2.0), 0.5, 0.25)),
        ("poisson-log", 0.0, (1.0, 1.0, 1.0)),
        ("exponential-reciprocal", 2.0, (-np.log(2.0), -0.5, 0.25)),
        ("gaussian", 1.5, (1.125, 1.5, 1.0)),
    ],
)
def test_family_eval(name, theta, expected):
    assert family_eval(GlmFamily.from_name(name), theta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_family_derivatives_match_finite_differences(kind):
    family = GlmFamily(kind)
    grid = np.linspace(0.4, 3.0, 9) if kind == FamilyKind.EXPONENTIAL else np.linspace(-2.5, 2.5, 11)
    h = 1e-5
    for theta in grid:
        _, first, second = family_eval(family, theta)
        lower, upper = family_eval(family, theta - h), family_eval(family, theta + h)
        assert first == pytest.approx((upper[0] - lower[0]) / (2 * h), rel=1e-6, abs=1e-8)
        assert second == pytest.approx((upper[1] - lower[1]) / (2 * h), rel=1e-6, abs=1e-8)
        assert second > 0


@pytest.mark.parametrize("kind", [FamilyKind.GAUSSIAN, FamilyKind.LOGISTIC, FamilyKind.POISSON])
def test_mle_is_invariant_to_column_scaling(kind):
    rng = np.random.default_rng(17)
    n = 150
    X = rng.standard_normal((n, 3))
    family = GlmFamily(kind)
    y = family.sample_response(rng, 0.3 + X @ np.array([0.6, -0.4, 0.2]))
    scale = np.array([10.0, 0.05, 3.0])
    shift = np.array([5.0, -2.0, 0.5])
    raw = Dataset(X=X * scale + shift, y=y, intercept=True)
    standardized = Dataset(X=X, y=y, intercept=True)
    first = fit_mle(raw, [0, 1, 2], family)
    second = fit_mle(standardized, [0, 1, 2], family)
    assert first.loglik == pytest.approx(second.loglik, rel=1e-9)
    fitted_raw = first.intercept + raw.X @ first.beta
    fitted_std = second.intercept + standardized.X @ second.beta
    assert np.allclose(fitted_raw, fitted_std, atol=1e-6)
    assert np.allclose(first.beta * scale, second.beta, atol=1e-6)
    reduced_raw = fit_mle(raw, [2], family)
    reduced_std = fit_mle(standardized, [2], family)
    assert deviance_difference(first, reduced_raw, n) == pytest.approx(
        deviance_difference(second, reduced_std, n), abs=1e-9
    )


def test_unknown_family_name():
    with pytest.raises(ConfigurationError):
        GlmFamily.from_name("gamma")


def test_estimated_dispersion_only_for_gaussian():
    with pytest.raises(ConfigurationError):
        GlmFamily(FamilyKind.POISSON, DispersionMode.ESTIMATED)


def test_exponential_domain():
    family = GlmFamily(FamilyKind.EXPONENTIAL)
    with pytest.raises(FamilyDomainError) as error:
        family.check_domain(np.array([1.0, -1.0, 2.0, 0.5]))
    assert error.value.fraction == pytest.approx(0.25)


def test_probit_is_not_canonical():
    assert not GlmFamily(FamilyKind.PROBIT).canonical
    assert GlmFamily(FamilyKind.LOGISTIC).canonical


def test_probit_weight_matches_score_derivative():
    family = GlmFamily(FamilyKind.PROBIT)
    eta = np.linspace(-4.0, 4.0, 9)
    h = 1e-6
    for y in (0.0, 1.0):
        score_plus, _ = family.working(np.full_like(eta, y), eta + h)
        score_minus, _ = family.working(np.full_like(eta, y), eta - h)
        _, weight = family.working(np.full_like(eta, y), eta)
        assert np.allclose(-(score_plus - score_minus) / (2 * h), weight, rtol=1e-5, atol=1e-8)


def test_log_likelihood_at_zero():
    X = np.arange(20, dtype=float).reshape(10, 2)
    y = np.tile([0.0, 1.0], 5)
    data = Dataset(X=X, y=y)
    assert log_likelihood(data, np.zeros(2), GlmFamily(FamilyKind.LOGISTIC)) == pytest.approx(-10 * np.log(2.0))

    counts = Dataset(X=X[:5], y=[0.0, 3.0, 1.0, 2.0, 5.0])
    assert log_likelihood(counts, np.zeros(2), GlmFamily(FamilyKind.POISSON)) == pytest.approx(-5.0)


def test_log_likelihood_gaussian_direct_sum(gaussian):
    data = Dataset(X=[[1.0], [2.0], [3.0]], y=[2.1, 3.9, 6.0])
    x, y = np.array([1.0, 2.0, 3.0]), np.array([2.1, 3.9, 6.0])
    expected = float(np.sum(y * 2 * x - (2 * x) ** 2 / 2))
    assert log_likelihood(data, np.array([2.0]), gaussian) == pytest.approx(expected)
    assert log_likelihood(data, np.array([2.0]), gaussian, dispersion=2.0) == pytest.approx(expected / 2)


def test_log_likelihood_rejects_bad_inputs(gaussian):
    data = Dataset(X=[[1.0], [2.0], [3.0]], y=[2.1, 3.9, 6.0])
    with pytest.raises(ConfigurationError):
        log_likelihood(data, np.array([1.0, 2.0]), gaussian)
    with pytest.raises(ConfigurationError):
        log_likelihood(data, np.array([1.0]), gaussian, dispersion=0.0)


def test_fit_mle_normal_equations(gaussian):
    data = Dataset(X=[[1.0], [2.0], [3.0]], y=[2.1, 3.9, 6.0])
    fit = fit_mle(data, [0], gaussian)
    assert fit.converged
    assert fit.beta[0] == pytest.approx(27.9 / 14, abs=1e-8)


def test_fit_mle_empty_support(logistic):
    rng = np.random.default_rng(3)
    data = Dataset(X=rng.standard_normal((40, 3)), y=rng.integers(0, 2, 40))
    fit = fit_mle(data, [], logistic)
    assert np.all(fit.beta == 0)
    assert fit.loglik == pytest.approx(log_likelihood(data, np.zeros(3), logistic))


def test_fit_mle_logistic_null_effect(logistic):
    rng = np.random.default_rng(11)
    n = 4000
    data = Dataset(X=rng.standard_normal((n, 1)), y=np.tile([0.0, 1.0], n // 2))
    fit = fit_mle(data, [0], logistic)
    assert fit.converged
    assert abs(fit.beta[0]) < 0.2
    assert fit.gradient_norm < 1e-5


def test_fit_mle_loglik_trace_monotone():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((300, 4))
    family = GlmFamily(FamilyKind.POISSON)
    y = rng.poisson(np.exp(X @ np.array([0.5, -0.3, 0.2, 0.0])))
    fit = fit_mle(Dataset(X=X, y=y, intercept=True), [0, 1, 2, 3], family)
    assert fit.converged
    assert np.all(np.diff(fit.loglik_trace) >= -1e-9)


def test_fit_mle_flags_separation(logistic):
    x = np.linspace(-2.0, 2.0, 40)
    data = Dataset(X=x[:, None], y=(x > 0).astype(float))
    fit = fit_mle(data, [0], logistic)
    assert fit.quasi_separation


def test_fit_mle_rank_deficiency(gaussian):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(30)
    data = Dataset(X=np.column_stack([x, 2 * x]), y=rng.standard_normal(30))
    with pytest.raises(RankDeficiencyError):
        fit_mle(data, [0, 1], gaussian)


def test_fit_mle_rejects_wrong_response(logistic):
    data = Dataset(X=[[1.0], [2.0], [3.0]], y=[0.0, 2.0, 1.0])
    with pytest.raises(DataError):
        fit_mle(data, [0], logistic)


def test_deviance_difference_identities(gaussian):
    data = linear_data(7, 80, [1.0, 0.5, 0.0])
    full = fit_mle(data, [0, 1, 2], gaussian)
    reduced = fit_mle(data, [0], gaussian)
    assert deviance_difference(full, full, data.n) == 0.0
    assert deviance_difference(full, reduced, data.n) >= 0.0

    rss_full = np.sum((data.y - data.X @ full.beta) ** 2)
    rss_reduced = np.sum((data.y - data.X @ reduced.beta) ** 2)
    unit = GlmFamily(FamilyKind.GAUSSIAN, DispersionMode.FIXED)
    full_unit = fit_mle(data, [0, 1, 2], unit)
    reduced_unit = fit_mle(data, [0], unit)
    assert deviance_difference(full_unit, reduced_unit, data.n) == pytest.approx((rss_reduced - rss_full) / data.n)


def test_bic_prefers_true_model(gaussian):
    data = linear_data(1, 200, [2.0, 0.0, 0.0, 0.0])
    true_fit = fit_mle(data, [0], gaussian)
    big_fit = fit_mle(data, [0, 1, 2, 3], gaussian)
    empty_fit = fit_mle(data, [], gaussian)
    assert bic(data, true_fit, gaussian) < bic(data, big_fit, gaussian)
    assert bic(data, true_fit, gaussian) < bic(data, empty_fit, gaussian)


def test_kl_divergence_zero_on_identical_predictors():
    eta = np.array([-1.0, 0.0, 2.0])
    for kind in (FamilyKind.GAUSSIAN, FamilyKind.LOGISTIC, FamilyKind.POISSON, FamilyKind.PROBIT):
        assert np.allclose(GlmFamily(kind).kl_divergence(eta, eta), 0.0)
    assert np.allclose(GlmFamily(FamilyKind.EXPONENTIAL).kl_divergence(eta + 3, eta + 3), 0.0)


def test_kl_divergence_nonnegative_and_closed_forms():
    eta_star, eta_0 = np.array([0.3, -1.2, 2.0]), np.array([-0.5, 0.4, 1.0])
    for kind in (FamilyKind.GAUSSIAN, FamilyKind.LOGISTIC, FamilyKind.POISSON, FamilyKind.PROBIT):
        assert np.all(GlmFamily(kind).kl_divergence(eta_star, eta_0) >= 0)
    poisson = GlmFamily(FamilyKind.POISSON)
    expected = np.exp(eta_star) * (eta_star - eta_0) - np.exp(eta_star) + np.exp(eta_0)
    assert np.allclose(poisson.kl_divergence(eta_star, eta_0), expected)
    gaussian = GlmFamily(FamilyKind.GAUSSIAN)
    assert np.allclose(gaussian.kl_divergence(eta_star, eta_0), 0.5 * (eta_star - eta_0) ** 2)


def test_kl_divergence_dispersion_only_for_gaussian():
    with pytest.raises(ConfigurationError):
        GlmFamily(FamilyKind.LOGISTIC).kl_divergence(np.zeros(2), np.ones(2), dispersion=2.0)
