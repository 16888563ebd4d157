"""
Экспоненциальное семейство, логарифм правдоподобия и подгонка MLE без штрафа.

Плотность p(y|x) = exp{phi^-1 [y x^T beta - b(x^T beta)] + c(y)}; слагаемое c(y)
везде опущено: потребляются только разности логарифмов правдоподобия.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy import linalg
from scipy.special import expit, log_ndtr, logit, ndtr, ndtri

from ere.core.data import Dataset
from ere.core.errors import ConfigurationError, DataError, FamilyDomainError, RankDeficiencyError
from ere.enums import DispersionMode, FamilyKind
from ere.settings import settings

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

FAMILY_ALIASES: dict[str, FamilyKind] = {
    "gaussian": FamilyKind.GAUSSIAN,
    "gaussian-identity": FamilyKind.GAUSSIAN,
    "linear": FamilyKind.GAUSSIAN,
    "logistic": FamilyKind.LOGISTIC,
    "binomial-logit": FamilyKind.LOGISTIC,
    "logit": FamilyKind.LOGISTIC,
    "poisson": FamilyKind.POISSON,
    "poisson-log": FamilyKind.POISSON,
    "exponential": FamilyKind.EXPONENTIAL,
    "exponential-reciprocal": FamilyKind.EXPONENTIAL,
    "probit": FamilyKind.PROBIT,
    "binomial-probit": FamilyKind.PROBIT,
}


def _log_phi(eta: np.ndarray) -> np.ndarray:
    return -0.5 * eta**2 - _LOG_SQRT_2PI


@dataclass(frozen=True)
class GlmFamily:
    """Семейство GLM: тройка b, b', b'' плюс поведение связи и дисперсии.

    Для exponential отклик входит со знаком минус: l(y, eta) = -y*eta + log(eta),
    что соответствует b(eta) = -log(eta) и среднему 1/eta = -b'(eta).
    Для probit b(eta) = eta*Phi(eta) + phi(eta) (b' = Phi, b'' = phi), а подгонка идёт
    по точному правдоподобию Бернулли-пробит; это вне канонической теории.
    """

    kind: FamilyKind = FamilyKind.GAUSSIAN
    dispersion_mode: DispersionMode | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if self.dispersion_mode is None:
            mode = DispersionMode.ESTIMATED if self.kind == FamilyKind.GAUSSIAN else DispersionMode.FIXED
        else:
            mode = DispersionMode(self.dispersion_mode)
        if mode == DispersionMode.ESTIMATED and self.kind != FamilyKind.GAUSSIAN:
            raise ConfigurationError(f"Оцениваемая дисперсия поддерживается только для gaussian, не для {self.kind.value}")
        object.__setattr__(self, "dispersion_mode", mode)

    @classmethod
    def from_name(cls, name: str, dispersion_mode: DispersionMode | None = None) -> GlmFamily:
        try:
            kind = FAMILY_ALIASES[name.strip().lower()]
        except KeyError:
            raise ConfigurationError(f"Неизвестное семейство '{name}', доступны: {', '.join(FAMILY_ALIASES)}") from None
        return cls(kind=kind, dispersion_mode=dispersion_mode)

    @property
    def canonical(self) -> bool:
        return self.kind != FamilyKind.PROBIT

    @property
    def binary(self) -> bool:
        return self.kind in (FamilyKind.LOGISTIC, FamilyKind.PROBIT)

    # область определения

    def in_domain(self, eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        if self.kind == FamilyKind.EXPONENTIAL:
            return eta > 0
        return np.isfinite(eta)

    def check_domain(self, eta: np.ndarray) -> None:
        ok = self.in_domain(eta)
        if not np.all(ok):
            fraction = float(1.0 - np.mean(ok))
            raise FamilyDomainError(
                f"Линейный предиктор вне области семейства {self.kind.value} у {fraction:.2%} наблюдений",
                fraction=fraction,
            )

    def check_response(self, y: np.ndarray) -> None:
        y = np.asarray(y, dtype=float)
        if self.binary and not np.all((y == 0) | (y == 1)):
            raise DataError(f"Для семейства {self.kind.value} отклик должен быть из {{0, 1}}")
        if self.kind == FamilyKind.POISSON and not np.all((y >= 0) & (y == np.round(y))):
            raise DataError("Для семейства poisson отклик должен быть неотрицательным целым")
        if self.kind == FamilyKind.EXPONENTIAL and not np.all(y > 0):
            raise DataError("Для семейства exponential отклик должен быть положительным")

    # кумулянта b и производные

    def b(self, eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        if self.kind == FamilyKind.GAUSSIAN:
            return 0.5 * eta**2
        if self.kind == FamilyKind.LOGISTIC:
            return np.logaddexp(0.0, eta)
        if self.kind == FamilyKind.POISSON:
            return np.exp(eta)
        if self.kind == FamilyKind.EXPONENTIAL:
            return -np.log(eta)
        return eta * ndtr(eta) + np.exp(_log_phi(eta))

    def b_prime(self, eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        if self.kind == FamilyKind.GAUSSIAN:
            return eta.copy()
        if self.kind == FamilyKind.LOGISTIC:
            return expit(eta)
        if self.kind == FamilyKind.POISSON:
            return np.exp(eta)
        if self.kind == FamilyKind.EXPONENTIAL:
            return -1.0 / eta
        return ndtr(eta)

    def b_double_prime(self, eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        if self.kind == FamilyKind.GAUSSIAN:
            return np.ones_like(eta)
        if self.kind == FamilyKind.LOGISTIC:
            mu = expit(eta)
            return mu * (1.0 - mu)
        if self.kind == FamilyKind.POISSON:
            return np.exp(eta)
        if self.kind == FamilyKind.EXPONENTIAL:
            return 1.0 / eta**2
        return np.exp(_log_phi(eta))

    def mean(self, eta: np.ndarray) -> np.ndarray:
        """E(y | eta)."""
        if self.kind == FamilyKind.EXPONENTIAL:
            return 1.0 / np.asarray(eta, dtype=float)
        return self.b_prime(eta)

    def link(self, mu: np.ndarray | float) -> np.ndarray:
        """Обратная к mean; используется для стартовой точки подгонки."""
        mu = np.asarray(mu, dtype=float)
        if self.kind == FamilyKind.GAUSSIAN:
            return mu
        if self.binary:
            mu = np.clip(mu, 1e-6, 1.0 - 1e-6)
            return logit(mu) if self.kind == FamilyKind.LOGISTIC else ndtri(mu)
        if self.kind == FamilyKind.POISSON:
            return np.log(np.maximum(mu, 1e-8))
        return 1.0 / mu

    # правдоподобие

    def loglik_terms(self, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """Поточечный логарифм правдоподобия без c(y)."""
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.kind == FamilyKind.EXPONENTIAL:
            return -y * eta + np.log(eta)
        if self.kind == FamilyKind.PROBIT:
            return y * log_ndtr(eta) + (1.0 - y) * log_ndtr(-eta)
        return y * eta - self.b(eta)

    def working(self, y: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Производная l по eta и ньютоновский вес -d2l/deta2."""
        y = np.asarray(y, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if self.kind == FamilyKind.EXPONENTIAL:
            return 1.0 / eta - y, 1.0 / eta**2
        if self.kind == FamilyKind.PROBIT:
            mills_1 = np.exp(_log_phi(eta) - log_ndtr(eta))
            mills_0 = np.exp(_log_phi(eta) - log_ndtr(-eta))
            score = y * mills_1 - (1.0 - y) * mills_0
            weight = y * mills_1 * (eta + mills_1) + (1.0 - y) * mills_0 * (mills_0 - eta)
            return score, weight
        return y - self.b_prime(eta), self.b_double_prime(eta)

    def information_weight(self, eta: np.ndarray) -> np.ndarray:
        """Фишеровский вес: b'' для канонических семейств, phi^2 / {Phi(1 - Phi)} для probit."""
        if self.kind != FamilyKind.PROBIT:
            return self.b_double_prime(eta)
        eta = np.asarray(eta, dtype=float)
        return np.exp(2.0 * _log_phi(eta) - log_ndtr(eta) - log_ndtr(-eta))

    def kl_divergence(
        self,
        eta_star: np.ndarray,
        eta_0: np.ndarray,
        dispersion: float = 1.0,
        dispersion_0: float | None = None,
    ) -> np.ndarray:
        """KL(p(y|eta*) || p(y|eta_0)) поточечно.

        l(y, eta) аффинна по y у всех семейств, поэтому KL = l(mu*, eta*) - l(mu*, eta_0);
        для канонических это b'(eta*)(eta* - eta_0) + b(eta_0) - b(eta*).
        Для gaussian дисперсии полной и редуцированной моделей могут различаться.
        """
        self.check_domain(eta_star)
        self.check_domain(eta_0)
        dispersion_0 = dispersion if dispersion_0 is None else dispersion_0
        if self.kind == FamilyKind.GAUSSIAN:
            if not (dispersion > 0 and dispersion_0 > 0):
                raise ConfigurationError("Дисперсии должны быть положительными")
            diff = np.asarray(eta_star, dtype=float) - np.asarray(eta_0, dtype=float)
            ratio = dispersion / dispersion_0
            return 0.5 * (ratio - 1.0 - np.log(ratio) + diff**2 / dispersion_0)
        if dispersion != 1.0 or dispersion_0 != 1.0:
            raise ConfigurationError(f"Для семейства {self.kind.value} дисперсия фиксирована и равна 1")
        mu_star = self.mean(eta_star)
        return self.loglik_terms(mu_star, eta_star) - self.loglik_terms(mu_star, eta_0)

    def sample_response(
        self,
        rng: np.random.Generator,
        eta: np.ndarray,
        noise_sd: float = settings.glm.GAUSSIAN_NOISE_SD,
    ) -> np.ndarray:
        eta = np.asarray(eta, dtype=float)
        self.check_domain(eta)
        if self.kind == FamilyKind.GAUSSIAN:
            return eta + noise_sd * rng.standard_normal(eta.shape)
        if self.binary:
            return (rng.random(eta.shape) < self.mean(eta)).astype(float)
        if self.kind == FamilyKind.POISSON:
            return rng.poisson(np.exp(eta)).astype(float)
        return rng.exponential(1.0 / eta)


def family_eval(family: GlmFamily, theta: float) -> tuple[float, float, float]:
    """(b, b', b'') в точке theta."""
    family.check_domain(np.asarray(theta))
    return float(family.b(theta)), float(family.b_prime(theta)), float(family.b_double_prime(theta))


@dataclass(frozen=True, eq=False)
class FitResult:
    """Результат подгонки.

    support — подогнанные столбцы (для MLE) или ненулевые коэффициенты (со штрафом);
    loglik_unscaled — сумма l(Y_i, eta_i) при phi = 1, loglik = loglik_unscaled / dispersion.
    Для штрафованных подгонок gradient_norm хранит максимальную невязку условий KKT.
    """

    beta: np.ndarray
    support: np.ndarray
    loglik: float
    loglik_unscaled: float
    dispersion: float
    converged: bool
    iterations: int
    gradient_norm: float
    n: int
    intercept: float = 0.0
    has_intercept: bool = False
    quasi_separation: bool = False
    penalty_lambda: float = 0.0
    loglik_trace: tuple[float, ...] = ()
    objective_trace: tuple[float, ...] = field(default=())

    @property
    def df(self) -> int:
        return len(self.support) + int(self.has_intercept)

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return X @ self.beta + self.intercept


def log_likelihood(
    data: Dataset,
    beta: np.ndarray,
    family: GlmFamily,
    dispersion: float = 1.0,
    intercept: float = 0.0,
) -> float:
    """phi^-1 * sum_i [Y_i X_i^T beta - b(X_i^T beta)] (c(y) опущено)."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.p,) or not np.all(np.isfinite(beta)):
        raise ConfigurationError(f"beta должна быть конечным вектором длины {data.p}")
    if not dispersion > 0:
        raise ConfigurationError(f"Дисперсия должна быть положительной, получено {dispersion}")
    eta = data.X @ beta + intercept
    family.check_domain(eta)
    return float(np.sum(family.loglik_terms(data.y, eta))) / dispersion


def _solve_newton(H: np.ndarray, grad: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        try:
            return linalg.solve(H, grad, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            return np.linalg.lstsq(H, grad, rcond=None)[0]


@dataclass
class NewtonOutcome:
    coef: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    gradient_norm: float
    quasi_separation: bool
    trace: list[float]


def newton_mle(
    Z: np.ndarray,
    y: np.ndarray,
    family: GlmFamily,
    coef: np.ndarray,
    *,
    max_iter: int = settings.glm.MAX_ITER,
    rel_tol: float = settings.glm.REL_TOL,
    grad_tol: float = settings.glm.GRAD_TOL,
    max_halvings: int = settings.glm.MAX_HALVINGS,
    separation_eta: float = settings.glm.SEPARATION_ETA,
    weight_floor: float = settings.glm.WEIGHT_FLOOR,
) -> NewtonOutcome:
    """Ньютон/IRLS с дроблением шага: loglik не убывает по принятым итерациям."""
    coef = np.array(coef, dtype=float)
    eta = Z @ coef
    family.check_domain(eta)
    ll = float(np.sum(family.loglik_terms(y, eta)))
    trace = [ll]
    separation = False
    converged = False
    stalled = 0
    iterations = 0

    while True:
        score, weight = family.working(y, eta)
        grad = Z.T @ score
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= grad_tol * max(1.0, abs(ll)):
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1

        if family.binary and np.max(np.abs(eta)) > separation_eta:
            separation = True
        weight = np.maximum(weight, weight_floor)
        step = _solve_newton((Z * weight[:, None]).T @ Z, grad)

        accepted = False
        t = 1.0
        for _ in range(max_halvings + 1):
            candidate = coef + t * step
            eta_candidate = Z @ candidate
            if np.all(family.in_domain(eta_candidate)):
                ll_candidate = float(np.sum(family.loglik_terms(y, eta_candidate)))
                if np.isfinite(ll_candidate) and ll_candidate >= ll - 1e-12 * max(1.0, abs(ll)):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            logger.debug(f"Дробление шага исчерпано на итерации {iterations}")
            break

        change = abs(ll_candidate - ll) / max(1.0, abs(ll))
        coef, eta, ll = candidate, eta_candidate, ll_candidate
        trace.append(ll)
        # при разделимости loglik растёт бесконечно медленно
        stalled = stalled + 1 if change < rel_tol else 0
        if stalled >= 3:
            score, _ = family.working(y, eta)
            grad_norm = float(np.linalg.norm(Z.T @ score))
            converged = grad_norm <= grad_tol * max(1.0, abs(ll))
            break

    return NewtonOutcome(
        coef=coef,
        loglik=ll,
        converged=converged,
        iterations=iterations,
        gradient_norm=grad_norm,
        quasi_separation=separation,
        trace=trace,
    )


def initial_coefficients(Z: np.ndarray, y: np.ndarray, family: GlmFamily, has_intercept: bool) -> np.ndarray:
    """Стартовая точка: свободный член из среднего отклика, остальное нули."""
    coef = np.zeros(Z.shape[1])
    if Z.shape[1] == 0:
        return coef
    if has_intercept:
        coef[0] = float(family.link(np.mean(y)))
        return coef
    if family.kind == FamilyKind.EXPONENTIAL:
        # без свободного члена ноль вне области: берём МНК-подгонку постоянной интенсивности
        coef = np.linalg.lstsq(Z, np.full(Z.shape[0], 1.0 / np.mean(y)), rcond=None)[0]
        family.check_domain(Z @ coef)
    return coef


def estimate_dispersion(family: GlmFamily, y: np.ndarray, eta: np.ndarray, df: int) -> float:
    """RSS/(n - df) для gaussian с оцениваемой дисперсией, иначе 1."""
    if family.dispersion_mode != DispersionMode.ESTIMATED:
        return 1.0
    dof = y.shape[0] - df
    if dof <= 0:
        raise RankDeficiencyError(f"Нет степеней свободы для оценки дисперсии (n - df = {dof})")
    rss = float(np.sum((y - eta) ** 2))
    return max(rss / dof, np.finfo(float).tiny)


def fit_mle(data: Dataset, support: np.ndarray | list[int], family: GlmFamily, **newton_options) -> FitResult:
    """MLE по столбцам support (и свободному члену, если он есть); вне support нули."""
    support = np.unique(np.asarray(support, dtype=int))
    if support.size and (support[0] < 0 or support[-1] >= data.p):
        raise ConfigurationError(f"Индексы носителя вне диапазона [0, {data.p})")
    family.check_response(data.y)
    k = support.size + int(data.intercept)
    if k >= data.n:
        raise RankDeficiencyError(f"Размер модели {k} не меньше n = {data.n}")

    beta = np.zeros(data.p)
    if k == 0:
        eta = np.zeros(data.n)
        family.check_domain(eta)
        ll = float(np.sum(family.loglik_terms(data.y, eta)))
        dispersion = estimate_dispersion(family, data.y, eta, 0)
        return FitResult(
            beta=beta, support=support, loglik=ll / dispersion, loglik_unscaled=ll, dispersion=dispersion,
            converged=True, iterations=0, gradient_norm=0.0, n=data.n, loglik_trace=(ll,),
        )

    Z = data.design(support)
    if np.linalg.matrix_rank(Z) < k:
        raise RankDeficiencyError(f"Столбцы носителя линейно зависимы (ранг < {k})")

    start = initial_coefficients(Z, data.y, family, data.intercept)
    outcome = newton_mle(Z, data.y, family, start, **newton_options)
    intercept = float(outcome.coef[0]) if data.intercept else 0.0
    beta[support] = outcome.coef[int(data.intercept):]
    eta = Z @ outcome.coef
    dispersion = estimate_dispersion(family, data.y, eta, k)

    if not outcome.converged:
        logger.warning(f"MLE не сошёлся за {outcome.iterations} итераций (|grad| = {outcome.gradient_norm:.3g})")
    if outcome.quasi_separation:
        logger.warning(f"Квази-разделимость: |eta| > {settings.glm.SEPARATION_ETA} на носителе размера {support.size}")
    logger.debug(f"MLE: |S|={support.size}, loglik={outcome.loglik:.6g}, итераций {outcome.iterations}")

    return FitResult(
        beta=beta,
        support=support,
        loglik=outcome.loglik / dispersion,
        loglik_unscaled=outcome.loglik,
        dispersion=dispersion,
        converged=outcome.converged,
        iterations=outcome.iterations,
        gradient_norm=outcome.gradient_norm,
        n=data.n,
        intercept=intercept,
        has_intercept=data.intercept,
        quasi_separation=outcome.quasi_separation,
        loglik_trace=tuple(outcome.trace),
    )


def deviance_difference(full: FitResult, reduced: FitResult, n: int) -> float:
    """(2/n) {log L_n(full) - log L_n(reduced)} с дисперсией полной модели."""
    if full.n != n or reduced.n != n:
        raise ConfigurationError(f"Подгонки на разных выборках: n={n}, full.n={full.n}, reduced.n={reduced.n}")
    return 2.0 / n * (full.loglik_unscaled - reduced.loglik_unscaled) / full.dispersion


def bic(data: Dataset, fit: FitResult, family: GlmFamily) -> float:
    """BIC = -2 loglik + df log n; для gaussian профильная форма n log(RSS/n) + df log n."""
    n = data.n
    if family.kind == FamilyKind.GAUSSIAN:
        rss = float(np.sum((data.y - fit.linear_predictor(data.X)) ** 2))
        return n * np.log(max(rss, np.finfo(float).tiny) / n) + fit.df * np.log(n)
    return -2.0 * fit.loglik_unscaled + fit.df * np.log(n)
