"""
Частично штрафованные GLM: штрафы SCAD/MCP, подгонка через LLA и выбор lambda по BIC.

Целевая функция: -n^-1 log L_n(beta) + sum_{j in P} p_lambda(|beta_j|), где P — отобранные
координаты без нештрафуемых. Координаты вне свободного множества закреплены в нуле,
свободный член не штрафуется, дисперсия в целевой функции равна 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from loguru import logger

from ere.core.data import Dataset
from ere.core.errors import (
    AllFitsFailedError,
    ConfigurationError,
    InfeasibleProblemError,
    InvalidPenaltyError,
    NumericalError,
)
from ere.core.glm import FitResult, GlmFamily, bic, estimate_dispersion, fit_mle, initial_coefficients
from ere.enums import PenaltyKind
from ere.settings import settings
from ere.utils.parallel import thread_map


def _index_set(values) -> np.ndarray:
    return np.unique(np.asarray(values, dtype=int).reshape(-1))


@dataclass(frozen=True)
class PenaltyConfig:
    kind: PenaltyKind = PenaltyKind.SCAD
    lam: float = 0.0
    a: float | None = None

    def __post_init__(self) -> None:
        kind = PenaltyKind(self.kind)
        a = self.a
        if a is None:
            a = settings.penalty.SCAD_A if kind == PenaltyKind.SCAD else settings.penalty.MCP_A
        a, lam = float(a), float(self.lam)
        if not np.isfinite(lam) or lam < 0:
            raise InvalidPenaltyError(f"lambda должна быть конечной и неотрицательной, получено {self.lam}")
        if kind == PenaltyKind.SCAD and not (np.isfinite(a) and a > 2):
            raise InvalidPenaltyError(f"Для SCAD нужно a > 2, получено {a}")
        if kind == PenaltyKind.MCP and not (np.isfinite(a) and a > 1):
            raise InvalidPenaltyError(f"Для MCP нужно a > 1, получено {a}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "a", a)

    def with_lambda(self, lam: float) -> PenaltyConfig:
        return replace(self, lam=lam)


def _magnitudes(t: np.ndarray | float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(t >= 0):
        raise ConfigurationError("Аргумент штрафа должен быть неотрицательным")
    return t


def penalty_value(config: PenaltyConfig, t: np.ndarray | float) -> np.ndarray | float:
    """p_lambda(t) при t >= 0."""
    t = _magnitudes(t)
    lam, a = config.lam, config.a
    if config.kind == PenaltyKind.SCAD:
        middle = (2.0 * a * lam * t - t**2 - lam**2) / (2.0 * (a - 1.0))
        value = np.where(t <= lam, lam * t, np.where(t <= a * lam, middle, 0.5 * lam**2 * (a + 1.0)))
    else:
        value = np.where(t <= a * lam, lam * t - t**2 / (2.0 * a), 0.5 * a * lam**2)
    return value if value.ndim else float(value)


def penalty_derivative(config: PenaltyConfig, t: np.ndarray | float) -> np.ndarray | float:
    """p'_lambda(t) при t >= 0 (в нуле правая производная, равная lambda)."""
    t = _magnitudes(t)
    lam, a = config.lam, config.a
    if config.kind == PenaltyKind.SCAD:
        value = np.where(t <= lam, lam, np.maximum(a * lam - t, 0.0) / (a - 1.0))
    else:
        value = np.maximum(lam - t / a, 0.0)
    return value if value.ndim else float(value)


def _empty_index() -> np.ndarray:
    return np.array([], dtype=int)


@dataclass(frozen=True, eq=False)
class PenalizedProblem:
    """Задача со штрафом на отобранных столбцах.

    full: unpenalized = отобранные столбцы модальности, forced_zero пусто;
    reduced: forced_zero = отобранные столбцы модальности, штрафуется всё остальное.
    """

    data: Dataset
    screened: np.ndarray
    unpenalized: np.ndarray = field(default_factory=_empty_index)
    forced_zero: np.ndarray = field(default_factory=_empty_index)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    family: GlmFamily = field(default_factory=GlmFamily)

    def __post_init__(self) -> None:
        screened = _index_set(self.screened)
        unpenalized = _index_set(self.unpenalized)
        forced_zero = _index_set(self.forced_zero)
        if screened.size and (screened[0] < 0 or screened[-1] >= self.data.p):
            raise InfeasibleProblemError(f"Отобранные индексы вне диапазона [0, {self.data.p})")
        if not np.isin(unpenalized, screened).all():
            raise InfeasibleProblemError("Нештрафуемые координаты должны входить в отобранное множество")
        if not np.isin(forced_zero, screened).all():
            raise InfeasibleProblemError("Обнуляемые координаты должны входить в отобранное множество")
        if np.intersect1d(unpenalized, forced_zero).size:
            raise InfeasibleProblemError("Нештрафуемые и обнуляемые координаты пересекаются")
        if screened.size + int(self.data.intercept) >= self.data.n:
            raise InfeasibleProblemError(f"|M| = {screened.size} не меньше n = {self.data.n}")
        object.__setattr__(self, "screened", screened)
        object.__setattr__(self, "unpenalized", unpenalized)
        object.__setattr__(self, "forced_zero", forced_zero)

    @classmethod
    def full(
        cls,
        data: Dataset,
        screened: np.ndarray,
        modality: np.ndarray,
        penalty: PenaltyConfig,
        family: GlmFamily,
    ) -> PenalizedProblem:
        screened = _index_set(screened)
        return cls(data, screened, unpenalized=np.intersect1d(screened, modality), penalty=penalty, family=family)

    @classmethod
    def reduced(
        cls,
        data: Dataset,
        screened: np.ndarray,
        modality: np.ndarray,
        penalty: PenaltyConfig,
        family: GlmFamily,
    ) -> PenalizedProblem:
        screened = _index_set(screened)
        return cls(data, screened, forced_zero=np.intersect1d(screened, modality), penalty=penalty, family=family)

    @property
    def free(self) -> np.ndarray:
        return np.setdiff1d(self.screened, self.forced_zero)

    @property
    def penalized(self) -> np.ndarray:
        return np.setdiff1d(self.free, self.unpenalized)

    def with_penalty(self, penalty: PenaltyConfig) -> PenalizedProblem:
        return replace(self, penalty=penalty)


def _neg_loglik(Z: np.ndarray, y: np.ndarray, family: GlmFamily, coef: np.ndarray) -> float:
    eta = Z @ coef
    if not np.all(family.in_domain(eta)):
        return np.inf
    with np.errstate(all="ignore"):
        ll = float(np.sum(family.loglik_terms(y, eta)))
    return -ll / y.shape[0] if np.isfinite(ll) else np.inf


def _kkt_residual(score: np.ndarray, coef: np.ndarray, weights: np.ndarray) -> float:
    """Невязка условий стационарности для -n^-1 logL + sum w_j |coef_j|; score = n^-1 dlogL."""
    if score.size == 0:
        return 0.0
    residual = np.where(
        coef != 0,
        np.abs(score - weights * np.sign(coef)),
        np.maximum(np.abs(score) - weights, 0.0),
    )
    return float(residual.max())


def _coordinate_descent(
    A: np.ndarray,
    c: np.ndarray,
    start: np.ndarray,
    weights: np.ndarray,
    order: np.ndarray,
    *,
    tol: float,
    max_sweeps: int,
) -> np.ndarray:
    """min_u 1/2 (u - start)^T A (u - start) - c^T (u - start) + sum_j w_j |u_j| по координатам.

    Полный проход, затем проходы по активному множеству до сходимости, затем снова полный.
    """
    u = start.copy()
    grad = -c.copy()
    diag = np.diag(A).copy()
    threshold = tol * max(1.0, float(np.max(np.abs(start))) if start.size else 1.0)

    def sweep(coords: np.ndarray) -> float:
        nonlocal grad
        largest = 0.0
        for j in coords:
            if diag[j] <= 0:
                continue
            z = diag[j] * u[j] - grad[j]
            shrunk = abs(z) - weights[j]
            new = np.copysign(shrunk, z) / diag[j] if shrunk > 0 else 0.0
            delta = new - u[j]
            if delta != 0.0:
                u[j] = new
                grad += A[j] * delta
                largest = max(largest, abs(delta))
        return largest

    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        if sweep(order) <= threshold:
            break
        active = np.array([j for j in order if u[j] != 0 or weights[j] == 0], dtype=int)
        while sweeps < max_sweeps:
            sweeps += 1
            if sweep(active) <= threshold:
                break
    return u


@dataclass
class _InnerOutcome:
    coef: np.ndarray
    iterations: int
    residual: float


def _weighted_l1_fit(
    Z: np.ndarray,
    y: np.ndarray,
    family: GlmFamily,
    coef: np.ndarray,
    weights: np.ndarray,
    order: np.ndarray,
    *,
    max_iter: int,
    tol: float,
    max_halvings: int,
    weight_floor: float,
    cd_tol: float,
    cd_max_sweeps: int,
) -> _InnerOutcome:
    """Проксимальный Ньютон для -n^-1 logL + sum w_j |coef_j|: квадратичная модель по IRLS, шаг с дроблением."""
    n = y.shape[0]
    objective = _neg_loglik(Z, y, family, coef) + float(np.sum(weights * np.abs(coef)))
    iterations = 0
    while iterations < max_iter:
        eta = Z @ coef
        score_i, weight_i = family.working(y, eta)
        score = Z.T @ score_i / n
        if _kkt_residual(score, coef, weights) <= tol:
            break
        iterations += 1
        A = (Z * np.maximum(weight_i, weight_floor)[:, None]).T @ Z / n
        target = _coordinate_descent(A, score, coef, weights, order, tol=cd_tol, max_sweeps=cd_max_sweeps)
        direction = target - coef
        decrease = min(0.0, float(-score @ direction + np.sum(weights * (np.abs(target) - np.abs(coef)))))

        t = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            candidate = coef + t * direction
            value = _neg_loglik(Z, y, family, candidate) + float(np.sum(weights * np.abs(candidate)))
            if value <= objective + 1e-4 * t * decrease + 1e-14 * max(1.0, abs(objective)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            logger.debug(f"Дробление шага исчерпано на итерации {iterations} проксимального Ньютона")
            break
        coef, objective = candidate, value
        if np.max(np.abs(t * direction), initial=0.0) <= cd_tol * max(1.0, float(np.max(np.abs(coef), initial=0.0))):
            break

    score_i, _ = family.working(y, Z @ coef)
    residual = _kkt_residual(Z.T @ score_i / n, coef, weights)
    return _InnerOutcome(coef=coef, iterations=iterations, residual=residual)


def _check_order(order: np.ndarray | list[int] | None, size: int) -> np.ndarray:
    if order is None:
        return np.arange(size)
    order = np.asarray(order, dtype=int)
    if order.shape != (size,) or not np.array_equal(np.sort(order), np.arange(size)):
        raise ConfigurationError(f"order должен быть перестановкой {size} свободных координат")
    return order


def fit_penalized(
    problem: PenalizedProblem,
    *,
    order: np.ndarray | list[int] | None = None,
    lla_steps: int = settings.penalty.LLA_STEPS,
    newton_max_iter: int = settings.penalty.NEWTON_MAX_ITER,
    newton_tol: float = settings.penalty.NEWTON_TOL,
    cd_tol: float = settings.penalty.CD_TOL,
    cd_max_sweeps: int = settings.penalty.CD_MAX_SWEEPS,
    kkt_tol: float = settings.penalty.KKT_TOL,
    max_halvings: int = settings.glm.MAX_HALVINGS,
    weight_floor: float = settings.glm.WEIGHT_FLOOR,
) -> FitResult:
    """LLA от нештрафованного MLE на свободных координатах; каждый шаг решает взвешенную L1-задачу.

    order — порядок обхода свободных координат в координатном спуске (свободный член всегда первый).
    lla_steps: число внешних шагов, от 1 до PENALTY_LLA_MAX_STEPS. converged означает, что последняя
    взвешенная L1-задача решена с точностью kkt_tol; gradient_norm: невязка KKT исходной задачи со штрафом.
    """
    if not 1 <= lla_steps <= settings.penalty.LLA_MAX_STEPS:
        raise ConfigurationError(f"lla_steps должен быть от 1 до {settings.penalty.LLA_MAX_STEPS}, получено {lla_steps}")
    data, family, config = problem.data, problem.family, problem.penalty
    free = problem.free
    order = _check_order(order, free.size)
    base = fit_mle(data, free, family)
    is_penalized = np.isin(free, problem.penalized)
    if config.lam == 0 or not is_penalized.any():
        return replace(base, penalty_lambda=config.lam, objective_trace=(-base.loglik_unscaled / data.n,))

    offset = int(data.intercept)
    Z = data.design(free)
    y = data.y
    if base.quasi_separation or not base.converged:
        logger.warning("MLE на отобранных столбцах неустойчив, LLA стартует из нуля")
        coef = initial_coefficients(Z, y, family, data.intercept)
    else:
        coef = np.concatenate([[base.intercept], base.beta[free]]) if offset else base.beta[free].copy()
    mask = np.concatenate([np.zeros(offset, dtype=bool), is_penalized])
    sweep_order = np.concatenate([np.arange(offset), order + offset]).astype(int)

    def objective(values: np.ndarray) -> float:
        return _neg_loglik(Z, y, family, values) + float(np.sum(penalty_value(config, np.abs(values[mask]))))

    objective_trace = [objective(coef)]
    loglik_trace = [-data.n * _neg_loglik(Z, y, family, coef)]
    inner_residual = 0.0
    for _ in range(lla_steps):
        weights = np.where(mask, penalty_derivative(config, np.abs(coef)), 0.0)
        inner = _weighted_l1_fit(
            Z, y, family, coef, weights, sweep_order,
            max_iter=newton_max_iter, tol=newton_tol, max_halvings=max_halvings,
            weight_floor=weight_floor, cd_tol=cd_tol, cd_max_sweeps=cd_max_sweeps,
        )
        coef, inner_residual = inner.coef, inner.residual
        objective_trace.append(objective(coef))
        loglik_trace.append(-data.n * _neg_loglik(Z, y, family, coef))
    steps = lla_steps

    eta = Z @ coef
    score_i, _ = family.working(y, eta)
    weights = np.where(mask, penalty_derivative(config, np.abs(coef)), 0.0)
    residual = _kkt_residual(Z.T @ score_i / data.n, coef, weights)
    converged = inner_residual <= kkt_tol
    if not converged:
        logger.warning(
            f"LLA не сошёлся: lambda={config.lam:.4g}, шагов {steps}, невязка взвешенной L1-задачи {inner_residual:.3g}"
        )

    beta = np.zeros(data.p)
    beta[free] = coef[offset:]
    support = free[coef[offset:] != 0]
    df = support.size + offset
    ll = -data.n * _neg_loglik(Z, y, family, coef)
    dispersion = estimate_dispersion(family, y, eta, df)
    logger.debug(
        f"LLA: lambda={config.lam:.4g}, |S|={support.size}, шагов {steps}, невязка KKT {residual:.3g}"
    )
    return FitResult(
        beta=beta,
        support=support,
        loglik=ll / dispersion,
        loglik_unscaled=ll,
        dispersion=dispersion,
        converged=converged,
        iterations=steps,
        gradient_norm=residual,
        n=data.n,
        intercept=float(coef[0]) if offset else 0.0,
        has_intercept=data.intercept,
        quasi_separation=bool(family.binary and np.max(np.abs(eta)) > settings.glm.SEPARATION_ETA),
        penalty_lambda=config.lam,
        loglik_trace=tuple(loglik_trace),
        objective_trace=tuple(objective_trace),
    )


def fit_full(problem: PenalizedProblem, **options) -> FitResult:
    """Полная модель: столбцы модальности без штрафа, остальные отобранные со штрафом."""
    if problem.forced_zero.size:
        raise InfeasibleProblemError("Для полной модели множество обнуляемых координат должно быть пустым")
    return fit_penalized(problem, **options)


def fit_reduced(problem: PenalizedProblem, **options) -> FitResult:
    """Редуцированная модель: столбцы модальности обнулены, остальные отобранные со штрафом."""
    if problem.unpenalized.size:
        raise InfeasibleProblemError("В редуцированной модели нештрафуемых координат быть не должно")
    return fit_penalized(problem, **options)


def default_lambda_grid(
    s_tilde: int,
    n: int,
    *,
    size: int = settings.penalty.LAMBDA_GRID_SIZE,
    c_min: float = settings.penalty.LAMBDA_C_MIN,
    c_max: float = settings.penalty.LAMBDA_C_MAX,
) -> np.ndarray:
    """c * sqrt(log s~ / n), c логарифмически в [c_min, c_max]; при s~ < 2 берётся log 2."""
    return np.geomspace(c_min, c_max, size) * np.sqrt(np.log(max(s_tilde, 2)) / n)


@dataclass(frozen=True)
class LambdaPoint:
    lam: float
    bic: float
    df: int
    converged: bool


def select_lambda(
    problem: PenalizedProblem,
    grid: np.ndarray | list[float],
    *,
    threads: int = 1,
    **options,
) -> tuple[float, FitResult, tuple[LambdaPoint, ...]]:
    """lambda с минимальным BIC по сетке; при равенстве берётся большая lambda."""
    lams = sorted({float(lam) for lam in grid}, reverse=True)
    if not lams:
        raise ConfigurationError("Сетка lambda пуста")

    def run(lam: float) -> FitResult | None:
        try:
            return fit_penalized(problem.with_penalty(problem.penalty.with_lambda(lam)), **options)
        except NumericalError as e:
            logger.warning(f"Подгонка при lambda={lam:.4g} не удалась: {e}")
            return None

    fits = thread_map(run, lams, threads=threads)
    trace: list[LambdaPoint] = []
    best: tuple[float, float, FitResult] | None = None
    for lam, fit in zip(lams, fits):
        if fit is None:
            continue
        value = float(bic(problem.data, fit, problem.family))
        trace.append(LambdaPoint(lam=lam, bic=value, df=fit.df, converged=fit.converged))
        if best is None or value < best[1]:
            best = (lam, value, fit)

    if best is None:
        raise AllFitsFailedError(f"Все {len(lams)} подгонок по сетке lambda завершились ошибкой")
    lam, value, fit = best
    logger.debug(f"lambda по BIC: {lam:.4g} (BIC={value:.4g}, |S|={fit.support.size})")
    return lam, fit, tuple(reversed(trace))
