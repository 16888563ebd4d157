"""
Sure Independence Screening по маргинальным MLE и выбор порога по BIC.

MMLE для столбца j — двухпараметрическая подгонка (свободный член + наклон)
GLM отклика на один X_j; M = {j : |beta_j^M| >= gamma}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from ere.core.data import Dataset
from ere.core.errors import ConfigurationError, EmptyFeasibleGridError, NumericalError
from ere.core.glm import GlmFamily, bic, fit_mle
from ere.enums import GridSizeRule
from ere.settings import settings
from ere.utils.parallel import thread_map


@dataclass(frozen=True)
class MarginalFit:
    intercept: float
    slope: float
    converged: bool = True
    degenerate: bool = False  # постоянный столбец


@dataclass(frozen=True)
class BicPoint:
    threshold: float
    size: int
    bic: float


@dataclass(frozen=True, eq=False)
class ScreenResult:
    mmle: np.ndarray
    intercepts: np.ndarray
    selected: np.ndarray
    threshold: float
    bic_trace: tuple[BicPoint, ...] = ()
    degenerate: np.ndarray | None = None
    unconverged: np.ndarray | None = None

    @property
    def s_tilde(self) -> int:
        return int(self.selected.size)


def _marginal_block(
    X: np.ndarray,
    y: np.ndarray,
    family: GlmFamily,
    *,
    max_iter: int,
    grad_tol: float,
    max_halvings: int,
    weight_floor: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Ньютон для всех столбцов блока сразу (матрица 2x2 на столбец, обращение явно)."""
    n, p = X.shape
    centered = X - X.mean(axis=0)
    degenerate = np.sqrt(np.mean(centered**2, axis=0)) <= 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0))
    alpha = np.full(p, float(family.link(np.mean(y))))
    slope = np.zeros(p)

    def loglik(a: np.ndarray, s: np.ndarray) -> np.ndarray:
        eta = a[None, :] + X * s[None, :]
        ok = family.in_domain(eta).all(axis=0)
        with np.errstate(all="ignore"):
            values = family.loglik_terms(y[:, None], np.where(ok[None, :], eta, 1.0)).sum(axis=0)
        return np.where(ok & np.isfinite(values), values, -np.inf)

    ll = loglik(alpha, slope)
    active = ~degenerate
    converged = degenerate.copy()
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Xa = X[:, idx]
        eta = alpha[idx][None, :] + Xa * slope[idx][None, :]
        score, weight = family.working(y[:, None], eta)
        weight = np.maximum(weight, weight_floor)
        g0 = score.sum(axis=0)
        g1 = (score * Xa).sum(axis=0)
        done = np.hypot(g0, g1) <= grad_tol * np.maximum(1.0, np.abs(ll[idx]))
        converged[idx[done]] = True
        active[idx[done]] = False
        keep = ~done
        idx, g0, g1 = idx[keep], g0[keep], g1[keep]
        if idx.size == 0:
            break
        Xa, weight = Xa[:, keep], weight[:, keep]
        h00 = weight.sum(axis=0)
        h01 = (weight * Xa).sum(axis=0)
        h11 = (weight * Xa**2).sum(axis=0)
        det = h00 * h11 - h01**2
        det = np.where(np.abs(det) > 0, det, np.finfo(float).tiny)
        d0 = (h11 * g0 - h01 * g1) / det
        d1 = (h00 * g1 - h01 * g0) / det

        t = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        new_a, new_s = alpha[idx].copy(), slope[idx].copy()
        new_ll = ll[idx].copy()
        for _ in range(max_halvings + 1):
            cand_a = alpha[idx] + t * d0
            cand_s = slope[idx] + t * d1
            X_sub = X[:, idx]
            eta_c = cand_a[None, :] + X_sub * cand_s[None, :]
            ok = family.in_domain(eta_c).all(axis=0)
            with np.errstate(all="ignore"):
                vals = family.loglik_terms(y[:, None], np.where(ok[None, :], eta_c, 1.0)).sum(axis=0)
            vals = np.where(ok & np.isfinite(vals), vals, -np.inf)
            accept = pending & (vals >= ll[idx] - 1e-12 * np.maximum(1.0, np.abs(ll[idx])))
            new_a[accept], new_s[accept], new_ll[accept] = cand_a[accept], cand_s[accept], vals[accept]
            pending &= ~accept
            if not pending.any():
                break
            t[pending] *= 0.5
        # столбцы, где дробление не помогло, замораживаем
        active[idx[pending]] = False
        alpha[idx], slope[idx], ll[idx] = new_a, new_s, new_ll

    slope[degenerate] = 0.0
    return alpha, slope, converged, degenerate


def marginal_mmle_all(
    data: Dataset,
    family: GlmFamily,
    *,
    threads: int = 1,
    block_size: int = 256,
    max_iter: int = settings.glm.MAX_ITER,
    grad_tol: float = settings.glm.GRAD_TOL,
    max_halvings: int = settings.glm.MAX_HALVINGS,
    weight_floor: float = settings.glm.WEIGHT_FLOOR,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """MMLE для всех столбцов: (intercepts, slopes, converged, degenerate), по порядку столбцов."""
    family.check_response(data.y)
    blocks = [np.arange(lo, min(lo + block_size, data.p)) for lo in range(0, data.p, block_size)]

    def run(cols: np.ndarray):
        return _marginal_block(
            data.X[:, cols], data.y, family,
            max_iter=max_iter, grad_tol=grad_tol, max_halvings=max_halvings, weight_floor=weight_floor,
        )

    parts = thread_map(run, blocks, threads=threads)
    if not parts:
        empty = np.zeros(0)
        return empty, empty, empty.astype(bool), empty.astype(bool)
    intercepts, slopes, converged, degenerate = (np.concatenate(arrays) for arrays in zip(*parts))
    if (~converged).any():
        logger.warning(f"MMLE не сошлись для {int((~converged).sum())} столбцов")
    if degenerate.any():
        logger.warning(f"Постоянные столбцы (наклон 0): {int(degenerate.sum())}")
    return intercepts, slopes, converged, degenerate


def marginal_mmle(data: Dataset, j: int, family: GlmFamily) -> MarginalFit:
    """Маргинальная подгонка отклика на столбец j со свободным членом."""
    intercept, slope, converged, degenerate = _marginal_block(
        data.X[:, [j]], data.y, family,
        max_iter=settings.glm.MAX_ITER,
        grad_tol=settings.glm.GRAD_TOL,
        max_halvings=settings.glm.MAX_HALVINGS,
        weight_floor=settings.glm.WEIGHT_FLOOR,
    )
    return MarginalFit(
        intercept=float(intercept[0]),
        slope=float(slope[0]),
        converged=bool(converged[0]),
        degenerate=bool(degenerate[0]),
    )


def screen(mmle: np.ndarray, gamma: float) -> np.ndarray:
    """{j : |mmle_j| >= gamma} (0-based индексы)."""
    return np.flatnonzero(np.abs(np.asarray(mmle, dtype=float)) >= gamma)


def default_threshold_grid(
    mmle: np.ndarray,
    n: int,
    *,
    intercept: bool = False,
    max_size: int | None = None,
    size: int = settings.screening.GRID_SIZE,
    upper_quantile: float = settings.screening.GRID_UPPER_QUANTILE,
    rule: GridSizeRule = settings.screening.GRID_SIZE_RULE,
) -> np.ndarray:
    """Логарифмическая сетка от порога, оставляющего max_size столбцов, до квантиля |mmle|.

    rule=feasible: max_size = n - 1 без учёта свободного члена, квантиль берётся по всем |mmle|.
    rule=n_over_log_n (по умолчанию): max_size = min(n - 1, n / log n), квантиль по этим
    max_size столбцам. У почти насыщенных гауссовских моделей RSS -> 0 и BIC уходит в минус
    бесконечность. Явный max_size заменяет правило.
    """
    rule = GridSizeRule(rule)
    magnitudes = np.sort(np.abs(np.asarray(mmle, dtype=float)))[::-1]
    positive = magnitudes[magnitudes > 0]
    if positive.size == 0:
        return np.array([0.0])
    feasible = n - 1 - int(intercept)
    if max_size is None:
        if rule == GridSizeRule.FEASIBLE or n <= 2:
            max_size = feasible
        else:
            max_size = int(n / np.log(n))
    max_size = min(max_size, feasible)
    if max_size < 1:
        return np.array([positive[0]])
    lower = positive[min(max_size, positive.size) - 1]
    pool = magnitudes if rule == GridSizeRule.FEASIBLE else positive[:max_size]
    upper = float(np.quantile(pool, upper_quantile))
    if upper <= lower:
        return np.array([lower])
    return np.geomspace(lower, upper, size)


def select_threshold(
    data: Dataset,
    mmle: np.ndarray,
    grid: np.ndarray | list[float],
    family: GlmFamily,
) -> tuple[float, tuple[BicPoint, ...]]:
    """Порог по правилу «минимум BIC плюс одна стандартная ошибка».

    Возвращает наименьший порог из {gamma : BIC(gamma) <= min BIC + SE},
    SE = выборочное стандартное отклонение BIC по сетке / sqrt(размер сетки).
    """
    trace: list[BicPoint] = []
    for gamma in sorted({float(g) for g in grid}):
        selected = screen(mmle, gamma)
        if selected.size + int(data.intercept) >= data.n:
            logger.warning(f"Порог {gamma:.4g} отброшен: |M| = {selected.size} >= n")
            continue
        try:
            fit = fit_mle(data, selected, family)
        except NumericalError as e:
            logger.warning(f"Порог {gamma:.4g} отброшен: {e}")
            continue
        trace.append(BicPoint(threshold=gamma, size=int(selected.size), bic=float(bic(data, fit, family))))

    if not trace:
        raise EmptyFeasibleGridError("Ни одна точка сетки порогов не дала допустимую модель")

    values = np.array([point.bic for point in trace])
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    cutoff = float(values.min()) + se
    gamma = min(point.threshold for point in trace if point.bic <= cutoff)
    logger.debug(f"Порог SIS: gamma={gamma:.4g}, min BIC={values.min():.4g}, SE={se:.4g}")
    return gamma, tuple(trace)


def run_screening(
    data: Dataset,
    family: GlmFamily,
    *,
    threshold: float | None = None,
    grid: np.ndarray | None = None,
    threads: int = 1,
) -> ScreenResult:
    """MMLE -> (выбор порога) -> M. Фиксированный threshold отключает выбор по BIC."""
    intercepts, slopes, converged, degenerate = marginal_mmle_all(data, family, threads=threads)
    trace: tuple[BicPoint, ...] = ()
    if threshold is None:
        if grid is None:
            grid = default_threshold_grid(slopes, data.n, intercept=data.intercept)
        threshold, trace = select_threshold(data, slopes, grid, family)
    selected = screen(slopes, threshold)
    if selected.size + int(data.intercept) >= data.n:
        raise ConfigurationError(f"Порог {threshold:.4g} оставляет {selected.size} переменных, нужно меньше n = {data.n}")
    logger.info(f"SIS: gamma_n={threshold:.4g}, s_tilde={selected.size}")
    return ScreenResult(
        mmle=slopes,
        intercepts=intercepts,
        selected=selected,
        threshold=float(threshold),
        bic_trace=trace,
        degenerate=degenerate,
        unconverged=~converged,
    )
