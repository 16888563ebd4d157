"""
Нецентральное хи-квадрат и доверительные интервалы для H_m.

n H^_m приближённо распределено как chi^2_{s~_m}(Gamma_n). Границы C_l, C_u находятся
бисекцией по параметру нецентральности из F_{s~_m, C}(n H^_m) = 1 - alpha/2 и alpha/2,
p-значение равно P(chi^2_{s~_m} > n H^_m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.special import gammainc, gammaincc, gammaln
from scipy.stats import poisson

from ere.core.entropy import EreEstimate, pseudo_r2
from ere.core.errors import ConfigurationError, NumericalError
from ere.settings import settings


def _check_dof(k: int) -> None:
    if k < 1:
        raise ConfigurationError(f"Число степеней свободы должно быть >= 1, получено {k}")


def ncx2_cdf(
    k: int,
    theta: float,
    x: float,
    *,
    tail: float = settings.inference.POISSON_TAIL,
) -> float:
    """F_{k,theta}(x) как пуассоновская смесь центральных chi^2_{k+2j}.

    Слагаемые берутся между квантилями Poisson(theta/2) уровней tail/2 и 1 - tail/2.
    """
    _check_dof(k)
    if not theta >= 0:
        raise ConfigurationError(f"Параметр нецентральности должен быть >= 0, получено {theta}")
    if x <= 0:
        return 0.0
    if theta == 0:
        return float(gammainc(k / 2.0, x / 2.0))
    rate = theta / 2.0
    lo = int(poisson.ppf(tail / 2.0, rate))
    hi = int(poisson.isf(tail / 2.0, rate)) + 1
    j = np.arange(lo, hi + 1)
    weights = np.exp(poisson.logpmf(j, rate))
    value = float(np.sum(weights * gammainc(k / 2.0 + j, x / 2.0)))
    return min(max(value, 0.0), 1.0)


def chi2_sf(k: int, x: float) -> float:
    """P(chi^2_k > x)."""
    _check_dof(k)
    if x <= 0:
        return 1.0
    return float(gammaincc(k / 2.0, x / 2.0))


def chi2_log_sf(k: int, x: float) -> float:
    """log P(chi^2_k > x); в хвосте, где P < 1e-300, по асимптотике неполной гамма-функции."""
    value = chi2_sf(k, x)
    if value > 1e-300:
        return float(np.log(value))
    a, z = k / 2.0, x / 2.0
    series, term = 1.0, 1.0
    for i in range(1, 60):
        next_term = term * (a - i) / z
        if abs(next_term) >= abs(term) or next_term == 0:
            break
        term = next_term
        series += term
    return float((a - 1.0) * np.log(z) - z - gammaln(a) + np.log(series))


def solve_noncentrality(
    k: int,
    x: float,
    target_prob: float,
    *,
    rel_width: float = settings.inference.BISECT_REL_WIDTH,
    max_doublings: int = settings.inference.MAX_DOUBLINGS,
) -> float:
    """theta >= 0 с F_{k,theta}(x) = target_prob; 0, если уже F_{k,0}(x) <= target_prob."""
    _check_dof(k)
    if not 0 < target_prob < 1:
        raise ConfigurationError(f"Целевая вероятность должна быть в (0, 1), получено {target_prob}")
    if ncx2_cdf(k, 0.0, x) <= target_prob:
        return 0.0

    lo, hi = 0.0, 1.0
    for _ in range(max_doublings):
        if ncx2_cdf(k, hi, x) < target_prob:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NumericalError(f"Не удалось найти верхнюю границу для theta (k={k}, x={x:.4g})")

    while hi - lo > rel_width * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if ncx2_cdf(k, mid, x) >= target_prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EreInference:
    """Точечная оценка, интервал и p-значение для H_m; для one_sided ci_upper = inf."""

    h_hat: float
    n: int
    s_tilde_m: int
    alpha: float
    ci_lower: float
    ci_upper: float
    p_value: float
    log_p_value: float
    r2_hat: float
    r2_ci_lower: float
    r2_ci_upper: float
    one_sided: bool = False
    screened_out: bool = False
    clamped: bool = False
    canonical: bool = True


def infer(
    estimate: EreEstimate,
    alpha: float = settings.inference.ALPHA,
    two_sided: bool = True,
) -> EreInference:
    """Интервал [C_l/n, C_u/n] (или [C_l/n, inf) при two_sided=False) и p-значение."""
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha должна быть в (0, 1), получено {alpha}")
    if estimate.n < 1:
        raise ConfigurationError(f"n должно быть >= 1, получено {estimate.n}")

    if estimate.screened_out or estimate.s_tilde_m == 0:
        return EreInference(
            h_hat=0.0, n=estimate.n, s_tilde_m=0, alpha=alpha,
            ci_lower=0.0, ci_upper=0.0, p_value=1.0, log_p_value=0.0,
            r2_hat=0.0, r2_ci_lower=0.0, r2_ci_upper=0.0,
            one_sided=not two_sided, screened_out=True, clamped=estimate.clamped, canonical=estimate.canonical,
        )

    k, n = estimate.s_tilde_m, estimate.n
    statistic = n * estimate.h_hat
    if two_sided:
        lower = solve_noncentrality(k, statistic, 1.0 - alpha / 2.0) / n
        upper = solve_noncentrality(k, statistic, alpha / 2.0) / n
    else:
        lower = solve_noncentrality(k, statistic, 1.0 - alpha) / n
        upper = np.inf

    result = EreInference(
        h_hat=estimate.h_hat,
        n=n,
        s_tilde_m=k,
        alpha=alpha,
        ci_lower=lower,
        ci_upper=upper,
        p_value=chi2_sf(k, statistic),
        log_p_value=chi2_log_sf(k, statistic),
        r2_hat=pseudo_r2(estimate.h_hat),
        r2_ci_lower=pseudo_r2(lower),
        r2_ci_upper=pseudo_r2(upper) if np.isfinite(upper) else 1.0,
        one_sided=not two_sided,
        clamped=estimate.clamped,
        canonical=estimate.canonical,
    )
    if not estimate.canonical:
        logger.warning("Семейство вне канонической теории: интервал приближённый")
    logger.debug(
        f"Инференс: n*H^={statistic:.4g}, s~_m={k}, CI=[{lower:.4g}, {upper:.4g}], p={result.p_value:.3g}"
    )
    return result
