"""
Ожидаемая относительная энтропия (ERE) модальности.

H_m = 2 E_x KL(p(y|x) || p(y|x_{-m})). Здесь: девиансная оценка H_m по двум подгонкам,
замкнутая форма для линейной модели с гауссовскими ковариатами, Монте-Карло для
остальных семейств и псевдо-R^2 = 1 - exp(-H_m).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from loguru import logger
from scipy import linalg

from ere.core.data import Dataset
from ere.core.errors import ConfigurationError, SingularCovarianceError
from ere.core.glm import FitResult, GlmFamily, deviance_difference, fit_mle
from ere.enums import GroundTruthMethod
from ere.settings import settings
from ere.utils.parallel import thread_map


@dataclass(frozen=True)
class EreEstimate:
    h_hat: float
    raw_diff: float
    s_tilde_m: int
    n: int
    clamped: bool = False
    screened_out: bool = False
    canonical: bool = True


@dataclass(frozen=True)
class GroundTruthEre:
    h: float
    method: GroundTruthMethod
    mc_samples: int = 0
    mc_std_error: float = 0.0


def estimate_ere(
    full: FitResult,
    reduced: FitResult,
    data: Dataset,
    family: GlmFamily,
    s_tilde_m: int,
) -> EreEstimate:
    """H^_m = max(0, (2/n) {log L_n(full) - log L_n(reduced)}) при дисперсии полной модели."""
    raw = deviance_difference(full, reduced, data.n)
    if s_tilde_m == 0:
        logger.warning("Модальность полностью отсеяна скринингом: H^_m = 0")
        return EreEstimate(
            h_hat=0.0, raw_diff=raw, s_tilde_m=0, n=data.n, screened_out=True, canonical=family.canonical
        )
    clamped = raw < 0
    if clamped:
        logger.warning(f"Отрицательная разность девианс {raw:.4g} обрезана до 0")
    return EreEstimate(
        h_hat=max(raw, 0.0),
        raw_diff=raw,
        s_tilde_m=int(s_tilde_m),
        n=data.n,
        clamped=clamped,
        canonical=family.canonical,
    )


def _modality_split(p: int, modality: np.ndarray | list[int]) -> tuple[np.ndarray, np.ndarray]:
    m = np.unique(np.asarray(modality, dtype=int))
    if m.size and (m[0] < 0 or m[-1] >= p):
        raise ConfigurationError(f"Индексы модальности вне диапазона [0, {p})")
    return m, np.setdiff1d(np.arange(p), m)


def conditional_variance(Sigma: np.ndarray, beta_star: np.ndarray, modality: np.ndarray | list[int]) -> float:
    """sigma^2_{m|-m} = Var(x_m^T beta*_m | x_{-m}) для x ~ N(0, Sigma)."""
    Sigma = np.asarray(Sigma, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    p = beta_star.size
    if Sigma.shape != (p, p) or not np.allclose(Sigma, Sigma.T):
        raise ConfigurationError(f"Sigma должна быть симметричной матрицей {p}x{p}")
    m, rest = _modality_split(p, modality)
    beta_m = beta_star[m]
    total = float(beta_m @ Sigma[np.ix_(m, m)] @ beta_m)
    if rest.size == 0 or not np.any(beta_m):
        return total
    cross = Sigma[np.ix_(rest, m)] @ beta_m
    try:
        factor = linalg.cho_factor(Sigma[np.ix_(rest, rest)])
    except linalg.LinAlgError:
        raise SingularCovarianceError("Ковариация остальных модальностей вырождена") from None
    return max(total - float(cross @ linalg.cho_solve(factor, cross)), 0.0)


def ere_linear_closed_form(
    Sigma: np.ndarray,
    beta_star: np.ndarray,
    modality: np.ndarray | list[int],
    sigma_eps2: float,
) -> float:
    """H_m = log((s2 + sigma_eps2) / sigma_eps2) + (beta*_m^T Sigma_m beta*_m - s2) / (s2 + sigma_eps2), s2 = sigma^2_{m|-m}."""
    if not sigma_eps2 > 0:
        raise ConfigurationError(f"Дисперсия шума должна быть положительной, получено {sigma_eps2}")
    beta_star = np.asarray(beta_star, dtype=float)
    m, _ = _modality_split(beta_star.size, modality)
    conditional = conditional_variance(Sigma, beta_star, m)
    beta_m = beta_star[m]
    total = float(beta_m @ np.asarray(Sigma, dtype=float)[np.ix_(m, m)] @ beta_m)
    denominator = conditional + sigma_eps2
    return max(float(np.log(denominator / sigma_eps2) + (total - conditional) / denominator), 0.0)


def linear_reduced_model(
    Sigma: np.ndarray,
    beta_star: np.ndarray,
    modality: np.ndarray | list[int],
    sigma_eps2: float,
) -> tuple[np.ndarray, float]:
    """Редуцированная линейная модель замкнутой формы: (beta* с обнулённой модальностью, sigma_eps2 + sigma^2_{m|-m})."""
    beta_0 = np.array(beta_star, dtype=float)
    m, _ = _modality_split(beta_0.size, modality)
    dispersion_0 = sigma_eps2 + conditional_variance(Sigma, beta_star, m)
    beta_0[m] = 0.0
    return beta_0, dispersion_0


@dataclass(frozen=True, eq=False)
class CovariateSampler:
    """x ~ N_p(0, Sigma): равнокоррелированная (1 - rho) I + rho J или заданная SPD-матрица."""

    p: int
    rho: float = 0.2
    Sigma: np.ndarray | None = None
    _chol: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.Sigma is None:
            if not 0 <= self.rho < 1:
                raise ConfigurationError(f"Равная корреляция должна быть в [0, 1), получено {self.rho}")
            return
        Sigma = np.array(self.Sigma, dtype=float)
        if Sigma.shape != (self.p, self.p) or not np.allclose(Sigma, Sigma.T):
            raise ConfigurationError(f"Sigma должна быть симметричной матрицей {self.p}x{self.p}")
        try:
            chol = linalg.cholesky(Sigma, lower=True) if self.p else Sigma
        except linalg.LinAlgError:
            raise SingularCovarianceError("Ковариационная матрица не положительно определена") from None
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def equicorrelated(cls, p: int, rho: float = 0.2) -> CovariateSampler:
        return cls(p=p, rho=rho)

    @classmethod
    def from_covariance(cls, Sigma: np.ndarray) -> CovariateSampler:
        Sigma = np.asarray(Sigma, dtype=float)
        return cls(p=Sigma.shape[0], Sigma=Sigma)

    def covariance(self) -> np.ndarray:
        if self.Sigma is not None:
            return self.Sigma.copy()
        return (1.0 - self.rho) * np.eye(self.p) + self.rho * np.ones((self.p, self.p))

    def marginal(self, columns: np.ndarray | list[int]) -> CovariateSampler:
        """Распределение подвектора x_columns."""
        columns = np.asarray(columns, dtype=int)
        if self.Sigma is None:
            return CovariateSampler(p=columns.size, rho=self.rho)
        return CovariateSampler.from_covariance(self.Sigma[np.ix_(columns, columns)])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.Sigma is None:
            Z = rng.standard_normal((size, self.p))
            g = rng.standard_normal((size, 1))
            return np.sqrt(1.0 - self.rho) * Z + np.sqrt(self.rho) * g
        return rng.standard_normal((size, self.p)) @ self._chol.T


def mc_ere(
    family: GlmFamily,
    beta_star: np.ndarray,
    beta_0: np.ndarray,
    sampler: CovariateSampler,
    N: int = settings.entropy.MC_SAMPLES,
    seed: int = 0,
    *,
    shards: int = 1,
    intercept_star: float = 0.0,
    intercept_0: float = 0.0,
    dispersion: float = 1.0,
    dispersion_0: float | None = None,
    chunk: int = settings.entropy.MC_CHUNK,
    min_samples: int = settings.entropy.MIN_MC_SAMPLES,
) -> GroundTruthEre:
    """H = (2/N) sum_i KL(p(y|x_i, beta*) || p(y|x_i, beta_0)) по N выборкам x.

    Шарды получают независимые потоки SeedSequence(seed).spawn(shards); результат
    зависит только от seed и числа шардов.
    """
    if N < min_samples:
        raise ConfigurationError(f"Нужно не меньше {min_samples} выборок Монте-Карло, получено {N}")
    if shards < 1:
        raise ConfigurationError(f"Число шардов должно быть положительным, получено {shards}")
    beta_star = np.asarray(beta_star, dtype=float)
    beta_0 = np.asarray(beta_0, dtype=float)
    if beta_star.shape != (sampler.p,) or beta_0.shape != (sampler.p,):
        raise ConfigurationError(f"beta* и beta_0 должны иметь длину {sampler.p}")

    columns = np.flatnonzero((beta_star != 0) | (beta_0 != 0))
    sub = sampler.marginal(columns)
    b_star, b_0 = beta_star[columns], beta_0[columns]
    sizes = [N // shards + int(i < N % shards) for i in range(shards)]
    streams = np.random.SeedSequence(seed).spawn(shards)

    def run(job: tuple[np.random.SeedSequence, int]) -> tuple[float, float]:
        stream, size = job
        rng = np.random.default_rng(stream)
        total, squares, done = 0.0, 0.0, 0
        while done < size:
            rows = min(chunk, size - done)
            x = sub.sample(rng, rows)
            terms = 2.0 * family.kl_divergence(
                x @ b_star + intercept_star, x @ b_0 + intercept_0, dispersion, dispersion_0
            )
            total += float(np.sum(terms))
            squares += float(np.sum(terms**2))
            done += rows
        return total, squares

    parts = np.array(thread_map(run, list(zip(streams, sizes)), threads=shards))
    total, squares = np.sum(parts[:, 0]), np.sum(parts[:, 1])
    h = total / N
    variance = max(squares - N * h**2, 0.0) / (N - 1)
    result = GroundTruthEre(
        h=max(float(h), 0.0),
        method=GroundTruthMethod.MONTE_CARLO,
        mc_samples=N,
        mc_std_error=float(np.sqrt(variance / N)),
    )
    logger.debug(f"Монте-Карло H = {result.h:.6g} +- {result.mc_std_error:.2g} (N={N}, шардов {shards})")
    return result


def fit_pseudo_true(
    family: GlmFamily,
    beta_star: np.ndarray,
    support_0: np.ndarray | list[int],
    sampler: CovariateSampler,
    *,
    n_samples: int = settings.sim.TRUTH_SAMPLES,
    seed: int = 0,
    intercept: bool = False,
    noise_sd: float = settings.glm.GAUSSIAN_NOISE_SD,
) -> tuple[np.ndarray, float]:
    """Псевдоистинный beta_0: MLE рабочей модели на support_0 по независимой синтетической выборке.

    Возвращает (beta_0 длины p, свободный член, если intercept=True, иначе 0).
    """
    beta_star = np.asarray(beta_star, dtype=float)
    support_0 = np.unique(np.asarray(support_0, dtype=int))
    columns = np.union1d(np.flatnonzero(beta_star), support_0)
    rng = np.random.default_rng(seed)
    x = sampler.marginal(columns).sample(rng, n_samples)
    y = family.sample_response(rng, x @ beta_star[columns], noise_sd)
    local = np.searchsorted(columns, support_0)
    fit = fit_mle(Dataset(x, y, intercept=intercept), local, family)
    beta_0 = np.zeros(beta_star.size)
    beta_0[support_0] = fit.beta[local]
    return beta_0, fit.intercept


def pseudo_r2(h: np.ndarray | float) -> np.ndarray | float:
    """R^2_m = 1 - exp(-H_m)."""
    h = np.asarray(h, dtype=float)
    if not np.all(h >= 0):
        raise ConfigurationError("H_m должна быть неотрицательной")
    value = -np.expm1(-h)
    return value if value.ndim else float(value)


def pseudo_r2_inverse(r2: np.ndarray | float) -> np.ndarray | float:
    """H_m = -log(1 - R^2_m)."""
    r2 = np.asarray(r2, dtype=float)
    if not np.all((r2 >= 0) & (r2 < 1)):
        raise ConfigurationError("R^2 должен лежать в [0, 1)")
    value = -np.log1p(-r2)
    return value if value.ndim else float(value)
