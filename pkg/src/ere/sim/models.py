"""Симуляционные дизайны: равнокоррелированные гауссовские ковариаты и разреженный beta* по модальностям."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ere.core.data import Dataset, ModalityPartition
from ere.core.entropy import CovariateSampler
from ere.core.errors import ConfigurationError
from ere.core.glm import GlmFamily
from ere.enums import FamilyKind
from ere.settings import settings

# ненулевые начала beta*_m; остальные координаты модальности нулевые
MODEL_PATTERNS: dict[int, tuple[FamilyKind, tuple[tuple[float, ...], ...]]] = {
    1: (FamilyKind.GAUSSIAN, ((-1.15, 1.0, 1.75), (-0.6, -0.8, 0.45), (-0.75, 0.8, -0.75))),
    2: (FamilyKind.LOGISTIC, ((0.5, -1.0, -1.6, 0.9), (0.4, 0.8, -0.7, -1.4))),
    3: (FamilyKind.PROBIT, ((0.5, 0.6, -0.7, -0.9), (0.4, 0.5, -0.6, -0.7))),
}

MODEL_DELTAS: dict[int, tuple[float, ...]] = {
    1: (0.6, 0.8, 1.0, 1.2, 1.6, 2.0),
    2: (1.0, 1.2, 1.4, 1.7, 2.0, 2.3),
    3: (1.0, 1.1, 1.2, 1.3, 1.4, 1.5),
}


def even_sizes(p: int, M: int) -> list[int]:
    """p столбцов на M модальностей почти поровну (первые получают остаток)."""
    return [p // M + int(m < p % M) for m in range(M)]


@dataclass(frozen=True, eq=False)
class SimModel:
    """Модель симуляции: X ~ N_p(0, (1 - rho) I + rho J), beta* = delta * (паттерны модальностей)."""

    model_id: int
    n: int
    p: int
    modalities: ModalityPartition
    patterns: tuple[tuple[float, ...], ...]
    family: GlmFamily
    delta: float = 1.0
    rho: float = 0.2
    noise_sd: float = settings.glm.GAUSSIAN_NOISE_SD
    _beta_star: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 2 or self.p < 1:
            raise ConfigurationError(f"Недопустимые размеры n={self.n}, p={self.p}")
        if self.modalities.p != self.p:
            raise ConfigurationError(f"Разбиение на модальности покрывает {self.modalities.p} столбцов, а p = {self.p}")
        if len(self.patterns) != self.modalities.M:
            raise ConfigurationError("Число паттернов beta* не совпадает с числом модальностей")
        beta = np.zeros(self.p)
        for block, pattern in zip(self.modalities.blocks, self.patterns):
            if len(pattern) > len(block):
                raise ConfigurationError(f"Паттерн длины {len(pattern)} не помещается в модальность из {len(block)}")
            beta[list(block[: len(pattern)])] = self.delta * np.asarray(pattern, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "_beta_star", beta)

    @classmethod
    def preset(
        cls,
        model_id: int,
        delta: float = 1.0,
        *,
        small: bool = False,
        n: int | None = None,
        p: int | None = None,
    ) -> SimModel:
        """Модели 1-3 в размерах n=300, p=600 (small: n=200, p=400)."""
        try:
            kind, patterns = MODEL_PATTERNS[model_id]
        except KeyError:
            raise ConfigurationError(f"Неизвестная модель {model_id}, доступны: {sorted(MODEL_PATTERNS)}") from None
        n = n or (settings.sim.SMALL_N if small else settings.sim.N)
        p = p or (settings.sim.SMALL_P if small else settings.sim.P)
        partition = ModalityPartition.from_sizes(even_sizes(p, len(patterns)))
        return cls(
            model_id=model_id,
            n=n,
            p=p,
            modalities=partition,
            patterns=patterns,
            family=GlmFamily(kind),
            delta=delta,
        )

    @property
    def beta_star(self) -> np.ndarray:
        return self._beta_star

    @property
    def true_support(self) -> np.ndarray:
        return np.flatnonzero(self._beta_star)

    @property
    def sampler(self) -> CovariateSampler:
        return CovariateSampler.equicorrelated(self.p, self.rho)

    def with_delta(self, delta: float) -> SimModel:
        return replace(self, delta=delta)

    def with_size(self, n: int) -> SimModel:
        return replace(self, n=n)

    def generate(self, seed: int) -> Dataset:
        """X = sqrt(1 - rho) Z + sqrt(rho) g 1^T, y по закону семейства; определяется seed полностью."""
        rng = np.random.default_rng(seed)
        X = self.sampler.sample(rng, self.n)
        y = self.family.sample_response(rng, X @ self._beta_star, self.noise_sd)
        return Dataset(X=X, y=y)
