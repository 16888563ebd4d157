"""Контейнеры данных: выборка и разбиение столбцов на модальности."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ere.core.errors import ConfigurationError, DataError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Отклик y и матрица дизайна X (n x p) с именами столбцов.

    intercept=True означает, что все модели на этих данных содержат
    свободный член: он не штрафуется и не входит ни в одну модальность.
    """

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...] = ()
    intercept: bool = False
    standardized: bool = False

    def __post_init__(self) -> None:
        X = _frozen(self.X)
        y = _frozen(self.y).reshape(-1)
        if X.ndim != 2:
            raise DataError(f"X должна быть матрицей, получено ndim={X.ndim}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"Число строк X ({X.shape[0]}) не совпадает с длиной y ({y.shape[0]})")
        if X.shape[0] < 2:
            raise DataError(f"Нужно хотя бы 2 наблюдения, получено {X.shape[0]}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise DataError("X и y не должны содержать NaN/inf")
        names = tuple(self.column_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"Имён столбцов {len(names)}, а столбцов {X.shape[1]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def design(self, columns: np.ndarray) -> np.ndarray:
        """Подматрица по столбцам (с единичным столбцом впереди, если есть intercept)."""
        Z = self.X[:, np.asarray(columns, dtype=int)]
        if self.intercept:
            Z = np.column_stack([np.ones(self.n), Z])
        return Z


@dataclass(frozen=True)
class ModalityPartition:
    """Именованные непересекающиеся блоки индексов столбцов."""

    names: tuple[str, ...]
    blocks: tuple[tuple[int, ...], ...]
    p: int = field(default=0)

    def __post_init__(self) -> None:
        if len(self.names) != len(self.blocks):
            raise ConfigurationError("Число имён модальностей не совпадает с числом блоков")
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError(f"Имена модальностей повторяются: {self.names}")
        seen: set[int] = set()
        for name, block in zip(self.names, self.blocks):
            overlap = seen.intersection(block)
            if overlap:
                raise ConfigurationError(f"Модальность '{name}' пересекается с другими по столбцам {sorted(overlap)}")
            seen.update(block)
        p = self.p or (max(seen) + 1 if seen else 0)
        if seen and (min(seen) < 0 or max(seen) >= p):
            raise ConfigurationError(f"Индексы модальностей вне диапазона [0, {p})")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_sizes(cls, sizes: list[int], names: list[str] | None = None) -> ModalityPartition:
        """Последовательные блоки заданных размеров."""
        names = names or [f"modality{m + 1}" for m in range(len(sizes))]
        bounds = np.cumsum([0, *sizes])
        blocks = tuple(tuple(range(int(lo), int(hi))) for lo, hi in zip(bounds[:-1], bounds[1:]))
        return cls(names=tuple(names), blocks=blocks, p=int(bounds[-1]))

    @property
    def M(self) -> int:
        return len(self.names)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigurationError(f"Неизвестная модальность '{name}', доступны: {', '.join(self.names)}") from None

    def columns(self, m: int | str) -> np.ndarray:
        """Индексы столбцов модальности (по номеру или имени)."""
        if isinstance(m, str):
            m = self.index_of(m)
        return np.asarray(self.blocks[m], dtype=int)

    def columns_of(self, modalities: list[int | str]) -> np.ndarray:
        """Объединение столбцов нескольких модальностей."""
        parts = [self.columns(m) for m in modalities]
        return np.sort(np.concatenate(parts)) if parts else np.array([], dtype=int)
