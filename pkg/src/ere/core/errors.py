"""Исключения ere.

Три класса верхнего уровня соответствуют кодам выхода CLI:
конфигурация (2), данные (3), численный сбой (4).
"""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path


class EreError(Exception):
    """Базовое исключение пакета."""

    exit_code: int = 1

    def __init__(self, message: str, *, stage: str | None = None) -> None:
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        message = super().__str__()
        if self.stage:
            return f"[{self.stage}] {message}"
        return message


class ConfigurationError(EreError):
    """Некорректная конфигурация запуска."""

    exit_code = 2


class DataError(EreError):
    """Некорректные входные данные."""

    exit_code = 3


class NumericalError(EreError):
    """Численный сбой при подгонке или инференсе."""

    exit_code = 4


class IngestError(DataError):
    """Ошибка чтения или валидации CSV."""

    pass


class FamilyDomainError(NumericalError):
    """Линейный предиктор вне области определения семейства."""

    def __init__(self, message: str, *, fraction: float | None = None, stage: str | None = None) -> None:
        super().__init__(message, stage=stage)
        self.fraction = fraction


class RankDeficiencyError(NumericalError):
    """Столбцы носителя линейно зависимы."""

    pass


class EmptyFeasibleGridError(NumericalError):
    """Ни одна точка сетки порогов не дала |M| < n."""

    pass


class AllFitsFailedError(NumericalError):
    """Все подгонки по сетке lambda завершились ошибкой."""

    pass


class SingularCovarianceError(NumericalError):
    """Вырожденная ковариационная или информационная матрица."""

    pass


class InvalidPenaltyError(ConfigurationError):
    """Недопустимые параметры штрафа."""

    pass


class InfeasibleProblemError(ConfigurationError):
    """Несогласованные множества индексов в задаче со штрафом."""

    pass


class OutputError(ConfigurationError):
    """Не удалось записать результат по пути из --out."""

    pass


@contextmanager
def in_stage(name: str) -> Iterator[None]:
    """Помечает исключения ere, вылетевшие из блока, именем этапа конвейера."""
    try:
        yield
    except EreError as e:
        if e.stage is None:
            e.stage = name
        raise


@contextmanager
def writing(path: Path | str) -> Iterator[None]:
    """OSError при записи результата превращается в OutputError с путём."""
    try:
        yield
    except OSError as e:
        raise OutputError(f"Не удалось записать {path}: {e.strerror or e}") from None
