"""
Pydantic-схемы выходных отчётов.

AnalysisReport — результат infer (версия схемы 1): по строке на целевую модальность.
ScreenReport — диагностика скрининга: MMLE по столбцам и след BIC.
"""

from __future__ import annotations

from typing import Literal

import orjson
from pydantic import BaseModel, Field

SCHEMA_VERSION = 1


class _JsonModel(BaseModel):
    def to_json(self) -> bytes:
        return orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_INDENT_2)

    @classmethod
    def from_json(cls, raw: bytes | str):
        return cls.model_validate(orjson.loads(raw))


class FitDiagnostics(BaseModel):
    """Диагностика одной подгонки (полной или редуцированной)."""

    lam: float = Field(description="Выбранная lambda")
    converged: bool = Field(description="Флаг сходимости")
    iterations: int = Field(description="Итерации (шаги LLA или Ньютона)")
    kkt_residual: float = Field(description="Невязка KKT или норма градиента")
    support_size: int = Field(description="Число ненулевых коэффициентов")
    quasi_separation: bool = Field(default=False, description="Признак квази-разделимости")


class ModalityReport(BaseModel):
    """Оценка ERE одной модальности."""

    modality: str = Field(description="Имя модальности")
    h_hat: float = Field(description="Оценка H_m")
    raw_diff: float = Field(description="Разность девианс до обрезки нулём")
    ci_lower: float = Field(description="Нижняя граница для H_m")
    ci_upper: float | None = Field(description="Верхняя граница для H_m (None для односторонней)")
    p_value: float = Field(description="P(chi^2_{s~_m} > n H^_m)")
    log_p_value: float = Field(description="Натуральный логарифм p-значения")
    r2_hat: float = Field(description="Псевдо-R^2 = 1 - exp(-H^_m)")
    r2_ci_lower: float = Field(description="Нижняя граница для R^2")
    r2_ci_upper: float = Field(description="Верхняя граница для R^2")
    s_tilde_m: int = Field(description="Число отобранных столбцов модальности")
    screened_columns: list[str] = Field(default_factory=list, description="Отобранные столбцы модальности")
    selected_columns: list[str] = Field(default_factory=list, description="Носитель полной модели")
    screened_out: bool = Field(default=False, description="Модальность полностью отсеяна")
    clamped: bool = Field(default=False, description="Отрицательная разность обрезана до 0")
    full_fit: FitDiagnostics = Field(description="Полная модель")
    reduced_fit: FitDiagnostics = Field(description="Редуцированная модель")


class AnalysisReport(_JsonModel):
    """Отчёт команды infer."""

    schema_version: Literal[1] = SCHEMA_VERSION
    family: str = Field(description="Семейство GLM")
    canonical: bool = Field(description="Каноническое семейство (probit — нет)")
    n: int = Field(description="Число наблюдений")
    p: int = Field(description="Число столбцов дизайна")
    alpha: float = Field(description="Уровень значимости")
    one_sided: bool = Field(description="Односторонняя граница")
    standardized: bool = Field(description="Столбцы стандартизованы")
    intercept: bool = Field(description="Модели со свободным членом")
    penalty: str = Field(description="Штраф")
    seed: int = Field(description="Зерно запуска")
    threshold: float = Field(description="Порог скрининга gamma_n")
    s_tilde: int = Field(description="Размер отобранного множества")
    screened_columns: list[str] = Field(default_factory=list, description="Все отобранные столбцы")
    modalities: list[ModalityReport] = Field(default_factory=list, description="Результаты по модальностям")


class ScreenColumn(BaseModel):
    name: str
    modality: str | None = None
    mmle: float
    intercept: float
    selected: bool
    degenerate: bool = False


class BicTracePoint(BaseModel):
    threshold: float
    size: int
    bic: float


class ScreenReport(_JsonModel):
    """Отчёт команды screen."""

    schema_version: Literal[1] = SCHEMA_VERSION
    family: str
    n: int
    p: int
    threshold: float = Field(description="Выбранный или заданный порог gamma_n")
    s_tilde: int
    s_tilde_by_modality: dict[str, int] = Field(default_factory=dict)
    columns: list[ScreenColumn] = Field(default_factory=list, description="Столбцы по убыванию |MMLE|")
    bic_trace: list[BicTracePoint] = Field(default_factory=list)
