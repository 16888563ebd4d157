"""
Pydantic-схемы входной конфигурации.

ModalityMap — JSON-карта модальностей {"response": ..., "modalities": [{"name": ..., "columns": [...]}]}.
AnalysisConfig — полный набор параметров команды infer.
"""

from __future__ import annotations

from pathlib import Path

from pydantic import BaseModel, Field, model_validator

from ere.enums import FamilyKind, PenaltyKind


class ModalitySpec(BaseModel):
    """Одна модальность: имя и столбцы CSV."""

    name: str = Field(min_length=1, description="Имя модальности")
    columns: list[str] = Field(min_length=1, description="Столбцы CSV, входящие в модальность")


class ModalityMap(BaseModel):
    """Отклик и непересекающиеся модальности."""

    response: str = Field(min_length=1, description="Столбец отклика")
    modalities: list[ModalitySpec] = Field(min_length=1, description="Модальности в порядке столбцов дизайна")

    @model_validator(mode="after")
    def check_disjoint(self) -> ModalityMap:
        names = [spec.name for spec in self.modalities]
        if len(set(names)) != len(names):
            raise ValueError(f"Имена модальностей повторяются: {names}")
        owner: dict[str, str] = {}
        for spec in self.modalities:
            for column in spec.columns:
                if column == self.response:
                    raise ValueError(f"Столбец отклика '{column}' не может входить в модальность '{spec.name}'")
                if column in owner:
                    raise ValueError(f"Столбец '{column}' входит в модальности '{owner[column]}' и '{spec.name}'")
                owner[column] = spec.name
        return self


class AnalysisConfig(BaseModel):
    """Параметры конвейера infer: скрининг, частично штрафованные подгонки, инференс."""

    data_path: Path = Field(description="CSV с заголовком")
    modality_map: ModalityMap = Field(description="Отклик и модальности")
    family: FamilyKind = Field(default=FamilyKind.GAUSSIAN, description="Семейство GLM")
    targets: list[str] = Field(default_factory=list, description="Целевые модальности (пусто — все)")
    alpha: float = Field(default=0.05, gt=0, lt=1, description="Уровень значимости")
    one_sided: bool = Field(default=False, description="Односторонняя нижняя граница вместо интервала")
    threshold: float | None = Field(default=None, ge=0, description="Фиксированный порог скрининга gamma_n")
    lambda_grid: list[float] | None = Field(default=None, description="Сетка lambda для обеих подгонок")
    penalty: PenaltyKind = Field(default=PenaltyKind.SCAD, description="Штраф")
    standardize: bool = Field(default=True, description="Центрировать и нормировать столбцы")
    intercept: bool = Field(default=True, description="Свободный член во всех моделях")
    seed: int = Field(default=0, description="Зерно, записывается в отчёт")
    threads: int | None = Field(default=None, ge=0, description="Потоки для сетки lambda (0 или None — все ядра)")
    out: Path | None = Field(default=None, description="Путь для JSON-отчёта")

    @model_validator(mode="after")
    def check_lambda_grid(self) -> AnalysisConfig:
        if self.lambda_grid is not None:
            if not self.lambda_grid:
                raise ValueError("Сетка lambda пуста")
            if any(lam < 0 for lam in self.lambda_grid):
                raise ValueError("Значения lambda должны быть неотрицательными")
        return self
