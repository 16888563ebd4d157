"""Штрафы и методы оценивания."""

from enum import Enum


class PenaltyKind(str, Enum):
    """Folded-concave штрафы."""

    SCAD = "scad"
    MCP = "mcp"


class Method(str, Enum):
    """Методы из симуляционного сравнения."""

    ORACLE = "oracle"
    SIS_SCAD = "sis_scad"
    SIS_REFIT = "sis_refit"


class GroundTruthMethod(str, Enum):
    """Способ вычисления истинного H_m."""

    CLOSED_FORM_LINEAR = "closed-form-linear"
    MONTE_CARLO = "monte-carlo"


class GridSizeRule(str, Enum):
    """Сколько столбцов может оставить самый мягкий порог сетки SIS."""

    FEASIBLE = "feasible"  # n - 1
    N_OVER_LOG_N = "n_over_log_n"  # min(n - 1, n / log n)
