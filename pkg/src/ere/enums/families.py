"""Семейства экспоненциального класса и режимы дисперсии."""

from enum import Enum


class FamilyKind(str, Enum):
    """Поддерживаемые семейства GLM (имена совпадают с флагом --family)."""

    GAUSSIAN = "gaussian"
    LOGISTIC = "logistic"
    POISSON = "poisson"
    EXPONENTIAL = "exponential"
    PROBIT = "probit"


class DispersionMode(str, Enum):
    """Фиксированная (phi = 1) или оцениваемая по остаткам дисперсия."""

    FIXED = "fixed"
    ESTIMATED = "estimated"
