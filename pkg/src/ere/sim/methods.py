"""Три метода оценки H_m: oracle, SIS+SCAD и SIS+refit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger

from ere.core.data import Dataset, ModalityPartition
from ere.core.entropy import EreEstimate, estimate_ere
from ere.core.errors import ConfigurationError
from ere.core.glm import FitResult, GlmFamily, fit_mle
from ere.core.penalized import (
    PenalizedProblem,
    PenaltyConfig,
    default_lambda_grid,
    fit_full,
    fit_reduced,
    select_lambda,
)
from ere.core.screening import ScreenResult, run_screening
from ere.enums import Method, PenaltyKind


@dataclass(frozen=True, eq=False)
class MethodOutcome:
    """Оценка H_m и диагностика обеих подгонок."""

    method: Method
    estimate: EreEstimate
    full: FitResult
    reduced: FitResult
    screened: np.ndarray
    threshold: float | None = None
    lambda_full: float = 0.0
    lambda_reduced: float = 0.0
    sensitivity: float | None = None
    specificity: float | None = None


def selection_rates(support: np.ndarray, true_support: np.ndarray, p: int) -> tuple[float, float]:
    """(чувствительность, специфичность) носителя относительно истинного."""
    support, true_support = np.asarray(support, dtype=int), np.asarray(true_support, dtype=int)
    negatives = p - true_support.size
    hits = np.intersect1d(support, true_support).size
    false_hits = np.setdiff1d(support, true_support).size
    sensitivity = hits / true_support.size if true_support.size else 1.0
    specificity = (negatives - false_hits) / negatives if negatives else 1.0
    return float(sensitivity), float(specificity)


def run_method(
    data: Dataset,
    partition: ModalityPartition,
    m: int | str,
    method: Method | str,
    family: GlmFamily,
    *,
    true_support: np.ndarray | None = None,
    screen_result: ScreenResult | None = None,
    lambda_grid: np.ndarray | None = None,
    penalty_kind: PenaltyKind = PenaltyKind.SCAD,
    threads: int = 1,
) -> MethodOutcome:
    """Полная и редуцированная подгонки выбранным методом и H^_m по ним.

    oracle: MLE на true_support и true_support без модальности, степени свободы s_m;
    sis_scad: скрининг, затем частично штрафованные подгонки с lambda по BIC;
    sis_refit: скрининг, затем те же подгонки при lambda_1 = lambda_2 = 0.
    screen_result позволяет разделить первый этап между методами.
    """
    method = Method(method)
    modality = partition.columns(m)

    if method == Method.ORACLE:
        if true_support is None:
            raise ConfigurationError("Для oracle нужен истинный носитель")
        support = np.unique(np.asarray(true_support, dtype=int))
        full = fit_mle(data, support, family)
        reduced = fit_mle(data, np.setdiff1d(support, modality), family)
        s_m = int(np.intersect1d(support, modality).size)
        estimate = estimate_ere(full, reduced, data, family, s_m)
        sensitivity, specificity = selection_rates(full.support, support, data.p)
        return MethodOutcome(
            method=method, estimate=estimate, full=full, reduced=reduced, screened=support,
            sensitivity=sensitivity, specificity=specificity,
        )

    if screen_result is None:
        screen_result = run_screening(data, family, threads=threads)
    screened = screen_result.selected
    s_tilde_m = int(np.intersect1d(screened, modality).size)
    zero = PenaltyConfig(kind=penalty_kind, lam=0.0)
    full_problem = PenalizedProblem.full(data, screened, modality, zero, family)
    reduced_problem = PenalizedProblem.reduced(data, screened, modality, zero, family)

    if method == Method.SIS_REFIT:
        lambda_full = lambda_reduced = 0.0
        full = fit_full(full_problem)
        reduced = fit_reduced(reduced_problem) if s_tilde_m else full
    else:
        grid = lambda_grid if lambda_grid is not None else default_lambda_grid(screened.size, data.n)
        lambda_full, full, _ = select_lambda(full_problem, grid, threads=threads)
        if s_tilde_m:
            lambda_reduced, reduced, _ = select_lambda(reduced_problem, grid, threads=threads)
        else:
            lambda_reduced, reduced = lambda_full, full

    estimate = estimate_ere(full, reduced, data, family, s_tilde_m)
    logger.debug(
        f"{method.value}: gamma={screen_result.threshold:.4g}, s~={screened.size}, s~_m={s_tilde_m}, "
        f"lambda1={lambda_full:.4g}, lambda2={lambda_reduced:.4g}, H^={estimate.h_hat:.4g}"
    )
    rates = (None, None)
    if true_support is not None:
        rates = selection_rates(full.support, true_support, data.p)
    return MethodOutcome(
        method=method,
        estimate=estimate,
        full=full,
        reduced=reduced,
        screened=screened,
        threshold=screen_result.threshold,
        lambda_full=lambda_full,
        lambda_reduced=lambda_reduced,
        sensitivity=rates[0],
        specificity=rates[1],
    )
