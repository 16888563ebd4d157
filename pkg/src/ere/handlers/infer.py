"""
Команда infer: скрининг -> частично штрафованные подгонки -> H^_m, интервал и p-значение.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import ValidationError

from ere.core.errors import ConfigurationError, NumericalError, in_stage, writing
from ere.core.glm import FitResult, GlmFamily
from ere.core.inference import infer
from ere.core.screening import run_screening
from ere.enums import Method
from ere.handlers.common import add_data_arguments, float_list, name_list
from ere.schemas import AnalysisConfig, AnalysisReport, FitDiagnostics, ModalityReport
from ere.settings import settings
from ere.sim.methods import run_method
from ere.utils.formatting import render_report_table
from ere.utils.ingest import ingest, load_modality_map


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("infer", help="ERE модальностей на пользовательских данных")
    add_data_arguments(parser)
    parser.add_argument("--modality", type=name_list, default=[], help="Целевые модальности через запятую (по умолчанию все)")
    parser.add_argument("--alpha", type=float, default=settings.inference.ALPHA, help="Уровень значимости")
    parser.add_argument("--one-sided", action="store_true", help="Только нижняя доверительная граница")
    parser.add_argument("--lambda-grid", type=float_list, default=None, help="Сетка lambda через запятую")
    parser.add_argument("--penalty", default="scad", choices=["scad", "mcp"], help="Штраф")
    parser.add_argument("--seed", type=int, default=0, help="Зерно (записывается в отчёт)")
    parser.add_argument("--out", type=Path, default=None, help="Путь для JSON-отчёта")
    parser.set_defaults(handler=handle)


def config_from_args(args: argparse.Namespace) -> AnalysisConfig:
    try:
        return AnalysisConfig(
            data_path=args.data,
            modality_map=load_modality_map(args.config),
            family=args.family,
            targets=args.modality,
            alpha=args.alpha,
            one_sided=args.one_sided,
            threshold=args.threshold,
            lambda_grid=args.lambda_grid,
            penalty=args.penalty,
            standardize=not args.no_standardize,
            intercept=not args.no_intercept,
            seed=args.seed,
            threads=args.threads,
            out=args.out,
        )
    except ValidationError as e:
        raise ConfigurationError(f"Некорректные параметры: {e}", stage="config") from None


def _diagnostics(fit: FitResult, lam: float) -> FitDiagnostics:
    return FitDiagnostics(
        lam=lam,
        converged=fit.converged,
        iterations=fit.iterations,
        kkt_residual=fit.gradient_norm,
        support_size=int(fit.support.size),
        quasi_separation=fit.quasi_separation,
    )


def run_analysis(config: AnalysisConfig) -> AnalysisReport:
    """Весь конвейер для целевых модальностей; детерминирован при фиксированных входах."""
    family = GlmFamily(config.family)
    with in_stage("ingest"):
        data, partition = ingest(
            config.data_path, config.modality_map, family,
            standardize=config.standardize, intercept=config.intercept,
        )
    with in_stage("config"):
        targets = config.targets or list(partition.names)
        for name in targets:
            partition.index_of(name)

    with in_stage("screening"):
        screen_result = run_screening(data, family, threshold=config.threshold, threads=config.threads)
        if screen_result.s_tilde == 0:
            raise NumericalError(f"Порог {screen_result.threshold:.4g} не оставил ни одной переменной")
    logger.info(f"gamma_n={screen_result.threshold:.6g}, s~={screen_result.s_tilde}")

    names = np.array(data.column_names)
    grid = np.asarray(config.lambda_grid) if config.lambda_grid is not None else None
    reports = []
    for name in targets:
        with in_stage(f"fit:{name}"):
            outcome = run_method(
                data, partition, name, Method.SIS_SCAD, family,
                screen_result=screen_result, lambda_grid=grid,
                penalty_kind=config.penalty, threads=config.threads,
            )
        with in_stage(f"inference:{name}"):
            result = infer(outcome.estimate, config.alpha, two_sided=not config.one_sided)
        logger.info(
            f"{name}: s~_m={outcome.estimate.s_tilde_m}, lambda1={outcome.lambda_full:.6g}, "
            f"lambda2={outcome.lambda_reduced:.6g}, сходимость full={outcome.full.converged}, "
            f"reduced={outcome.reduced.converged}, H^={result.h_hat:.6g}, p={result.p_value:.3g}"
        )
        if outcome.full.quasi_separation or outcome.reduced.quasi_separation:
            logger.warning(f"{name}: квази-разделимость в подгонке, H^ и интервал ненадёжны")
        screened_m = np.intersect1d(screen_result.selected, partition.columns(name))
        reports.append(
            ModalityReport(
                modality=name,
                h_hat=result.h_hat,
                raw_diff=outcome.estimate.raw_diff,
                ci_lower=result.ci_lower,
                ci_upper=result.ci_upper if np.isfinite(result.ci_upper) else None,
                p_value=result.p_value,
                log_p_value=result.log_p_value,
                r2_hat=result.r2_hat,
                r2_ci_lower=result.r2_ci_lower,
                r2_ci_upper=result.r2_ci_upper,
                s_tilde_m=result.s_tilde_m,
                screened_columns=names[screened_m].tolist(),
                selected_columns=names[outcome.full.support].tolist(),
                screened_out=result.screened_out,
                clamped=result.clamped,
                full_fit=_diagnostics(outcome.full, outcome.lambda_full),
                reduced_fit=_diagnostics(outcome.reduced, outcome.lambda_reduced),
            )
        )

    return AnalysisReport(
        family=family.kind.value,
        canonical=family.canonical,
        n=data.n,
        p=data.p,
        alpha=config.alpha,
        one_sided=config.one_sided,
        standardized=data.standardized,
        intercept=data.intercept,
        penalty=config.penalty.value,
        seed=config.seed,
        threshold=screen_result.threshold,
        s_tilde=screen_result.s_tilde,
        screened_columns=names[screen_result.selected].tolist(),
        modalities=reports,
    )


def infer_command(config: AnalysisConfig) -> AnalysisReport:
    """run_analysis + JSON-отчёт в config.out + таблица в stdout."""
    report = run_analysis(config)
    if config.out is not None:
        with writing(config.out):
            config.out.parent.mkdir(parents=True, exist_ok=True)
            config.out.write_bytes(report.to_json())
        logger.info(f"Отчёт записан в {config.out}")
    print(render_report_table(report))
    return report


def handle(args: argparse.Namespace) -> int:
    infer_command(config_from_args(args))
    return 0
