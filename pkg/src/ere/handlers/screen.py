"""
Команда screen: только первый этап, ранжирование MMLE и след BIC.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from loguru import logger

from ere.core.errors import in_stage, writing
from ere.core.glm import GlmFamily
from ere.core.screening import ScreenResult, run_screening
from ere.enums import FamilyKind
from ere.handlers.common import add_data_arguments
from ere.schemas import BicTracePoint, ScreenColumn, ScreenReport
from ere.utils.formatting import render_screen_table
from ere.utils.ingest import ingest, load_modality_map


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("screen", help="Диагностика скрининга")
    add_data_arguments(parser)
    parser.add_argument("--top", type=int, default=20, help="Сколько столбцов показать в таблице")
    parser.add_argument("--out", type=Path, default=None, help="Путь для JSON-отчёта")
    parser.set_defaults(handler=handle)


def build_screen_report(
    result: ScreenResult,
    column_names: tuple[str, ...],
    owners: dict[str, str],
    family: GlmFamily,
    n: int,
) -> ScreenReport:
    """Столбцы по убыванию |MMLE|; при равенстве сохраняется порядок дизайна."""
    selected = np.zeros(len(column_names), dtype=bool)
    selected[result.selected] = True
    degenerate = result.degenerate if result.degenerate is not None else np.zeros(len(column_names), dtype=bool)
    order = np.argsort(-np.abs(result.mmle), kind="stable")
    columns = [
        ScreenColumn(
            name=column_names[j],
            modality=owners.get(column_names[j]),
            mmle=float(result.mmle[j]),
            intercept=float(result.intercepts[j]),
            selected=bool(selected[j]),
            degenerate=bool(degenerate[j]),
        )
        for j in order
    ]
    by_modality: dict[str, int] = {}
    for column in columns:
        if column.modality is not None:
            by_modality.setdefault(column.modality, 0)
            by_modality[column.modality] += int(column.selected)
    return ScreenReport(
        family=family.kind.value,
        n=n,
        p=len(column_names),
        threshold=result.threshold,
        s_tilde=result.s_tilde,
        s_tilde_by_modality=by_modality,
        columns=columns,
        bic_trace=[BicTracePoint(threshold=point.threshold, size=point.size, bic=point.bic) for point in result.bic_trace],
    )


def handle(args: argparse.Namespace) -> int:
    family = GlmFamily(FamilyKind(args.family))
    with in_stage("ingest"):
        modality_map = load_modality_map(args.config)
        data, _ = ingest(
            args.data, modality_map, family,
            standardize=not args.no_standardize, intercept=not args.no_intercept,
        )
    with in_stage("screening"):
        result = run_screening(data, family, threshold=args.threshold, threads=args.threads)

    owners = {column: spec.name for spec in modality_map.modalities for column in spec.columns}
    report = build_screen_report(result, data.column_names, owners, family, data.n)
    if args.out is not None:
        with writing(args.out):
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_bytes(report.to_json())
        logger.info(f"Отчёт скрининга записан в {args.out}")
    print(render_screen_table(report, top=args.top))
    return 0
