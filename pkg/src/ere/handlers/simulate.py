"""
Команда simulate: покрытие доверительных интервалов на моделях 1-3.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import pandas as pd
from loguru import logger

from ere.core.errors import ConfigurationError
from ere.core.glm import GlmFamily
from ere.enums import FamilyKind, Method
from ere.handlers.common import float_list, name_list
from ere.settings import settings
from ere.sim.coverage import run_coverage, to_frame, write_csv
from ere.sim.models import MODEL_DELTAS, MODEL_PATTERNS, SimModel


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Монте-Карло покрытие интервалов")
    parser.add_argument("--model", type=int, required=True, choices=sorted(MODEL_PATTERNS), help="Номер модели")
    parser.add_argument("--delta", type=float_list, default=None, help="Сетка delta через запятую (по умолчанию сетка модели)")
    parser.add_argument(
        "--method",
        type=name_list,
        default=[method.value for method in Method],
        help=f"Методы через запятую: {', '.join(method.value for method in Method)}",
    )
    parser.add_argument("--reps", type=int, default=None, help="Число репликаций")
    parser.add_argument("--alpha", type=float, default=settings.inference.ALPHA, help="Уровень значимости")
    parser.add_argument("--seed", type=int, default=settings.sim.BASE_SEED, help="Базовое зерно")
    parser.add_argument("--out", type=Path, default=None, help="CSV для результатов")
    parser.add_argument("--small", action="store_true", help="Уменьшенный дизайн n=200, p=400")
    parser.add_argument(
        "--probit-fit",
        default=FamilyKind.PROBIT.value,
        choices=[FamilyKind.PROBIT.value, FamilyKind.LOGISTIC.value],
        help="Семейство подгонки для модели 3",
    )
    parser.add_argument("--threads", type=int, default=0, help="Потоки для репликаций (0 — все ядра)")
    parser.add_argument("--mc-samples", type=int, default=settings.sim.MC_SAMPLES, help="Выборка Монте-Карло для H_m")
    parser.set_defaults(handler=handle)


def _methods(names: list[str]) -> list[Method]:
    try:
        return [Method(name) for name in names]
    except ValueError:
        raise ConfigurationError(
            f"Неизвестный метод в {names}, доступны: {', '.join(method.value for method in Method)}"
        ) from None


def simulate_command(
    model_id: int,
    deltas: list[float] | None,
    methods: list[Method],
    reps: int,
    alpha: float,
    seed: int,
    out: Path | None,
    *,
    small: bool = False,
    probit_fit: FamilyKind = FamilyKind.PROBIT,
    threads: int = 0,
    mc_samples: int = settings.sim.MC_SAMPLES,
) -> pd.DataFrame:
    """run_coverage по сетке delta модели + CSV в out + таблица в stdout."""
    model = SimModel.preset(model_id, small=small)
    fit_family = None
    if model.family.kind == FamilyKind.PROBIT and probit_fit != FamilyKind.PROBIT:
        fit_family = GlmFamily(probit_fit)
        logger.info(f"Модель {model_id}: подгонка семейством {probit_fit.value} (неверная спецификация)")

    rows = run_coverage(
        model,
        deltas or list(MODEL_DELTAS[model_id]),
        methods,
        reps=reps,
        alpha=alpha,
        base_seed=seed,
        fit_family=fit_family,
        threads=threads,
        mc_samples=mc_samples,
    )
    if out is not None:
        write_csv(rows, out)
        logger.info(f"Результаты записаны в {out}")
    frame = to_frame(rows)
    print(frame.to_string(index=False))
    return frame


def handle(args: argparse.Namespace) -> int:
    reps = args.reps if args.reps is not None else (settings.sim.SMALL_REPS if args.small else settings.sim.REPS)
    simulate_command(
        args.model,
        args.delta,
        _methods(args.method),
        reps,
        args.alpha,
        args.seed,
        args.out,
        small=args.small,
        probit_fit=FamilyKind(args.probit_fit),
        threads=args.threads,
        mc_samples=args.mc_samples,
    )
    return 0
