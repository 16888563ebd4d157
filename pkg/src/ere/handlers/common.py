"""Общие аргументы команд infer и screen."""

from __future__ import annotations

import argparse
from pathlib import Path

from ere.enums import FamilyKind


def float_list(value: str) -> list[float]:
    """'1,2.3' -> [1.0, 2.3]."""
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Ожидался список чисел через запятую, получено '{value}'") from None


def name_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", type=Path, required=True, help="CSV с заголовком (UTF-8)")
    parser.add_argument("--config", type=Path, required=True, help="JSON-карта отклика и модальностей")
    parser.add_argument(
        "--family",
        default=FamilyKind.GAUSSIAN.value,
        choices=[kind.value for kind in FamilyKind],
        help="Семейство GLM",
    )
    parser.add_argument("--threshold", type=float, default=None, help="Фиксированный порог скрининга вместо BIC")
    parser.add_argument("--threads", type=int, default=0, help="Число потоков (0 — все ядра)")
    parser.add_argument("--no-standardize", action="store_true", help="Не центрировать и не нормировать столбцы")
    parser.add_argument("--no-intercept", action="store_true", help="Модели без свободного члена")
