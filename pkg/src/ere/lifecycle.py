"""Lifecycle hooks для CLI (startup/shutdown)."""

import argparse
import sys

from loguru import logger

from ere.settings import settings


def setup_logging(level: str = settings.logger_config.LOG_LEVEL) -> None:
    """Логи в stderr: stdout занят таблицами результатов."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <8} | {message}")


def on_startup(args: argparse.Namespace) -> None:
    """Параметры запуска в лог: по ним запуск воспроизводится."""
    logger.info(f"ere {args.command} starting...")
    logger.debug("=" * 50)
    for key, value in sorted(vars(args).items()):
        if key not in {"handler", "command", "log_level"}:
            logger.debug(f"{key:<16} - {value}")
    logger.debug(f"LLA steps     - {settings.penalty.LLA_STEPS} (max {settings.penalty.LLA_MAX_STEPS})")
    logger.debug(f"KKT tol       - {settings.penalty.KKT_TOL}")
    logger.debug("=" * 50)


def on_shutdown(args: argparse.Namespace, exit_code: int) -> None:
    if exit_code == 0:
        logger.info(f"ere {args.command} finished")
    else:
        logger.info(f"ere {args.command} stopped with code {exit_code}")
