import argparse

from ere.handlers import infer, screen, simulate
from ere.settings import settings


def get_commands_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ere",
        description="Ожидаемая относительная энтропия (ERE) модальностей в многомодальных GLM",
    )
    parser.add_argument(
        "--log-level",
        default=settings.logger_config.LOG_LEVEL,
        choices=["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"],
        help="Уровень логирования (вывод в stderr)",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    infer.add_parser(subparsers)
    simulate.add_parser(subparsers)
    screen.add_parser(subparsers)
    return parser
