"""
poetry run ere infer --data data.csv --config modalities.json --family logistic --out report.json
"""

import sys

from loguru import logger

from ere.core.errors import EreError
from ere.handlers import get_commands_parser
from ere.lifecycle import on_shutdown, on_startup, setup_logging


def main(argv: list[str] | None = None) -> int:
    """Точка входа CLI; возвращает код выхода (0, 2 конфигурация, 3 данные, 4 численный сбой)."""
    args = get_commands_parser().parse_args(argv)
    setup_logging(args.log_level)
    on_startup(args)
    try:
        exit_code = args.handler(args)
    except EreError as e:
        logger.error(f"{type(e).__name__}: {e}")
        exit_code = e.exit_code
    on_shutdown(args, exit_code)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
