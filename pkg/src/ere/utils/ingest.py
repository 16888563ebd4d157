"""Чтение CSV и карты модальностей в Dataset и ModalityPartition."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import orjson
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from ere.core.data import Dataset, ModalityPartition
from ere.core.errors import ConfigurationError, DataError, IngestError
from ere.core.glm import GlmFamily
from ere.schemas import ModalityMap

# номер строки файла = индекс строки данных + 2 (строка 1 занята заголовком)
_HEADER_LINES = 2


def load_modality_map(path: Path | str) -> ModalityMap:
    """JSON-карта модальностей."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Файл карты модальностей не найден: {path}")
    try:
        return ModalityMap.model_validate(orjson.loads(path.read_bytes()))
    except orjson.JSONDecodeError as e:
        raise ConfigurationError(f"Некорректный JSON в {path}: {e}") from None
    except ValidationError as e:
        raise ConfigurationError(f"Некорректная карта модальностей {path}: {e}") from None
    except OSError as e:
        raise ConfigurationError(f"Не удалось прочитать {path}: {e.strerror or e}") from None


def read_table(path: Path | str) -> pd.DataFrame:
    """CSV как строки: пропуски и нечисловые ячейки проверяются отдельно с номерами строк."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"Файл данных не найден: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except pd.errors.EmptyDataError:
        raise IngestError(f"Файл {path} пуст") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise IngestError(f"Не удалось разобрать {path}: {e}") from None
    except OSError as e:
        raise IngestError(f"Не удалось прочитать {path}: {e.strerror or e}") from None
    return frame


def to_numeric(frame: pd.DataFrame, columns: list[str]) -> np.ndarray:
    """Столбцы в float; пустые, NA и нечисловые ячейки дают ошибку с номером строки файла и столбцом."""
    raw = frame[columns]
    values = raw.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
    if bad.to_numpy().any():
        rows, cols = np.nonzero(bad.to_numpy())
        examples = [
            f"строка {rows[i] + _HEADER_LINES}, столбец '{columns[cols[i]]}' = '{raw.iat[rows[i], cols[i]]}'"
            for i in range(min(5, rows.size))
        ]
        bad_rows = sorted({int(r) + _HEADER_LINES for r in rows})
        raise IngestError(
            f"Пропущенные или нечисловые ячейки в {len(bad_rows)} строках ({', '.join(map(str, bad_rows[:20]))}): "
            + "; ".join(examples)
        )
    return values.to_numpy(dtype=float)


def standardize_columns(X: np.ndarray, names: tuple[str, ...]) -> np.ndarray:
    """Центрирование и нормировка на стандартное отклонение; постоянные столбцы только центрируются."""
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    constant = scale <= 1e-12 * np.maximum(1.0, np.abs(center))
    if constant.any():
        logger.warning(f"Постоянные столбцы не нормируются: {[names[j] for j in np.flatnonzero(constant)]}")
    return (X - center) / np.where(constant, 1.0, scale)


def ingest(
    data_path: Path | str,
    modality_map: ModalityMap,
    family: GlmFamily,
    *,
    standardize: bool = True,
    intercept: bool = True,
) -> tuple[Dataset, ModalityPartition]:
    """CSV -> (Dataset, ModalityPartition); столбцы дизайна идут в порядке модальностей карты."""
    frame = read_table(data_path)
    header = set(frame.columns)
    if modality_map.response not in header:
        raise ConfigurationError(f"Столбец отклика '{modality_map.response}' отсутствует в заголовке")
    for spec in modality_map.modalities:
        missing = [column for column in spec.columns if column not in header]
        if missing:
            raise ConfigurationError(f"Модальность '{spec.name}' ссылается на отсутствующие столбцы: {missing}")

    names = [column for spec in modality_map.modalities for column in spec.columns]
    unused = header - set(names) - {modality_map.response}
    if unused:
        logger.info(f"Столбцы вне модальностей пропущены: {sorted(unused)}")

    X = to_numeric(frame, names)
    y = to_numeric(frame, [modality_map.response])[:, 0]
    try:
        family.check_response(y)
    except DataError as e:
        raise DataError(f"Отклик '{modality_map.response}' не подходит семейству: {e}") from None
    if standardize and X.shape[0] > 1:
        X = standardize_columns(X, tuple(names))

    partition = ModalityPartition.from_sizes(
        [len(spec.columns) for spec in modality_map.modalities],
        names=[spec.name for spec in modality_map.modalities],
    )
    data = Dataset(X=X, y=y, column_names=tuple(names), intercept=intercept, standardized=standardize)
    logger.info(f"Загружено n={data.n}, p={data.p}, модальностей {partition.M} из {data_path}")
    return data, partition
