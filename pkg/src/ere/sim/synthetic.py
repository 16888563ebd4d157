"""Синтетические CSV и карты модальностей по моделям симуляции."""

from __future__ import annotations

from pathlib import Path

import orjson
import pandas as pd

from ere.core.errors import writing
from ere.schemas import ModalityMap, ModalitySpec
from ere.sim.models import SimModel

RESPONSE = "y"


def synthetic_frame(model: SimModel, seed: int) -> tuple[pd.DataFrame, ModalityMap]:
    """Таблица x1..xp + y и карта модальностей mod1..modM для одного зерна."""
    data = model.generate(seed)
    names = [f"x{j + 1}" for j in range(model.p)]
    frame = pd.DataFrame(data.X, columns=names)
    frame[RESPONSE] = data.y
    modality_map = ModalityMap(
        response=RESPONSE,
        modalities=[
            ModalitySpec(name=f"mod{m + 1}", columns=[names[j] for j in block])
            for m, block in enumerate(model.modalities.blocks)
        ],
    )
    return frame, modality_map


def write_synthetic(model: SimModel, seed: int, csv_path: Path | str, map_path: Path | str) -> ModalityMap:
    csv_path, map_path = Path(csv_path), Path(map_path)
    frame, modality_map = synthetic_frame(model, seed)
    with writing(csv_path):
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(csv_path, index=False, float_format="%.17g", lineterminator="\n")
    with writing(map_path):
        map_path.parent.mkdir(parents=True, exist_ok=True)
        map_path.write_bytes(orjson.dumps(modality_map.model_dump(mode="json"), option=orjson.OPT_INDENT_2))
    return modality_map
