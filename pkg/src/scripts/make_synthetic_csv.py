#!/usr/bin/env python3
"""
Скрипт для генерации синтетического CSV и карты модальностей по моделям 1-3.

Использование:
    poetry run python src/scripts/make_synthetic_csv.py --out data.csv --map modalities.json
    poetry run python src/scripts/make_synthetic_csv.py --model 2 --n 400 --p 90 --delta 1.5 --seed 7

Затем:
    poetry run ere infer --data data.csv --config modalities.json --modality mod1
"""

import argparse
import sys
from pathlib import Path

# Добавляем src в PYTHONPATH для импорта ere
_script_dir = Path(__file__).resolve().parent
_src_dir = _script_dir.parent
if str(_src_dir) not in sys.path:
    sys.path.insert(0, str(_src_dir))

from ere.sim.models import MODEL_PATTERNS, SimModel
from ere.sim.synthetic import write_synthetic


def main() -> None:
    parser = argparse.ArgumentParser(
        description="Синтетические данные с известной структурой модальностей",
    )
    parser.add_argument("--model", type=int, default=1, choices=sorted(MODEL_PATTERNS), help="Номер модели (по умолчанию 1)")
    parser.add_argument("--n", type=int, default=300, help="Число наблюдений")
    parser.add_argument("--p", type=int, default=60, help="Число ковариат")
    parser.add_argument("--delta", type=float, default=2.0, help="Масштаб сигнала")
    parser.add_argument("--seed", type=int, default=0, help="Зерно генератора")
    parser.add_argument("--out", type=Path, default=Path("synthetic.csv"), help="Путь для CSV")
    parser.add_argument("--map", type=Path, default=Path("modalities.json"), help="Путь для карты модальностей")
    args = parser.parse_args()

    model = SimModel.preset(args.model, args.delta, n=args.n, p=args.p)
    modality_map = write_synthetic(model, args.seed, args.out, args.map)

    print(f"CSV: {args.out} (n={model.n}, p={model.p}, семейство {model.family.kind.value})")
    print(f"Карта: {args.map} ({', '.join(spec.name for spec in modality_map.modalities)})")
    print(f"Истинный носитель: {len(model.true_support)} ковариат")


if __name__ == "__main__":
    main()
