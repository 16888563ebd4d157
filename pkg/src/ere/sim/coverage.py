"""
Покрытие доверительных интервалов, чувствительность и специфичность по репликациям.

Репликация i использует seed = base_seed + i, поэтому таблица не зависит от расписания
потоков. Истинное H_m считается один раз на ячейку (модель, delta, модальность).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from scipy import linalg

from ere.core.entropy import GroundTruthEre, ere_linear_closed_form, fit_pseudo_true, mc_ere
from ere.core.errors import ConfigurationError, EreError, SingularCovarianceError, writing
from ere.core.glm import GlmFamily
from ere.core.inference import infer
from ere.core.screening import run_screening
from ere.enums import FamilyKind, GroundTruthMethod, Method
from ere.settings import settings
from ere.sim.methods import run_method
from ere.sim.models import SimModel
from ere.utils.parallel import thread_map

CSV_COLUMNS = [
    "model",
    "delta",
    "method",
    "modality",
    "coverage",
    "sensitivity",
    "specificity",
    "mean_h_hat",
    "true_h",
    "reps",
    "failures",
    "screened_out",
]


@dataclass(frozen=True)
class SimResult:
    """Строка итоговой таблицы для ячейки (модель, delta, метод, модальность)."""

    model: int
    delta: float
    method: str
    modality: str
    coverage: float
    sensitivity: float
    specificity: float
    mean_h_hat: float
    true_h: float
    reps: int
    failures: int = 0
    screened_out: int = 0


@dataclass(frozen=True)
class ReplicationRecord:
    method: Method
    modality: int
    covered: bool
    h_hat: float
    sensitivity: float
    specificity: float
    screened_out: bool


def ground_truth(
    model: SimModel,
    m: int,
    *,
    seed: int = settings.sim.BASE_SEED,
    mc_samples: int = settings.sim.MC_SAMPLES,
    truth_samples: int = settings.sim.TRUTH_SAMPLES,
) -> GroundTruthEre:
    """Замкнутая форма для gaussian, иначе Монте-Карло с beta_0 по независимой выборке."""
    modality = model.modalities.columns(m)
    if model.family.kind == FamilyKind.GAUSSIAN:
        h = ere_linear_closed_form(model.sampler.covariance(), model.beta_star, modality, model.noise_sd**2)
        return GroundTruthEre(h=h, method=GroundTruthMethod.CLOSED_FORM_LINEAR)
    support_0 = np.setdiff1d(model.true_support, modality)
    beta_0, _ = fit_pseudo_true(
        model.family, model.beta_star, support_0, model.sampler, n_samples=truth_samples, seed=seed
    )
    return mc_ere(model.family, model.beta_star, beta_0, model.sampler, mc_samples, seed + 1)


def oracle_noncentrality(
    model: SimModel,
    m: int,
    mc_samples: int = settings.sim.ORACLE_MC_SAMPLES,
    seed: int = settings.sim.BASE_SEED,
    *,
    support: np.ndarray | None = None,
    chunk: int = settings.entropy.MC_CHUNK,
) -> float:
    """Gamma_n = n beta*_m^T Omega_mm^-1 beta*_m, Omega = [E{w(x^T beta*) x_S x_S^T} / phi]^-1.

    Для gaussian информационная матрица равна Sigma_S / sigma^2 точно, для остальных
    оценивается по mc_samples выборкам x.
    """
    support = model.true_support if support is None else np.unique(np.asarray(support, dtype=int))
    modality = model.modalities.columns(m)
    position = np.flatnonzero(np.isin(support, modality))
    beta_m = model.beta_star[support[position]]
    if not np.any(beta_m):
        return 0.0

    sub = model.sampler.marginal(support)
    if model.family.kind == FamilyKind.GAUSSIAN:
        information = sub.covariance() / model.noise_sd**2
    else:
        rng = np.random.default_rng(seed)
        beta_s = model.beta_star[support]
        information = np.zeros((support.size, support.size))
        done = 0
        while done < mc_samples:
            rows = min(chunk, mc_samples - done)
            x = sub.sample(rng, rows)
            weight = model.family.information_weight(x @ beta_s)
            information += (x * weight[:, None]).T @ x
            done += rows
        information /= mc_samples

    try:
        omega = linalg.cho_solve(linalg.cho_factor(information), np.eye(support.size))
        omega_mm = omega[np.ix_(position, position)]
        return float(model.n * beta_m @ linalg.solve(omega_mm, beta_m, assume_a="pos"))
    except linalg.LinAlgError:
        raise SingularCovarianceError("Информационная матрица на носителе вырождена") from None


def run_replication(
    model: SimModel,
    seed: int,
    methods: list[Method],
    truths: dict[int, float],
    *,
    alpha: float = settings.inference.ALPHA,
    fit_family: GlmFamily | None = None,
) -> list[ReplicationRecord]:
    """Одна репликация: данные, общий этап скрининга, все методы и модальности; сбойные ячейки пропускаются."""
    family = fit_family or model.family
    data = model.generate(seed)
    screen_result = None
    screen_failed = False
    if any(method != Method.ORACLE for method in methods):
        try:
            screen_result = run_screening(data, family)
        except EreError as e:
            logger.warning(f"Репликация seed={seed}: скрининг не удался: {e}")
            screen_failed = True

    records: list[ReplicationRecord] = []
    for method in methods:
        for m in range(model.modalities.M):
            if method != Method.ORACLE and screen_failed:
                continue
            try:
                outcome = run_method(
                    data, model.modalities, m, method, family,
                    true_support=model.true_support, screen_result=screen_result,
                )
                inference = infer(outcome.estimate, alpha)
            except EreError as e:
                logger.warning(f"Репликация seed={seed}, {method.value}, модальность {m + 1}: {e}")
                continue
            records.append(
                ReplicationRecord(
                    method=method,
                    modality=m,
                    covered=bool(inference.ci_lower <= truths[m] <= inference.ci_upper),
                    h_hat=outcome.estimate.h_hat,
                    sensitivity=outcome.sensitivity,
                    specificity=outcome.specificity,
                    screened_out=outcome.estimate.screened_out,
                )
            )
    return records


def run_coverage(
    model: SimModel,
    deltas: list[float],
    methods: list[Method | str],
    reps: int = settings.sim.REPS,
    alpha: float = settings.inference.ALPHA,
    base_seed: int = settings.sim.BASE_SEED,
    *,
    fit_family: GlmFamily | None = None,
    threads: int = 1,
    mc_samples: int = settings.sim.MC_SAMPLES,
    truth_samples: int = settings.sim.TRUTH_SAMPLES,
) -> list[SimResult]:
    """Таблица SimResult по сетке delta x методы x модальности."""
    if reps < 1:
        raise ConfigurationError(f"Число репликаций должно быть >= 1, получено {reps}")
    if not deltas:
        raise ConfigurationError("Сетка delta пуста")
    if any(not np.isfinite(delta) or delta < 0 for delta in deltas):
        raise ConfigurationError(f"Значения delta должны быть конечными и неотрицательными: {deltas}")
    methods = [Method(method) for method in methods]
    if not methods:
        raise ConfigurationError("Список методов пуст")

    truth_cache: dict[tuple[int, int, int, float, int], float] = {}
    rows: list[SimResult] = []
    for delta in deltas:
        cell_model = model.with_delta(float(delta))
        truths = {}
        for m in range(cell_model.modalities.M):
            key = (cell_model.model_id, cell_model.n, cell_model.p, float(delta), m)
            if key not in truth_cache:
                truth = ground_truth(
                    cell_model, m, seed=base_seed - 1 - m, mc_samples=mc_samples, truth_samples=truth_samples
                )
                truth_cache[key] = truth.h
                logger.info(f"Модель {cell_model.model_id}, delta={delta}: H_{m + 1} = {truth.h:.5g} ({truth.method.value})")
            truths[m] = truth_cache[key]

        def replicate(i: int) -> list[ReplicationRecord]:
            return run_replication(
                cell_model, base_seed + i, methods, truths, alpha=alpha, fit_family=fit_family
            )

        results = thread_map(replicate, range(reps), threads=threads)
        rows.extend(_aggregate(cell_model, float(delta), methods, truths, results))
        logger.info(f"Модель {cell_model.model_id}, delta={delta}: {reps} репликаций готово")
    return rows


def _aggregate(
    model: SimModel,
    delta: float,
    methods: list[Method],
    truths: dict[int, float],
    results: list[list[ReplicationRecord]],
) -> list[SimResult]:
    records = [record for batch in results for record in batch]
    rows = []
    for method in methods:
        for m in range(model.modalities.M):
            cell = [r for r in records if r.method == method and r.modality == m]
            failures = len(results) - len(cell)
            if not cell:
                logger.warning(f"Ячейка {method.value}, модальность {m + 1}: нет успешных репликаций")
            rows.append(
                SimResult(
                    model=model.model_id,
                    delta=delta,
                    method=method.value,
                    modality=model.modalities.names[m],
                    coverage=_mean([r.covered for r in cell]),
                    sensitivity=_mean([r.sensitivity for r in cell]),
                    specificity=_mean([r.specificity for r in cell]),
                    mean_h_hat=_mean([r.h_hat for r in cell]),
                    true_h=truths[m],
                    reps=len(cell),
                    failures=failures,
                    screened_out=sum(r.screened_out for r in cell),
                )
            )
    return rows


def _mean(values: list) -> float:
    return float(np.mean(values)) if values else float("nan")


def to_frame(rows: list[SimResult]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in rows], columns=CSV_COLUMNS)


def write_csv(rows: list[SimResult], path: Path | str) -> Path:
    """CSV с фиксированным форматом чисел: одинаковые входы дают одинаковые байты."""
    path = Path(path)
    with writing(path):
        path.parent.mkdir(parents=True, exist_ok=True)
        to_frame(rows).to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
    return path
