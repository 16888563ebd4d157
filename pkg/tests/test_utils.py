import math
import os
import time

import pytest

from ere.schemas import AnalysisReport, FitDiagnostics, ModalityReport
from ere.sim.models import SimModel
from ere.sim.synthetic import RESPONSE, synthetic_frame
from ere.utils.formatting import format_p_value, render_report_table
from ere.utils.parallel import resolve_threads, thread_map


def test_thread_map_keeps_order():
    def slow_square(x: int) -> int:
        time.sleep(0.001 * (5 - x % 5))
        return x * x

    assert thread_map(slow_square, range(20), threads=4) == [x * x for x in range(20)]
    assert thread_map(slow_square, [], threads=4) == []


def test_resolve_threads():
    assert resolve_threads(0) == (os.cpu_count() or 1)
    assert resolve_threads(None) == (os.cpu_count() or 1)
    assert resolve_threads(3) == 3
    assert resolve_threads(-2) == 1


@pytest.mark.parametrize(
    "p_value, log_p_value, expected",
    [
        (0.01857, math.log(0.01857), "0.0186"),
        (1.0, 0.0, "1"),
        (0.0, -750.0, "1.9e-326"),
    ],
)
def test_format_p_value(p_value, log_p_value, expected):
    assert format_p_value(p_value, log_p_value) == expected


def _report(one_sided: bool, separated: bool = False) -> AnalysisReport:
    diagnostics = FitDiagnostics(
        lam=0.1, converged=True, iterations=4, kkt_residual=1e-9, support_size=3, quasi_separation=False
    )
    reduced = diagnostics.model_copy(update={"quasi_separation": separated})
    item = ModalityReport(
        modality="mri",
        h_hat=0.25,
        raw_diff=0.25,
        ci_lower=0.1,
        ci_upper=None if one_sided else 0.4,
        p_value=0.001,
        log_p_value=math.log(0.001),
        r2_hat=1 - math.exp(-0.25),
        r2_ci_lower=1 - math.exp(-0.1),
        r2_ci_upper=1.0 if one_sided else 1 - math.exp(-0.4),
        s_tilde_m=2,
        screened_columns=["x1", "x2"],
        selected_columns=["x1", "x2", "x5"],
        screened_out=False,
        clamped=False,
        full_fit=diagnostics,
        reduced_fit=reduced,
    )
    return AnalysisReport(
        family="gaussian",
        canonical=True,
        n=100,
        p=10,
        alpha=0.05,
        one_sided=one_sided,
        standardized=True,
        intercept=True,
        penalty="scad",
        seed=0,
        threshold=0.3,
        s_tilde=4,
        screened_columns=["x1", "x2", "x5", "x7"],
        modalities=[item],
    )


def test_render_report_table():
    table = render_report_table(_report(one_sided=False))
    assert "mri" in table
    assert "[0.100, 0.400]" in table
    assert "95% ДИ" in table
    assert "[0.100, inf]" in render_report_table(_report(one_sided=True))


def test_render_report_table_marks_separated_fits():
    plain = render_report_table(_report(one_sided=False))
    assert "mri *" not in plain
    assert "квази-разделимость" not in plain
    table = render_report_table(_report(one_sided=False, separated=True))
    assert "mri *" in table
    assert "квази-разделимость" in table
    again = AnalysisReport.from_json(_report(one_sided=False, separated=True).to_json())
    assert again.modalities[0].reduced_fit.quasi_separation


def test_report_json_round_trip():
    report = _report(one_sided=True)
    again = AnalysisReport.from_json(report.to_json())
    assert again == report
    assert again.to_json() == report.to_json()


def test_synthetic_frame():
    model = SimModel.preset(1, 1.0, n=50, p=12)
    frame, modality_map = synthetic_frame(model, 3)
    assert frame.shape == (50, 13)
    assert modality_map.response == RESPONSE
    assert [spec.name for spec in modality_map.modalities] == ["mod1", "mod2", "mod3"]
    assert sum(len(spec.columns) for spec in modality_map.modalities) == 12
