"""Текстовые таблицы для стандартного вывода."""

from __future__ import annotations

import math

from ere.schemas import AnalysisReport, ModalityReport, ScreenReport


def format_p_value(p_value: float, log_p_value: float) -> str:
    """p-значение; при исчезновении в double мантисса и порядок берутся из логарифма."""
    if p_value > 0:
        return f"{p_value:.3g}"
    exponent10 = log_p_value / math.log(10.0)
    order = math.floor(exponent10)
    return f"{10.0 ** (exponent10 - order):.3g}e{order:d}"


def _interval(lower: float, upper: float | None, digits: int = 3) -> str:
    right = "inf" if upper is None else f"{upper:.{digits}f}"
    return f"[{lower:.{digits}f}, {right}]"


def _separated(item: ModalityReport) -> bool:
    return item.full_fit.quasi_separation or item.reduced_fit.quasi_separation


def render_report_table(report: AnalysisReport) -> str:
    """Таблица: модальность, H^_m, доверительный интервал, p-значение, R^2 и s~_m."""
    level = f"{100 * (1 - report.alpha):g}%"
    header = ("Модальность", "H^_m", f"{level} ДИ", "p-значение", "R^2", f"{level} ДИ R^2", "s~_m")
    rows = [header]
    for item in report.modalities:
        rows.append(
            (
                item.modality + (" (отсеяна)" if item.screened_out else "") + (" *" if _separated(item) else ""),
                f"{item.h_hat:.3f}",
                _interval(item.ci_lower, item.ci_upper),
                format_p_value(item.p_value, item.log_p_value),
                f"{item.r2_hat:.3f}",
                _interval(item.r2_ci_lower, item.r2_ci_upper),
                str(item.s_tilde_m),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)) for row in rows]
    lines.insert(1, "  ".join("-" * width for width in widths))
    footer = f"семейство {report.family}, n={report.n}, p={report.p}, gamma_n={report.threshold:.4g}, s~={report.s_tilde}"
    if not report.one_sided:
        footer += "; двусторонний интервал требует близости beta_0 и beta* вне модальности"
    if any(_separated(item) for item in report.modalities):
        footer += "\n* квази-разделимость в полной или редуцированной подгонке"
    return "\n".join([*lines, footer])


def render_screen_table(report: ScreenReport, top: int = 20) -> str:
    """Первые top столбцов по |MMLE| и след BIC."""
    lines = [f"gamma_n = {report.threshold:.4g}, s~ = {report.s_tilde} из p = {report.p}"]
    for name, size in report.s_tilde_by_modality.items():
        lines.append(f"  {name}: {size}")
    lines.append("")
    lines.append(f"{'Столбец':<24}{'Модальность':<16}{'MMLE':>12}  отобран")
    for column in report.columns[:top]:
        mark = "да" if column.selected else ""
        lines.append(f"{column.name:<24}{column.modality or '-':<16}{column.mmle:>12.4g}  {mark}")
    if report.bic_trace:
        lines.append("")
        lines.append(f"{'gamma':>12}{'|M|':>8}{'BIC':>14}")
        for point in report.bic_trace:
            lines.append(f"{point.threshold:>12.4g}{point.size:>8d}{point.bic:>14.6g}")
    return "\n".join(lines)
