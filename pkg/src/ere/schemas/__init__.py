from ere.schemas.config import AnalysisConfig, ModalityMap, ModalitySpec
from ere.schemas.report import (
    AnalysisReport,
    BicTracePoint,
    FitDiagnostics,
    ModalityReport,
    ScreenColumn,
    ScreenReport,
)

__all__ = [
    "AnalysisConfig",
    "AnalysisReport",
    "BicTracePoint",
    "FitDiagnostics",
    "ModalityMap",
    "ModalityReport",
    "ModalitySpec",
    "ScreenColumn",
    "ScreenReport",
]
