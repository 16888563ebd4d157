"""Enums для ere."""

from ere.enums.families import DispersionMode, FamilyKind
from ere.enums.methods import GridSizeRule, GroundTruthMethod, Method, PenaltyKind

__all__ = ["DispersionMode", "FamilyKind", "GridSizeRule", "GroundTruthMethod", "Method", "PenaltyKind"]
