"""Analysis module - unit-circle symbols, regularity diagnostics and reports."""

from fracdelay.analysis.report import ReportGenerator
from fracdelay.analysis.symbol import CircleGrid, blunck_scan, omega_f

__all__ = ["ReportGenerator", "CircleGrid", "blunck_scan", "omega_f"]
