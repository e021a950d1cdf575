"""
Métricas de precisão do padrão de feixe e agregação de relatórios.
"""
from .bpa import DENOMINATOR_MODES, bpa_denominator, bpa_rmse, nrmse
from .report import CalibrationReport, improvement_ratio, summarize, summarize_by_fraction

__all__ = [
    "DENOMINATOR_MODES",
    "bpa_denominator",
    "bpa_rmse",
    "nrmse",
    "CalibrationReport",
    "improvement_ratio",
    "summarize",
    "summarize_by_fraction",
]
