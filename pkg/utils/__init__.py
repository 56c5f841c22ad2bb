# ========================================
# utils/__init__.py
# ========================================
"""
Utilities: статистичні оцінки та експорт артефактів.

Design Pattern: Stateless utility functions для повторного використання.
Читання конфігурацій: utils.file_handlers (залежить від core.experiment).
"""
from utils.estimators import (
    MCEstimate,
    EmpiricalCurve,
    empirical_survival,
    empirical_copula,
    mc_estimate,
    ks_statistic
)
from utils.file_exporters import ExportFormat, FileExporter, generate_filename

__all__ = [
    "MCEstimate",
    "EmpiricalCurve",
    "empirical_survival",
    "empirical_copula",
    "mc_estimate",
    "ks_statistic",
    "ExportFormat",
    "FileExporter",
    "generate_filename"
]
