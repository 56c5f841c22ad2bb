# ========================================
# core/__init__.py
# ========================================
"""
Core functionality: конфігурація, винятки, гаусові примітиви та генератор траєкторій.

Public API для імпорту з інших модулів. Фасад ExperimentRunner імпортується
напряму з core.runner, бо залежить від models/.
"""
from core.config import config, AppConfig, CommodityPreset
from core.errors import DomainError, ConfigurationError, ConsistencyError

__all__ = [
    "config",
    "AppConfig",
    "CommodityPreset",
    "DomainError",
    "ConfigurationError",
    "ConsistencyError"
]
