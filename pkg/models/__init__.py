# ========================================
# models/__init__.py
# ========================================
"""
Моделі залежності броунівських рухів.

Extensibility Point: нова структура залежності реалізує протокол
DependenceModel (models.commodities) і стає доступною товарній моделі.
"""
from models.reflection_copula import SingleBarrierParams
from models.multibarrier import BarrierParams, INFINITE
from models.local_corr import LocalCorrFn, LinearShape, SmoothStepShape
from models.commodities import (
    MarketSetup,
    TwoFactorParams,
    Product,
    ConstantCorrelation,
    MultiBarrierDependence,
    LocalDependence,
    BarrierClock
)

__all__ = [
    "SingleBarrierParams",
    "BarrierParams",
    "INFINITE",
    "LocalCorrFn",
    "LinearShape",
    "SmoothStepShape",
    "MarketSetup",
    "TwoFactorParams",
    "Product",
    "ConstantCorrelation",
    "MultiBarrierDependence",
    "LocalDependence",
    "BarrierClock"
]
