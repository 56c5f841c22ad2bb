"""
Централізована конфігурація тулкіта.

Архітектурний принцип: Single Source of Truth для числових констант,
лімітів безпеки, календарних домовленостей і параметрів двофакторної моделі.
Параметри конкретного експерименту живуть у core/experiment.py.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from core.errors import ConfigurationError


@dataclass
class CommodityPreset:
    """Параметри двофакторної моделі для одного товару."""
    name: str
    description: str
    sigma_s: float
    alpha_s: float
    sigma_l: float


@dataclass
class AppConfig:
    """Глобальна конфігурація тулкіта."""

    # Відтворюваність та Monte Carlo
    DEFAULT_SEED: int = 20160322
    DEFAULT_LEVEL: float = 0.95
    DEFAULT_N_PATHS: int = 10_000
    DEFAULT_DT: float = 1e-3
    DEFAULT_THREADS: int = 1
    CHUNK_SIZE: int = 1024
    COMMODITY_CHUNK_SIZE: int = 128

    # Обмеження
    MAX_N_PATHS: int = 10_000_000
    MAX_SWITCHES_PER_PATH: int = 1_000_000
    MAX_SERIES_TERMS: int = 1_000_000
    MAX_CONFIG_SIZE_KB: int = 512
    SERIES_TOLERANCE: float = 1e-10
    PROBABILITY_SLACK: float = 1e-10

    # Календар: рік = 365 днів, місяць поставки = 30 днів
    DAYS_PER_YEAR: int = 365
    HOURS_PER_DAY: int = 24
    DELIVERY_DAYS: int = 30
    DELIVERY_RESOLUTION: int = 30

    # Кореляція бенчмарку (довгострокові фактори)
    BENCHMARK_CORRELATION: float = 0.275

    # Параметри двофакторної моделі
    TWO_FACTOR_PARAMETERS: Dict[str, CommodityPreset] = field(default_factory=lambda: {
        "electricity": CommodityPreset(
            "electricity", "Електроенергія, base load",
            sigma_s=0.972925, alpha_s=17.0363, sigma_l=0.102555
        ),
        "coal": CommodityPreset(
            "coal", "Вугілля, ARA",
            sigma_s=0.112134, alpha_s=2.07832, sigma_l=0.092602
        ),
    })

    # Фіксовані схеми CSV
    SURVIVAL_COLUMNS: Tuple[str, ...] = ("x", "analytic", "empirical", "band_low", "band_high")
    PRICE_COLUMNS: Tuple[str, ...] = (
        "product", "model", "mean", "stderr", "ci_low", "ci_high",
        "reference_low", "reference_high", "overlap"
    )
    COMPONENT_COLUMNS: Tuple[str, ...] = ("t", "x", "y", "spread")

    def hour_in_years(self) -> float:
        """Одна година в роках (крок сітки для товарних експериментів)."""
        return 1.0 / (self.DAYS_PER_YEAR * self.HOURS_PER_DAY)

    def days_to_years(self, days: float) -> float:
        """Перетворює кількість днів у роки."""
        return days / self.DAYS_PER_YEAR

    def get_commodity(self, name: str) -> CommodityPreset:
        """Повертає параметри товару або ConfigurationError."""
        try:
            return self.TWO_FACTOR_PARAMETERS[name]
        except KeyError:
            raise ConfigurationError(
                f"невідомий товар '{name}', доступні: "
                f"{', '.join(self.get_commodity_names())}"
            ) from None

    def get_commodity_names(self) -> List[str]:
        """Повертає список товарів з таблиці параметрів."""
        return sorted(self.TWO_FACTOR_PARAMETERS)


# Глобальний екземпляр конфігурації
config = AppConfig()
