"""
Статистична обробка симульованих траєкторій.

Емпіричні функції виживання з довірчими смугами, емпіричні копули,
Monte Carlo оцінки зі стандартною похибкою та статистика Колмогорова–Смирнова.

Усі функції чисті та не змінюють вхідних масивів.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from core.config import config
from core.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo оцінка з симетричним нормальним довірчим інтервалом."""
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    level: float
    n_paths: int
    seed: Optional[int] = None

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "level": self.level,
            "n_paths": self.n_paths,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class EmpiricalCurve:
    """
    Емпірична функція виживання на відсортованих абсцисах.

    tolerance задає допустиме зростання values між сусідніми точками
    (шум вибірки для кривих, отриманих не з однієї вибірки).
    """
    abscissae: np.ndarray
    values: np.ndarray
    band_low: np.ndarray
    band_high: np.ndarray
    level: float
    n_samples: int
    tolerance: float = 0.0

    def is_monotone(self) -> bool:
        """Чи не зростає крива з урахуванням tolerance."""
        return bool(np.all(np.diff(self.values) <= self.tolerance))


# ============ ДОПОМІЖНІ ============

def _check_level(level: float) -> float:
    if not (math.isfinite(level) and 0.0 < level < 1.0):
        raise DomainError(f"рівень довіри має лежати в (0, 1): {level}")
    return float(level)


def normal_quantile(level: float) -> float:
    """z = Φ⁻¹((1 + level) / 2) для двостороннього інтервалу."""
    return float(stats.norm.ppf((1.0 + _check_level(level)) / 2.0))


def _as_samples(samples: Sequence[float], what: str = "samples") -> np.ndarray:
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise DomainError(f"{what}: порожня вибірка")
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{what}: вибірка містить NaN або ±∞")
    return values


# ============ ВИЖИВАННЯ ============

def empirical_survival(
    samples: Sequence[float],
    xs: Sequence[float],
    level: float = config.DEFAULT_LEVEL
) -> EmpiricalCurve:
    """
    Частка вибірки ≥ x для кожного x з нормальною довірчою смугою.

    Args:
        samples: Непорожня вибірка
        xs: Точки оцінювання (сортуються за зростанням)
        level: Рівень довіри смуги

    Returns:
        EmpiricalCurve зі смугою p̂ ± z·√(p̂(1−p̂)/n), обрізаною до [0, 1]

    Raises:
        DomainError: Порожня вибірка або level ∉ (0, 1)
    """
    values = np.sort(_as_samples(samples))
    z = normal_quantile(level)
    n = values.size

    abscissae = np.sort(np.asarray(xs, dtype=float).ravel())
    # searchsorted(side="left") рахує елементи < x, решта ≥ x
    counts = n - np.searchsorted(values, abscissae, side="left")
    p_hat = counts / n
    half = z * np.sqrt(p_hat * (1.0 - p_hat) / n)

    return EmpiricalCurve(
        abscissae=abscissae,
        values=p_hat,
        band_low=np.clip(p_hat - half, 0.0, 1.0),
        band_high=np.clip(p_hat + half, 0.0, 1.0),
        level=level,
        n_samples=n,
    )


# ============ КОПУЛА ============

def empirical_copula(pairs: np.ndarray, grid_size: int) -> np.ndarray:
    """
    Емпірична копула на рівномірній сітці grid_size × grid_size.

    Елемент (i, j) (нумерація з 1): частка пар з rank₁ ≤ i·n/g та rank₂ ≤ j·n/g.
    Ранги порядкові, тому нічиї розбиваються за порядком появи.

    Args:
        pairs: Масив форми (n, 2)
        grid_size: g ≥ 2

    Returns:
        Матриця (g, g), рядок i−1 відповідає u = i/g, стовпчик j−1: v = j/g

    Raises:
        DomainError: Менше двох пар, некоректна форма або grid_size < 2
    """
    data = np.asarray(pairs, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError(f"очікувався масив форми (n, 2), отримано {data.shape}")
    n = data.shape[0]
    if n < 2:
        raise DomainError(f"для копули потрібно щонайменше 2 пари, отримано {n}")
    if grid_size < 2:
        raise DomainError(f"grid_size має бути ≥ 2: {grid_size}")
    if n < grid_size * grid_size / 10:
        logger.warning(f"Only {n} pairs for a {grid_size}x{grid_size} copula grid")

    ranks_u = stats.rankdata(data[:, 0], method="ordinal")
    ranks_v = stats.rankdata(data[:, 1], method="ordinal")
    # rank ≤ i·n/g ⇔ ceil(rank·g/n) ≤ i
    bins_u = np.ceil(ranks_u * grid_size / n).astype(int) - 1
    bins_v = np.ceil(ranks_v * grid_size / n).astype(int) - 1

    counts = np.zeros((grid_size, grid_size))
    np.add.at(counts, (bins_u, bins_v), 1.0)
    return counts.cumsum(axis=0).cumsum(axis=1) / n


# ============ MONTE CARLO ============

def mc_estimate(
    values: Sequence[float],
    level: float = config.DEFAULT_LEVEL,
    seed: Optional[int] = None
) -> MCEstimate:
    """
    Середнє, стандартна похибка та симетричний нормальний інтервал.

    Сума рахується через math.fsum (точне округлення), тому результат
    не залежить від порядку вхідних значень.

    Raises:
        DomainError: Менше двох значень або level ∉ (0, 1)
    """
    data = _as_samples(values, "values")
    n = data.size
    if n < 2:
        raise DomainError(f"для оцінки потрібно щонайменше 2 значення, отримано {n}")
    z = normal_quantile(level)

    if np.all(data == data[0]):
        mean = float(data[0])
        stderr = 0.0
    else:
        mean = math.fsum(data) / n
        variance = math.fsum((data - mean) ** 2) / (n - 1)
        stderr = math.sqrt(variance / n)

    return MCEstimate(
        mean=mean,
        stderr=stderr,
        ci_low=mean - z * stderr,
        ci_high=mean + z * stderr,
        level=level,
        n_paths=n,
        seed=seed,
    )


# ============ ТЕСТИ ЗГОДИ ============

def ks_statistic(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    """
    Відстань Колмогорова sup|F_n − F| між емпіричною CDF та cdf.

    cdf може бути скалярною функцією, векторизується автоматично.
    """
    data = _as_samples(samples)
    vectorized = np.vectorize(cdf, otypes=[float])
    return float(stats.kstest(data, vectorized).statistic)


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Асимптотичне критичне значення статистики Колмогорова для n спостережень."""
    if n < 1:
        raise DomainError(f"n має бути ≥ 1: {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha має лежати в (0, 1): {alpha}")
    return float(stats.kstwobign.ppf(1.0 - alpha) / math.sqrt(n))


def intervals_overlap(
    low_a: float, high_a: float,
    low_b: float, high_b: float
) -> bool:
    """Чи перетинаються замкнені інтервали [low_a, high_a] та [low_b, high_b]."""
    if low_a > high_a or low_b > high_b:
        raise DomainError(f"некоректний інтервал: [{low_a}, {high_a}] або [{low_b}, {high_b}]")
    return max(low_a, low_b) <= min(high_a, high_b)
