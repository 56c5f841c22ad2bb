"""
Двофакторна модель форвардних цін електроенергії та вугілля.

df(t,T) = f(t,T)·(σ_s e^{−α_s(T−t)} dB^s_t + σ_l dB^l_t) для кожного товару.
Короткострокові драйвери незалежні між собою та від довгострокових;
структура залежності (кілька бар'єрів, локальна або стала кореляція)
застосовується лише до пари довгострокових драйверів B^{E,l}, B^{C,l}.

Продукти: спот S_t = f(t,t) та nMAH, ціна яких: середнє f(t,u)
по денних погашеннях вікна поставки [t + (n−1)·30д, t + n·30д].

Дискретизація: короткостроковий інтеграл з точною дисперсією на кроці,
тому E[f(t,T)] = f(0,T) виконується точно і в дискретному часі.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import signal, special

from core.config import config
from core.errors import DomainError
from core.path_engine import PathSet, TimeGrid, make_increment_block, make_increments, map_path_chunks
from models import local_corr, multibarrier
from models.local_corr import LocalCorrFn
from models.multibarrier import BarrierParams
from utils.estimators import EmpiricalCurve, MCEstimate, empirical_survival, mc_estimate

logger = logging.getLogger(__name__)

ELECTRICITY = "electricity"
COAL = "coal"
COMMODITIES = (ELECTRICITY, COAL)

# Порядок драйверів у PathSet
DRIVER_LABELS = ("E_s", "E_l", "C_s", "C_l")


# ============ МАРГІНАЛЬНІ ПАРАМЕТРИ ============

@dataclass(frozen=True)
class TwoFactorParams:
    """
    Параметри двофакторної моделі (одиниці: рік).

    Attributes:
        sigma_s: Волатильність короткострокового фактора
        alpha_s: Швидкість повернення до середнього
        sigma_l: Волатильність довгострокового фактора
    """
    sigma_s: float
    alpha_s: float
    sigma_l: float

    def __post_init__(self):
        for name in ("sigma_s", "alpha_s", "sigma_l"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} має бути скінченним: {getattr(self, name)}")
        if self.sigma_s < 0 or self.sigma_l < 0:
            raise DomainError(f"волатильності мають бути невід'ємними: {self.sigma_s}, {self.sigma_l}")
        if self.alpha_s <= 0:
            raise DomainError(f"alpha_s має бути додатним: {self.alpha_s}")

    @classmethod
    def from_preset(cls, name: str) -> "TwoFactorParams":
        """Параметри з таблиці AppConfig.TWO_FACTOR_PARAMETERS."""
        preset = config.get_commodity(name)
        return cls(sigma_s=preset.sigma_s, alpha_s=preset.alpha_s, sigma_l=preset.sigma_l)

    def short_weight(self, tau: np.ndarray) -> np.ndarray:
        """σ_s·e^{−α_s τ}, волатильність короткострокового фактора за час до погашення τ."""
        return self.sigma_s * np.exp(-self.alpha_s * np.asarray(tau, dtype=float))

    def total_volatility(self, tau: float) -> float:
        """Миттєва волатильність √(σ_s²e^{−2α_s τ} + σ_l²); спадає за τ (ефект Самуельсона)."""
        if tau < 0:
            raise DomainError(f"час до погашення має бути невід'ємним: {tau}")
        return math.sqrt(self.sigma_s ** 2 * math.exp(-2.0 * self.alpha_s * tau) + self.sigma_l ** 2)

    def short_variance(self, t: float, maturity: np.ndarray) -> np.ndarray:
        """∫_0^t σ_s² e^{−2α_s(T−u)} du."""
        maturity = np.asarray(maturity, dtype=float)
        two_alpha = 2.0 * self.alpha_s
        return (self.sigma_s ** 2 * np.exp(-two_alpha * (maturity - t))
                * (-np.expm1(-two_alpha * t)) / two_alpha)

    def integrated_log_variance(self, t: float, maturity: float) -> float:
        """Var log f(t,T)/f(0,T) = ∫_0^t σ_s²e^{−2α_s(T−u)} du + σ_l² t."""
        if t < 0 or maturity < t:
            raise DomainError(f"потрібно 0 ≤ t ≤ T: t={t}, T={maturity}")
        return float(self.short_variance(t, maturity)) + self.sigma_l ** 2 * t


# ============ ПОЧАТКОВІ КРИВІ ============

class ForwardCurve(Protocol):
    """Початкова форвардна крива T → f(0, T) > 0."""

    def __call__(self, maturity: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class FlatCurve:
    """Стала крива f(0, T) = level."""
    level: float

    def __post_init__(self):
        if not (math.isfinite(self.level) and self.level > 0):
            raise DomainError(f"рівень кривої має бути додатним: {self.level}")

    def __call__(self, maturity: np.ndarray) -> np.ndarray:
        return np.full(np.shape(maturity), self.level, dtype=float)


@dataclass(frozen=True)
class InterpolatedCurve:
    """Кусково-лінійна крива за вузлами, плоска за межами вузлів."""
    maturities: Tuple[float, ...]
    prices: Tuple[float, ...]

    def __post_init__(self):
        if len(self.maturities) != len(self.prices) or not self.maturities:
            raise DomainError("вузли кривої: потрібні непорожні списки однакової довжини")
        if any(b <= a for a, b in zip(self.maturities, self.maturities[1:])):
            raise DomainError("погашення вузлів мають строго зростати")
        if any(not (math.isfinite(p) and p > 0) for p in self.prices):
            raise DomainError(f"ціни кривої мають бути додатними: {self.prices}")

    def __call__(self, maturity: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(maturity, dtype=float), self.maturities, self.prices)


# ============ СТРУКТУРИ ЗАЛЕЖНОСТІ ============

class BarrierClock(Enum):
    """
    Одиниця часу, в якій задано бар'єри структури залежності.

    Значення: кількість кроків годинника на рік; рівень у цих одиницях
    переводиться в одиниці річного броунівського руху множенням на 1/√value.
    """
    YEAR = 1
    DAY = 365
    HOUR = 8760

    @property
    def to_year_factor(self) -> float:
        return 1.0 / math.sqrt(self.value)


class DependenceModel(Protocol):
    """Протокол зв'язування довгострокових драйверів."""

    name: str

    def couple(self, dx: np.ndarray, dby: np.ndarray, grid: TimeGrid) -> np.ndarray:
        """Прирости B^{C,l} (n_paths, n_steps) з приростів B^{E,l} та незалежного B^Y."""
        ...

    def describe(self) -> dict:
        ...


@dataclass(frozen=True)
class ConstantCorrelation:
    """Бенчмарк: стала кореляція довгострокових драйверів."""
    rho: float
    name: str = field(default="constant", init=False)

    def __post_init__(self):
        if not (math.isfinite(self.rho) and -1.0 <= self.rho <= 1.0):
            raise DomainError(f"rho поза межами [-1, 1]: {self.rho}")

    def couple(self, dx: np.ndarray, dby: np.ndarray, grid: TimeGrid) -> np.ndarray:
        return self.rho * dx + math.sqrt((1.0 - self.rho) * (1.0 + self.rho)) * dby

    def describe(self) -> dict:
        return {"kind": self.name, "rho": self.rho}


@dataclass(frozen=True)
class MultiBarrierDependence:
    """Кілька бар'єрів між довгостроковими драйверами; бар'єри в одиницях clock."""
    params: BarrierParams
    clock: BarrierClock = BarrierClock.YEAR
    name: str = field(default="multibarrier", init=False)

    def couple(self, dx: np.ndarray, dby: np.ndarray, grid: TimeGrid) -> np.ndarray:
        params = self.params.scaled(self.clock.to_year_factor)
        return multibarrier.coupled_increments(params, grid, dx, dby)

    def describe(self) -> dict:
        return {
            "kind": self.name, "nu": self.params.nu, "eta": self.params.eta,
            "rho": self.params.rho, "max_reflections": self.params.max_reflections,
            "clock": self.clock.name,
        }


@dataclass(frozen=True)
class LocalDependence:
    """Локальна кореляція між довгостроковими драйверами; бар'єри в одиницях clock."""
    fn: LocalCorrFn
    clock: BarrierClock = BarrierClock.YEAR
    name: str = field(default="local", init=False)

    def couple(self, dx: np.ndarray, dby: np.ndarray, grid: TimeGrid) -> np.ndarray:
        return local_corr.coupled_increments(self.fn.scaled(self.clock.to_year_factor), dx, dby)

    def describe(self) -> dict:
        return {
            "kind": self.name, "rho_min": self.fn.rho_min, "rho_max": self.fn.rho_max,
            "nu": self.fn.nu, "eta": self.fn.eta, "shape": self.fn.shape.name,
            "clock": self.clock.name,
        }


# ============ РИНОК ТА ПРОДУКТИ ============

@dataclass(frozen=True)
class MarketSetup:
    """
    Повний опис ринку: маргінальні параметри, початкові криві, heat rate,
    структура залежності та страйк спред-опціону.
    """
    elec: TwoFactorParams
    coal: TwoFactorParams
    f0_elec: ForwardCurve
    f0_coal: ForwardCurve
    heat_rate: float
    dependence: DependenceModel
    strike: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.heat_rate) and self.heat_rate > 0):
            raise DomainError(f"heat_rate має бути додатним: {self.heat_rate}")
        if not math.isfinite(self.strike):
            raise DomainError(f"strike має бути скінченним: {self.strike}")

    def params_for(self, commodity: str) -> TwoFactorParams:
        return {ELECTRICITY: self.elec, COAL: self.coal}[_check_commodity(commodity)]

    def curve_for(self, commodity: str) -> ForwardCurve:
        return {ELECTRICITY: self.f0_elec, COAL: self.f0_coal}[_check_commodity(commodity)]


def _check_commodity(commodity: str) -> str:
    if commodity not in COMMODITIES:
        raise DomainError(f"невідомий товар '{commodity}', доступні: {', '.join(COMMODITIES)}")
    return commodity


class ProductKind(Enum):
    SPOT = "spot"
    MONTH_AHEAD = "month_ahead"


_PRODUCT_PATTERN = re.compile(r"^(\d+)MAH$", re.IGNORECASE)


@dataclass(frozen=True)
class Product:
    """
    Продукт: спот або nMAH.

    Attributes:
        kind: SPOT або MONTH_AHEAD
        months: n ≥ 1 для MONTH_AHEAD
        resolution: Кількість денних погашень у вікні поставки
        delivery_start: Фіксований абсолютний початок поставки (роки); None: від дати оцінки
    """
    kind: ProductKind
    months: int = 0
    resolution: int = config.DELIVERY_RESOLUTION
    delivery_start: Optional[float] = None

    def __post_init__(self):
        if self.kind is ProductKind.MONTH_AHEAD and self.months < 1:
            raise DomainError(f"для nMAH потрібно n ≥ 1: {self.months}")
        if self.resolution < 1:
            raise DomainError(f"resolution має бути ≥ 1: {self.resolution}")

    @classmethod
    def parse(cls, label: str, resolution: int = config.DELIVERY_RESOLUTION) -> "Product":
        """'Spot' або 'nMAH' → Product."""
        if label.strip().lower() == "spot":
            return cls(ProductKind.SPOT)
        match = _PRODUCT_PATTERN.match(label.strip())
        if not match:
            raise DomainError(f"невідомий продукт '{label}', очікується 'Spot' або 'nMAH'")
        return cls(ProductKind.MONTH_AHEAD, months=int(match.group(1)), resolution=resolution)

    @property
    def label(self) -> str:
        return "Spot" if self.kind is ProductKind.SPOT else f"{self.months}MAH"

    def maturities(self, t: float) -> np.ndarray:
        """
        Погашення, по яких усереднюється ціна продукту в момент t.

        Raises:
            DomainError: Поставка фіксованого продукту вже почалась у момент t
        """
        if self.kind is ProductKind.SPOT:
            return np.array([t])
        period = config.days_to_years(config.DELIVERY_DAYS)
        if self.delivery_start is None:
            start = t + (self.months - 1) * period
        else:
            start = self.delivery_start
            if start < t:
                raise DomainError(f"поставка {self.label} почалась у {start} < t={t}")
        return start + (np.arange(self.resolution) + 0.5) * period / self.resolution


# ============ СИМУЛЯЦІЯ ФАКТОРІВ ============

@dataclass
class FactorSums:
    """
    Достатні статистики траєкторій у момент t для кожного товару.

    short: Σ_k e^{−α_s(t−t_{k+1})}·κ·ΔB^s_k; long: B^l_t.
    Тоді f(t,T) = f(0,T)·exp(σ_s e^{−α_s(T−t)}·short − ½v_s(t,T) + σ_l·long − ½σ_l² t).
    """
    t: float
    short: Dict[str, np.ndarray]
    long: Dict[str, np.ndarray]

    @property
    def n_paths(self) -> int:
        return self.long[ELECTRICITY].size


def make_market_drivers(grid: TimeGrid, seed: int, path_index: int) -> PathSet:
    """Чотири незалежні драйвери однієї траєкторії з іменами DRIVER_LABELS."""
    return make_increments(grid, len(DRIVER_LABELS), seed, path_index, labels=DRIVER_LABELS)


def _evaluation_grid(grid: TimeGrid, t: float) -> TimeGrid:
    """Сітка, що закінчується в момент оцінки t."""
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"момент оцінки має бути додатним: {t}")
    if abs(t - grid.t_end) <= 1e-12 * grid.t_end:
        return grid
    if t > grid.t_end:
        raise DomainError(f"момент оцінки t={t} за межами сітки [0, {grid.t_end}]")
    return grid.truncated(t)


def _kappa(params: TwoFactorParams, dt: float) -> float:
    """κ = √((1 − e^{−2α_s dt})/(2α_s dt)): точна дисперсія короткострокового інтеграла на кроці."""
    two_alpha_dt = 2.0 * params.alpha_s * dt
    return math.sqrt(-math.expm1(-two_alpha_dt) / two_alpha_dt)


def _short_weights(params: TwoFactorParams, grid: TimeGrid) -> np.ndarray:
    """e^{−α_s(t−t_{k+1})}·κ для k = 0..N−1."""
    lag = grid.t_end - grid.times[1:]
    return np.exp(-params.alpha_s * lag) * _kappa(params, grid.dt)


def _factor_block(setup: MarketSetup, grid: TimeGrid, increments: np.ndarray) -> Tuple[np.ndarray, ...]:
    """(short_E, long_E, short_C, long_C) для блоку приростів (4, n_paths, n_steps)."""
    d_es, d_el, d_cs, d_cl_free = increments
    d_cl = setup.dependence.couple(d_el, d_cl_free, grid)
    short_e = d_es @ _short_weights(setup.elec, grid)
    short_c = d_cs @ _short_weights(setup.coal, grid)
    return short_e, d_el.sum(axis=1), short_c, d_cl.sum(axis=1)


def simulate_factors(
    setup: MarketSetup,
    t: float,
    n_paths: int,
    grid: TimeGrid,
    seed: int,
    threads: int = 1,
    chunk_size: Optional[int] = None
) -> FactorSums:
    """
    Симулює n_paths траєкторій чотирьох драйверів до моменту t.

    Траєкторія path_index використовує ті самі потоки, що й
    make_increments(grid, 4, seed, path_index), тому результат не залежить
    від threads і chunk_size.
    """
    eval_grid = _evaluation_grid(grid, t)

    def worker(indices: np.ndarray) -> Tuple[np.ndarray, ...]:
        increments = make_increment_block(eval_grid, len(DRIVER_LABELS), seed, indices)
        return _factor_block(setup, eval_grid, increments)

    logger.info(
        f"Simulating two-factor market: dependence={setup.dependence.name}, "
        f"t={eval_grid.t_end:.6f}, steps={eval_grid.n_steps}, paths={n_paths}"
    )
    short_e, long_e, short_c, long_c = map_path_chunks(
        n_paths, worker, chunk_size=chunk_size or config.COMMODITY_CHUNK_SIZE, threads=threads
    )
    return FactorSums(
        t=eval_grid.t_end,
        short={ELECTRICITY: short_e, COAL: short_c},
        long={ELECTRICITY: long_e, COAL: long_c},
    )


def prices_from_factors(
    setup: MarketSetup,
    commodity: str,
    product: Product,
    sums: FactorSums
) -> np.ndarray:
    """Ціни продукту для кожної траєкторії в момент sums.t."""
    params = setup.params_for(commodity)
    t = sums.t
    maturities = product.maturities(t)
    f0 = setup.curve_for(commodity)(maturities)

    short_scale = params.short_weight(maturities - t)
    drift = -0.5 * params.short_variance(t, maturities) - 0.5 * params.sigma_l ** 2 * t
    log_ratio = (
        np.outer(sums.short[commodity], short_scale)
        + params.sigma_l * sums.long[commodity][:, None]
        + drift
    )
    return (f0 * np.exp(log_ratio)).mean(axis=1)


# ============ ОПЕРАЦІЇ ============

def _path_drivers(
    setup: MarketSetup,
    commodity: str,
    grid: TimeGrid,
    drivers: PathSet
) -> Tuple[np.ndarray, np.ndarray]:
    """Прирости (короткострокового, довгострокового) драйвера товару на n_steps кроках."""
    if drivers.increments.shape[1] < grid.n_steps:
        raise DomainError("драйверів менше, ніж кроків сітки")
    n = grid.n_steps
    d_el = drivers.driver("E_l")[:n]
    if commodity == ELECTRICITY:
        return drivers.driver("E_s")[:n], d_el
    d_long = setup.dependence.couple(d_el[None, :], drivers.driver("C_l")[None, :n], grid)[0]
    return drivers.driver("C_s")[:n], d_long


def forward_path(
    setup: MarketSetup,
    commodity: str,
    maturity: float,
    grid: TimeGrid,
    drivers: PathSet
) -> np.ndarray:
    """
    Траєкторія f(t_k, T), k = 0..N, для фіксованого погашення T.

    Args:
        setup: Опис ринку
        commodity: 'electricity' або 'coal'
        maturity: Погашення T ≥ grid.t_end
        grid: Часова сітка
        drivers: PathSet з драйверами DRIVER_LABELS

    Returns:
        Масив довжини n_steps + 1, f(0, T) на початку

    Raises:
        DomainError: T < t_end або невідомий товар
    """
    params = setup.params_for(commodity)
    if maturity < grid.t_end:
        raise DomainError(f"погашення T={maturity} раніше кінця сітки {grid.t_end}")
    d_short, d_long = _path_drivers(setup, commodity, grid, drivers)

    n = grid.n_steps
    times = grid.times
    weights = params.short_weight(maturity - times[1:]) * _kappa(params, grid.dt)

    log_ratio = np.zeros(n + 1)
    np.cumsum(weights * d_short + params.sigma_l * d_long, out=log_ratio[1:])
    # ∫_0^{t_k} σ_s² e^{−2α_s(T−u)} du
    compensator = (
        params.sigma_s ** 2
        * (np.exp(-2.0 * params.alpha_s * (maturity - times)) - math.exp(-2.0 * params.alpha_s * maturity))
        / (2.0 * params.alpha_s)
    )
    log_ratio -= 0.5 * compensator + 0.5 * params.sigma_l ** 2 * times
    f0 = float(setup.curve_for(commodity)(np.array([maturity]))[0])
    return f0 * np.exp(log_ratio)


def product_price(
    setup: MarketSetup,
    commodity: str,
    product: Product,
    t: float,
    drivers: PathSet
) -> float:
    """
    Ціна продукту в момент t на одній траєкторії драйверів.

    Спот: f(t,t); nMAH: середнє f(t,u) по погашеннях вікна поставки.
    """
    grid = _evaluation_grid(drivers.grid, t)
    increments = drivers.increments[:, None, :grid.n_steps]
    short_e, long_e, short_c, long_c = _factor_block(setup, grid, increments)
    sums = FactorSums(
        t=grid.t_end,
        short={ELECTRICITY: short_e, COAL: short_c},
        long={ELECTRICITY: long_e, COAL: long_c},
    )
    return float(prices_from_factors(setup, commodity, product, sums)[0])


def product_path(
    setup: MarketSetup,
    commodity: str,
    product: Product,
    grid: TimeGrid,
    drivers: PathSet
) -> np.ndarray:
    """
    Ціна продукту на всіх вузлах сітки, k = 0..N.

    Ковзний продукт на кожному вузлі t_k бере власне вікно поставки;
    значення в t_end збігається з product_price(..., grid.t_end, drivers).
    Короткостроковий фактор рахується рекурсією
    S_{k+1} = e^{−α_s dt}·S_k + κ·ΔB^s_k (лінійний фільтр).

    Raises:
        DomainError: Невідомий товар або поставка фіксованого продукту почалась до t_end
    """
    params = setup.params_for(commodity)
    d_short, d_long = _path_drivers(setup, commodity, grid, drivers)
    times = grid.times

    short = np.zeros(grid.n_steps + 1)
    short[1:] = signal.lfilter(
        [_kappa(params, grid.dt)], [1.0, -math.exp(-params.alpha_s * grid.dt)], d_short
    )
    long = np.zeros(grid.n_steps + 1)
    np.cumsum(d_long, out=long[1:])

    if product.delivery_start is None:
        maturities = times[:, None] + product.maturities(0.0)[None, :]
    else:
        window = product.maturities(grid.t_end)
        maturities = np.broadcast_to(window, (times.size, window.size))

    t = times[:, None]
    drift = -0.5 * params.short_variance(t, maturities) - 0.5 * params.sigma_l ** 2 * t
    log_ratio = (
        short[:, None] * params.short_weight(maturities - t)
        + params.sigma_l * long[:, None]
        + drift
    )
    f0 = setup.curve_for(commodity)(maturities)
    return (f0 * np.exp(log_ratio)).mean(axis=1)


@dataclass
class ProductPaths:
    """Траєкторії цін одного продукту, форма (n_paths, n_steps + 1)."""
    product: Product
    times: np.ndarray
    elec: np.ndarray
    coal: np.ndarray
    heat_rate: float

    @property
    def spread(self) -> np.ndarray:
        """f^E − H·f^C на кожному вузлі."""
        return self.elec - self.heat_rate * self.coal


def simulate_product_paths(
    setup: MarketSetup,
    products: Sequence[Product],
    n_paths: int,
    grid: TimeGrid,
    seed: int
) -> Dict[str, ProductPaths]:
    """
    Траєкторії цін кількох продуктів на спільних драйверах, ключ: product.label.

    Траєкторія i використовує make_market_drivers(grid, seed, i).
    """
    if n_paths < 1:
        raise DomainError(f"n_paths має бути ≥ 1: {n_paths}")
    drivers = [make_market_drivers(grid, seed, i) for i in range(n_paths)]
    logger.info(
        f"Simulating product trajectories: dependence={setup.dependence.name}, "
        f"steps={grid.n_steps}, paths={n_paths}, products={len(products)}"
    )
    return {
        product.label: ProductPaths(
            product=product,
            times=grid.times,
            elec=np.stack([product_path(setup, ELECTRICITY, product, grid, d) for d in drivers]),
            coal=np.stack([product_path(setup, COAL, product, grid, d) for d in drivers]),
            heat_rate=setup.heat_rate,
        )
        for product in products
    }


@dataclass
class ProductSample:
    """Ціни електроенергії та вугілля одного продукту по траєкторіях."""
    product: Product
    elec: np.ndarray
    coal: np.ndarray
    heat_rate: float

    @property
    def spread(self) -> np.ndarray:
        """f^E − H·f^C."""
        return self.elec - self.heat_rate * self.coal


def simulate_products(
    setup: MarketSetup,
    products: Sequence[Product],
    t: float,
    n_paths: int,
    grid: TimeGrid,
    seed: int,
    threads: int = 1
) -> Dict[str, ProductSample]:
    """Ціни кількох продуктів на спільних траєкторіях, ключ: product.label."""
    sums = simulate_factors(setup, t, n_paths, grid, seed, threads=threads)
    return {
        product.label: ProductSample(
            product=product,
            elec=prices_from_factors(setup, ELECTRICITY, product, sums),
            coal=prices_from_factors(setup, COAL, product, sums),
            heat_rate=setup.heat_rate,
        )
        for product in products
    }


def spread_survival(
    setup: MarketSetup,
    product: Product,
    t: float,
    xs: Sequence[float],
    n_paths: int,
    grid: TimeGrid,
    seed: int,
    level: float = config.DEFAULT_LEVEL,
    threads: int = 1
) -> EmpiricalCurve:
    """Емпірична функція виживання f^E_product(t) − H·f^C_product(t)."""
    sample = simulate_products(setup, [product], t, n_paths, grid, seed, threads)[product.label]
    return empirical_survival(sample.spread, xs, level)


def spread_payoff(sample: ProductSample, strike: float = 0.0) -> np.ndarray:
    """(f^E − H·f^C − K)⁺."""
    return np.maximum(sample.spread - strike, 0.0)


def price_spread_option(
    setup: MarketSetup,
    product: Product,
    t: float,
    n_paths: int,
    grid: TimeGrid,
    seed: int,
    level: float = config.DEFAULT_LEVEL,
    threads: int = 1
) -> MCEstimate:
    """
    Monte Carlo оцінка E[(f^E − H·f^C − K)⁺] без дисконтування.

    Returns:
        MCEstimate з симетричним інтервалом рівня level
    """
    sample = simulate_products(setup, [product], t, n_paths, grid, seed, threads)[product.label]
    estimate = mc_estimate(spread_payoff(sample, setup.strike), level, seed=seed)
    logger.info(
        f"Spread option {product.label} ({setup.dependence.name}): "
        f"{estimate.mean:.4f} ± {estimate.stderr:.4f}"
    )
    return estimate


def margrabe_price(setup: MarketSetup, product: Product, t: float) -> float:
    """
    Ціна обмінного опціону E[(f^E(t,T) − H·f^C(t,T))⁺] у закритій формі.

    Лише для сталої кореляції, нульового страйку та продукту з одним погашенням.

    Raises:
        DomainError: Інша структура залежності, K ≠ 0 або кілька погашень
    """
    if not isinstance(setup.dependence, ConstantCorrelation):
        raise DomainError("формула Маргрейба потребує сталої кореляції")
    if setup.strike != 0.0:
        raise DomainError(f"формула Маргрейба потребує нульового страйку: {setup.strike}")
    maturities = product.maturities(t)
    if maturities.size != 1:
        raise DomainError(f"формула Маргрейба потребує одного погашення, {product.label} має {maturities.size}")
    maturity = float(maturities[0])

    x0 = float(setup.f0_elec(maturities)[0])
    y0 = setup.heat_rate * float(setup.f0_coal(maturities)[0])
    covariance = setup.dependence.rho * setup.elec.sigma_l * setup.coal.sigma_l * t
    variance = (
        setup.elec.integrated_log_variance(t, maturity)
        + setup.coal.integrated_log_variance(t, maturity)
        - 2.0 * covariance
    )
    if variance <= 0.0:
        return max(x0 - y0, 0.0)
    sigma = math.sqrt(variance)
    d1 = (math.log(x0 / y0) + 0.5 * variance) / sigma
    return float(x0 * special.ndtr(d1) - y0 * special.ndtr(d1 - sigma))


def suggest_barrier_shift(
    setup: MarketSetup,
    eta_base: float,
    sigma_ref: float,
    maturity: float = 0.0,
    clock: BarrierClock = BarrierClock.YEAR
) -> float:
    """
    Зсунутий верхній бар'єр η′ = η + (1/σ)·log(H·f^C(0,T) / f^E(0,T)).

    Args:
        setup: Опис ринку (початкові криві та heat rate)
        eta_base: Базовий бар'єр η в одиницях clock
        sigma_ref: Референтна волатильність довгострокових факторів за √рік
        maturity: Погашення T, в якому беруться початкові ціни
        clock: Одиниці бар'єрів; σ переводиться в σ/√(кроків на рік)

    Raises:
        DomainError: sigma_ref ≤ 0 або неможливий аргумент логарифма
    """
    if not (math.isfinite(sigma_ref) and sigma_ref > 0):
        raise DomainError(f"sigma_ref має бути додатним: {sigma_ref}")
    if not math.isfinite(eta_base):
        raise DomainError(f"eta_base має бути скінченним: {eta_base}")
    point = np.array([maturity])
    elec = float(setup.f0_elec(point)[0])
    coal = setup.heat_rate * float(setup.f0_coal(point)[0])
    if elec <= 0 or coal <= 0:
        raise DomainError(f"початкові ціни мають бути додатними: {elec}, {coal}")
    sigma_clock = sigma_ref * clock.to_year_factor
    return eta_base + math.log(coal / elec) / sigma_clock
