"""
Набір готових експериментів для відтворення кривих, копул і таблиць цін.

Кожен пресет: іменований набір запусків (PresetRun) з однією задачею,
одна з TASKS. Задача trajectories додатково пише X, Y та X − Y
першої траєкторії; product_trajectories: ціни продуктів на кожному вузлі.
Для таблиць цін додаються референтні 95% інтервали.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.config import config
from core.errors import ConfigurationError
from core.experiment import ExperimentConfig, OutputConfig
from core.path_engine import TimeGrid
from models.commodities import (
    BarrierClock,
    ConstantCorrelation,
    DependenceModel,
    FlatCurve,
    MarketSetup,
    MultiBarrierDependence,
    TwoFactorParams,
)
from models.local_corr import LocalCorrFn
from models.multibarrier import INFINITE, BarrierParams
from models.reflection_copula import SingleBarrierParams

logger = logging.getLogger(__name__)

TASKS = (
    "copula", "survival", "trajectories", "product_trajectories", "spread_survival", "spread_options",
)

PRODUCT_LABELS = ("Spot", "1MAH", "3MAH", "6MAH")

Interval = Tuple[float, float]


@dataclass(frozen=True)
class PresetRun:
    """Один запуск пресету з власною міткою для імен файлів."""
    label: str
    experiment: ExperimentConfig


@dataclass(frozen=True)
class Preset:
    """
    Іменований експеримент.

    Attributes:
        name: Ім'я для --preset
        description: Короткий опис
        task: Одна з TASKS
        runs: Запуски
        references: мітка запуску → продукт → референтний інтервал
    """
    name: str
    description: str
    task: str
    runs: Tuple[PresetRun, ...]
    references: Dict[str, Dict[str, Interval]] = field(default_factory=dict)

    def reference(self, label: str, product: str) -> Optional[Interval]:
        return self.references.get(label, {}).get(product)


# ============ БУДІВЕЛЬНИКИ ============

def _label_n(n: Optional[int]) -> str:
    return "n_inf" if n is None else f"n_{n}"


def _xs(low: float, high: float, count: int) -> Tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(low, high, count))


def _market(dependence: DependenceModel, f0_coal: float) -> MarketSetup:
    return MarketSetup(
        elec=TwoFactorParams.from_preset("electricity"),
        coal=TwoFactorParams.from_preset("coal"),
        f0_elec=FlatCurve(100.0),
        f0_coal=FlatCurve(f0_coal),
        heat_rate=1.0,
        dependence=dependence,
    )


def _hourly_grid(days: int) -> TimeGrid:
    return TimeGrid.from_hours(config.days_to_years(days))


def _reflection_copula() -> Preset:
    params = SingleBarrierParams(h=2.0, rho=0.95, t=1.0)
    experiment = ExperimentConfig(
        model_kind="single_barrier", model=params, grid=TimeGrid(1.0, 1e-3),
        n_paths=100_000, outputs=OutputConfig(copula_grid=20),
    )
    return Preset(
        "reflection-copula",
        "Копула (B¹_t, B²_t) з одним бар'єром, h = 2, ρ = 0.95, t = 1",
        "copula", (PresetRun("h_2_rho_0.95", experiment),),
    )


def _single_barrier_survival() -> Preset:
    runs = []
    for t_end, dt in ((1.0, 1e-3), (20.0, 1e-2)):
        params = SingleBarrierParams(h=0.25, rho=0.9, t=t_end)
        span = 3.0 * np.sqrt(t_end)
        runs.append(PresetRun(f"t_{t_end:g}", ExperimentConfig(
            model_kind="single_barrier", model=params, grid=TimeGrid(t_end, dt),
            outputs=OutputConfig(xs=_xs(-span, span, 61), bridge_correction=True),
        )))
    return Preset(
        "single-barrier-survival",
        "Виживання B¹_t − B²_t з одним бар'єром, h = 0.25, ρ = 0.9, t = 1 та 20",
        "survival", tuple(runs),
    )


def _multibarrier_copula() -> Preset:
    runs = tuple(
        PresetRun(_label_n(n), ExperimentConfig(
            model_kind="multibarrier", model=BarrierParams(0.0, 0.5, 0.9, n),
            grid=TimeGrid(1.0, 1e-3), outputs=OutputConfig(copula_grid=20),
        ))
        for n in (0, 5, 10, 50)
    )
    return Preset(
        "multibarrier-copula",
        "Емпірична копула (X, Yⁿ), ν = 0, η = 0.5, ρ = 0.9, t = 1, n = 0, 5, 10, 50",
        "copula", runs,
    )


def _multibarrier_survival() -> Preset:
    runs = []
    for t_end, dt in ((1.0, 1e-3), (20.0, 1e-2)):
        span = 3.0 * np.sqrt(t_end)
        for n in (0, 5, 10, 50, INFINITE):
            runs.append(PresetRun(f"t_{t_end:g}_{_label_n(n)}", ExperimentConfig(
                model_kind="multibarrier", model=BarrierParams(0.0, 0.5, 0.9, n),
                grid=TimeGrid(t_end, dt),
                outputs=OutputConfig(xs=_xs(-span, span, 61), bridge_correction=True),
            )))
    return Preset(
        "multibarrier-survival",
        "Виживання X − Yⁿ: ряд та Monte Carlo, ν = 0, η = 0.5, ρ = 0.9, t = 1 та 20",
        "survival", tuple(runs),
    )


def _multibarrier_trajectories() -> Preset:
    runs = tuple(
        PresetRun(_label_n(n), ExperimentConfig(
            model_kind="multibarrier", model=BarrierParams(0.0, 0.5, 0.9, n),
            grid=TimeGrid(20.0, 1e-3), n_paths=50,
        ))
        for n in (0, 5, 10, 50)
    )
    return Preset(
        "multibarrier-trajectories",
        "50 траєкторій X − Yⁿ на [0, 20] та X, Y, X − Y першої, ν = 0, η = 0.5, ρ = 0.9",
        "trajectories", runs,
    )


def _local_fn() -> LocalCorrFn:
    return LocalCorrFn(rho_min=-0.9, rho_max=0.9, nu=0.0, eta=0.5)


def _local_copula() -> Preset:
    experiment = ExperimentConfig(
        model_kind="local", model=_local_fn(), grid=TimeGrid(1.0, 1e-3),
        outputs=OutputConfig(copula_grid=20),
    )
    return Preset(
        "local-copula",
        "Емпірична копула (X_t, Y_t) з локальною кореляцією −0.9 → 0.9, ν = 0, η = 0.5",
        "copula", (PresetRun("rho_-0.9_0.9", experiment),),
    )


def _local_trajectories() -> Preset:
    experiment = ExperimentConfig(
        model_kind="local", model=_local_fn(), grid=TimeGrid(20.0, 1e-3), n_paths=50,
    )
    return Preset(
        "local-trajectories",
        "50 траєкторій X − Y з локальною кореляцією −0.9 → 0.9 на [0, 20], ν = 0, η = 0.5",
        "trajectories", (PresetRun("rho_-0.9_0.9", experiment),),
    )


def _local_survival() -> Preset:
    runs = []
    for t_end, dt in ((1.0, 1e-3), (20.0, 1e-2)):
        span = 3.0 * np.sqrt(t_end)
        runs.append(PresetRun(f"t_{t_end:g}", ExperimentConfig(
            model_kind="local", model=_local_fn(), grid=TimeGrid(t_end, dt), level=0.99,
            outputs=OutputConfig(xs=_xs(-span, span, 61)),
        )))
    return Preset(
        "local-survival",
        "Емпіричне виживання X_t − Y_t з локальною кореляцією, смуги 99%, t = 1 та 20",
        "survival", tuple(runs),
    )


def _commodity_run(label: str, dependence: DependenceModel, f0_coal: float, days: int,
                   xs: Tuple[float, ...]) -> PresetRun:
    return PresetRun(label, ExperimentConfig(
        model_kind="commodity", model=_market(dependence, f0_coal), grid=_hourly_grid(days),
        outputs=OutputConfig(xs=xs, products=PRODUCT_LABELS),
    ))


def _benchmark() -> ConstantCorrelation:
    return ConstantCorrelation(config.BENCHMARK_CORRELATION)


def _commodity_trajectories() -> Preset:
    market = _market(MultiBarrierDependence(BarrierParams(0.0, 0.5, 0.9)), 100.0)
    experiment = ExperimentConfig(
        model_kind="commodity", model=market, grid=_hourly_grid(365), n_paths=1,
        outputs=OutputConfig(products=PRODUCT_LABELS),
    )
    return Preset(
        "commodity-trajectories",
        "Річна траєкторія цін електроенергії та вугілля (Spot, 1MAH, 3MAH, 6MAH), крок 1 година",
        "product_trajectories", (PresetRun("multibarrier", experiment),),
    )


def _commodity_survival_equal() -> Preset:
    xs = _xs(-40.0, 40.0, 81)
    runs = (
        _commodity_run("multibarrier", MultiBarrierDependence(BarrierParams(0.0, 0.5, 0.9)), 100.0, 365, xs),
        _commodity_run("benchmark", _benchmark(), 100.0, 365, xs),
    )
    return Preset(
        "commodity-survival-equal",
        "Виживання f^E − H·f^C у t = 365 днів, f^E(0) = H·f^C(0) = 100",
        "spread_survival", runs,
    )


def _commodity_survival_shifted() -> Preset:
    xs = _xs(-60.0, 20.0, 81)
    shifted = MultiBarrierDependence(BarrierParams(170.0, 170.5, 0.9), clock=BarrierClock.HOUR)
    runs = (
        _commodity_run("multibarrier", MultiBarrierDependence(BarrierParams(0.0, 0.5, 0.9)), 120.0, 335, xs),
        _commodity_run("benchmark", _benchmark(), 120.0, 335, xs),
        _commodity_run("multibarrier_shifted", shifted, 120.0, 335, xs),
    )
    return Preset(
        "commodity-survival-shifted",
        "Виживання f^E − H·f^C у t = 335 днів, f^E(0) = 100, H·f^C(0) = 120",
        "spread_survival", runs,
    )


# Референтні 95% інтервали: мітка моделі → продукт → інтервал
_EQUAL_REFERENCES: Dict[str, Dict[str, Interval]] = {
    "rho_0": {"Spot": (8.39, 8.92), "1MAH": (6.54, 6.94), "3MAH": (5.45, 5.78), "6MAH": (5.33, 5.69)},
    "mb_rho_0.3": {"Spot": (8.44, 8.96), "1MAH": (6.56, 6.94), "3MAH": (5.41, 5.70), "6MAH": (5.26, 5.55)},
    "mb_rho_0.6": {"Spot": (7.87, 8.37), "1MAH": (5.96, 6.30), "3MAH": (4.79, 5.03), "6MAH": (4.65, 4.87)},
    "mb_rho_0.9": {"Spot": (7.29, 7.75), "1MAH": (5.00, 5.29), "3MAH": (3.27, 3.41), "6MAH": (3.02, 3.15)},
    "benchmark_rho_0.275": {"Spot": (7.69, 8.19), "1MAH": (5.80, 6.16), "3MAH": (4.72, 5.00), "6MAH": (4.60, 4.88)},
}

_SHIFTED_REFERENCES: Dict[str, Dict[str, Interval]] = {
    "rho_0": {"Spot": (2.52, 2.83), "1MAH": (1.24, 1.42), "3MAH": (0.67, 0.79), "6MAH": (0.63, 0.74)},
    "mb_rho_0.3": {"Spot": (2.92, 3.25), "1MAH": (1.57, 1.77), "3MAH": (0.90, 1.02), "6MAH": (0.82, 0.94)},
    "mb_rho_0.6": {"Spot": (3.03, 3.36), "1MAH": (1.72, 1.92), "3MAH": (1.03, 1.15), "6MAH": (0.92, 1.03)},
    "mb_rho_0.9": {"Spot": (3.13, 3.48), "1MAH": (1.74, 1.98), "3MAH": (0.81, 0.90), "6MAH": (0.67, 0.74)},
    "benchmark_rho_0.275": {"Spot": (2.09, 2.37), "1MAH": (0.88, 1.02), "3MAH": (0.37, 0.45), "6MAH": (0.33, 0.41)},
}


def _option_runs(nu: float, eta: float, clock: BarrierClock, f0_coal: float) -> Tuple[PresetRun, ...]:
    xs = (0.0,)
    runs = [_commodity_run("rho_0", ConstantCorrelation(0.0), f0_coal, 365, xs)]
    for rho in (0.3, 0.6, 0.9):
        dependence = MultiBarrierDependence(BarrierParams(nu, eta, rho), clock=clock)
        runs.append(_commodity_run(f"mb_rho_{rho:g}", dependence, f0_coal, 365, xs))
    runs.append(_commodity_run("benchmark_rho_0.275", _benchmark(), f0_coal, 365, xs))
    return tuple(runs)


def _spread_options_equal() -> Preset:
    return Preset(
        "spread-options-equal",
        "Ціни спред-опціонів за рік, f^E(0) = H·f^C(0) = 100, бар'єри ν = 0, η = 0.5",
        "spread_options", _option_runs(0.0, 0.5, BarrierClock.YEAR, 100.0),
        references=_EQUAL_REFERENCES,
    )


def _spread_options_shifted() -> Preset:
    return Preset(
        "spread-options-shifted",
        "Ціни спред-опціонів за рік, f^E(0) = 100, H·f^C(0) = 120, бар'єри ν = 170, η = 170.5 (години)",
        "spread_options", _option_runs(170.0, 170.5, BarrierClock.HOUR, 120.0),
        references=_SHIFTED_REFERENCES,
    )


_BUILDERS = {
    "reflection-copula": _reflection_copula,
    "single-barrier-survival": _single_barrier_survival,
    "multibarrier-copula": _multibarrier_copula,
    "multibarrier-survival": _multibarrier_survival,
    "multibarrier-trajectories": _multibarrier_trajectories,
    "local-copula": _local_copula,
    "local-survival": _local_survival,
    "local-trajectories": _local_trajectories,
    "commodity-trajectories": _commodity_trajectories,
    "commodity-survival-equal": _commodity_survival_equal,
    "commodity-survival-shifted": _commodity_survival_shifted,
    "spread-options-equal": _spread_options_equal,
    "spread-options-shifted": _spread_options_shifted,
}


def get_preset_names() -> List[str]:
    """Імена всіх пресетів у порядку оголошення."""
    return list(_BUILDERS)


def get_preset(name: str) -> Preset:
    """
    Будує пресет за іменем.

    Raises:
        ConfigurationError: Невідомий пресет
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigurationError(
            f"невідомий пресет '{name}', доступні: {', '.join(get_preset_names())}",
            field="preset"
        ) from None
    return builder()
