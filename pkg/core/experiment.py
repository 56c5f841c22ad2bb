"""
Конфігурація експерименту: JSON-документ → типізовані незмінні структури.

Кожне поле перевіряється при розборі; помилка містить крапковий шлях поля
(model.rho, grid.dt, outputs.xs[3], …), для синтаксичних помилок JSON
рядок і колонку. Інваріанти моделей перевіряють конструктори модулів
models/*, їхні DomainError перетворюються на ConfigurationError з шляхом.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple, Union

from core.config import config
from core.errors import ConfigurationError, DomainError
from core.path_engine import TimeGrid
from models.commodities import (
    BarrierClock,
    ConstantCorrelation,
    FlatCurve,
    InterpolatedCurve,
    LocalDependence,
    MarketSetup,
    MultiBarrierDependence,
    Product,
    TwoFactorParams,
)
from models.local_corr import LocalCorrFn, get_shape
from models.multibarrier import BarrierParams
from models.reflection_copula import SingleBarrierParams

logger = logging.getLogger(__name__)

MODEL_KINDS = ("single_barrier", "multibarrier", "local", "constant", "commodity")

ModelParams = Union[SingleBarrierParams, BarrierParams, LocalCorrFn, ConstantCorrelation, MarketSetup]


@dataclass(frozen=True)
class OutputConfig:
    """Що саме обчислювати та записувати."""
    xs: Tuple[float, ...] = (0.0,)
    copula_grid: int = 20
    products: Tuple[str, ...] = ("Spot",)
    evaluation_time: Optional[float] = None
    bridge_correction: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Повний опис експерименту.

    Attributes:
        model_kind: Один з MODEL_KINDS
        model: Параметри моделі (SingleBarrierParams, BarrierParams, LocalCorrFn,
            ConstantCorrelation або MarketSetup)
        grid: Часова сітка
        n_paths: Кількість траєкторій
        seed: 64-бітний seed
        level: Рівень довіри інтервалів
        threads: Ліміт робочих потоків
        outputs: Параметри виходу
    """
    model_kind: str
    model: ModelParams
    grid: TimeGrid
    n_paths: int = config.DEFAULT_N_PATHS
    seed: int = config.DEFAULT_SEED
    level: float = config.DEFAULT_LEVEL
    threads: int = config.DEFAULT_THREADS
    outputs: OutputConfig = field(default_factory=OutputConfig)

    @property
    def evaluation_time(self) -> float:
        """Момент оцінки: outputs.evaluation_time або кінець сітки."""
        if self.outputs.evaluation_time is None:
            return self.grid.t_end
        return self.outputs.evaluation_time

    def with_overrides(
        self,
        seed: Optional[int] = None,
        n_paths: Optional[int] = None,
        dt: Optional[float] = None,
        threads: Optional[int] = None,
        level: Optional[float] = None
    ) -> "ExperimentConfig":
        """Копія з полями, перевизначеними прапорцями командного рядка."""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = _unsigned(seed, "seed")
        if n_paths is not None:
            changes["n_paths"] = _path_count(n_paths, "n_paths")
        if dt is not None:
            changes["grid"] = TimeGrid(t_end=self.grid.t_end, dt=_positive(dt, "grid.dt"))
        if threads is not None:
            changes["threads"] = _positive_int(threads, "threads")
        if level is not None:
            changes["level"] = _probability(level, "level")
        return replace(self, **changes)


# ============ ПЕРЕВІРКА ПОЛІВ ============

def _require(data: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigurationError("очікувався JSON-об'єкт", field=path or None)
    if key not in data:
        raise ConfigurationError("обов'язкове поле відсутнє", field=_join(path, key))
    return data[key]


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"очікувалось число, отримано {value!r}", field=path)
    value = float(value)
    if not math.isfinite(value):
        raise ConfigurationError(f"число має бути скінченним: {value}", field=path)
    return value


def _positive(value: Any, path: str) -> float:
    value = _number(value, path)
    if value <= 0:
        raise ConfigurationError(f"значення має бути додатним: {value}", field=path)
    return value


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"очікувалось ціле число, отримано {value!r}", field=path)
    return value


def _positive_int(value: Any, path: str) -> int:
    value = _integer(value, path)
    if value < 1:
        raise ConfigurationError(f"значення має бути ≥ 1: {value}", field=path)
    return value


def _path_count(value: Any, path: str) -> int:
    value = _positive_int(value, path)
    if value > config.MAX_N_PATHS:
        raise ConfigurationError(f"завелика кількість траєкторій: {value} > {config.MAX_N_PATHS}", field=path)
    return value


def _unsigned(value: Any, path: str) -> int:
    value = _integer(value, path)
    if not 0 <= value < 2 ** 64:
        raise ConfigurationError(f"seed поза межами [0, 2^64): {value}", field=path)
    return value


def _probability(value: Any, path: str) -> float:
    value = _number(value, path)
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"рівень має лежати в (0, 1): {value}", field=path)
    return value


def _domain(path: str, builder, *args, **kwargs):
    """Викликає конструктор моделі, перетворюючи DomainError на ConfigurationError."""
    try:
        return builder(*args, **kwargs)
    except DomainError as e:
        raise ConfigurationError(str(e), field=path) from e


# ============ МОДЕЛІ ============

def _parse_single_barrier(data: Dict[str, Any], path: str, t_end: float) -> SingleBarrierParams:
    return _domain(
        path, SingleBarrierParams,
        h=_number(_require(data, "h", path), _join(path, "h")),
        rho=_number(_require(data, "rho", path), _join(path, "rho")),
        t=t_end,
    )


def _parse_barrier(data: Dict[str, Any], path: str) -> BarrierParams:
    max_reflections = data.get("max_reflections")
    if max_reflections is not None:
        max_reflections = _integer(max_reflections, _join(path, "max_reflections"))
    return _domain(
        path, BarrierParams,
        nu=_number(_require(data, "nu", path), _join(path, "nu")),
        eta=_number(_require(data, "eta", path), _join(path, "eta")),
        rho=_number(_require(data, "rho", path), _join(path, "rho")),
        max_reflections=max_reflections,
    )


def _parse_local(data: Dict[str, Any], path: str) -> LocalCorrFn:
    shape = _domain(_join(path, "shape"), get_shape, str(data.get("shape", "linear")))
    return _domain(
        path, LocalCorrFn,
        rho_min=_number(_require(data, "rho_min", path), _join(path, "rho_min")),
        rho_max=_number(_require(data, "rho_max", path), _join(path, "rho_max")),
        nu=_number(_require(data, "nu", path), _join(path, "nu")),
        eta=_number(_require(data, "eta", path), _join(path, "eta")),
        shape=shape,
    )


def _parse_constant(data: Dict[str, Any], path: str) -> ConstantCorrelation:
    return _domain(path, ConstantCorrelation, rho=_number(_require(data, "rho", path), _join(path, "rho")))


def _parse_clock(data: Dict[str, Any], path: str) -> BarrierClock:
    name = data.get("clock", "YEAR")
    try:
        return BarrierClock[str(name).upper()]
    except KeyError:
        raise ConfigurationError(
            f"невідомий годинник '{name}', доступні: {', '.join(c.name for c in BarrierClock)}",
            field=_join(path, "clock")
        ) from None


def _parse_dependence(data: Dict[str, Any], path: str):
    kind = _require(data, "kind", path)
    if kind == "multibarrier":
        return MultiBarrierDependence(_parse_barrier(data, path), _parse_clock(data, path))
    if kind == "local":
        return LocalDependence(_parse_local(data, path), _parse_clock(data, path))
    if kind == "constant":
        return _parse_constant(data, path)
    raise ConfigurationError(
        f"невідома структура залежності '{kind}', доступні: multibarrier, local, constant",
        field=_join(path, "kind")
    )


def _parse_two_factor(value: Any, path: str) -> TwoFactorParams:
    if isinstance(value, str):
        try:
            return TwoFactorParams.from_preset(value)
        except ConfigurationError as e:
            raise ConfigurationError(str(e), field=path) from e
    return _domain(
        path, TwoFactorParams,
        sigma_s=_number(_require(value, "sigma_s", path), _join(path, "sigma_s")),
        alpha_s=_number(_require(value, "alpha_s", path), _join(path, "alpha_s")),
        sigma_l=_number(_require(value, "sigma_l", path), _join(path, "sigma_l")),
    )


def _parse_curve(value: Any, path: str):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return _domain(path, FlatCurve, _number(value, path))
    maturities = _require(value, "maturities", path)
    prices = _require(value, "prices", path)
    if not isinstance(maturities, list) or not isinstance(prices, list):
        raise ConfigurationError("maturities та prices мають бути списками", field=path)
    return _domain(
        path, InterpolatedCurve,
        maturities=tuple(_number(m, f"{path}.maturities[{i}]") for i, m in enumerate(maturities)),
        prices=tuple(_number(p, f"{path}.prices[{i}]") for i, p in enumerate(prices)),
    )


def _parse_market(data: Dict[str, Any], path: str) -> MarketSetup:
    return _domain(
        path, MarketSetup,
        elec=_parse_two_factor(data.get("elec", "electricity"), _join(path, "elec")),
        coal=_parse_two_factor(data.get("coal", "coal"), _join(path, "coal")),
        f0_elec=_parse_curve(_require(data, "f0_elec", path), _join(path, "f0_elec")),
        f0_coal=_parse_curve(_require(data, "f0_coal", path), _join(path, "f0_coal")),
        heat_rate=_positive(data.get("heat_rate", 1.0), _join(path, "heat_rate")),
        dependence=_parse_dependence(_require(data, "dependence", path), _join(path, "dependence")),
        strike=_number(data.get("strike", 0.0), _join(path, "strike")),
    )


def _parse_model(data: Dict[str, Any], t_end: float) -> Tuple[str, ModelParams]:
    kind = _require(data, "kind", "model")
    if kind == "single_barrier":
        return kind, _parse_single_barrier(data, "model", t_end)
    if kind == "multibarrier":
        return kind, _parse_barrier(data, "model")
    if kind == "local":
        return kind, _parse_local(data, "model")
    if kind == "constant":
        return kind, _parse_constant(data, "model")
    if kind == "commodity":
        return kind, _parse_market(data, "model")
    raise ConfigurationError(
        f"невідома модель '{kind}', доступні: {', '.join(MODEL_KINDS)}", field="model.kind"
    )


# ============ ДОКУМЕНТ ============

def _parse_outputs(data: Dict[str, Any], t_end: float) -> OutputConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("очікувався JSON-об'єкт", field="outputs")
    defaults = OutputConfig()

    xs = data.get("xs", list(defaults.xs))
    if not isinstance(xs, list) or not xs:
        raise ConfigurationError("xs має бути непорожнім списком", field="outputs.xs")
    xs = tuple(_number(x, f"outputs.xs[{i}]") for i, x in enumerate(xs))

    copula_grid = _integer(data.get("copula_grid", defaults.copula_grid), "outputs.copula_grid")
    if copula_grid < 2:
        raise ConfigurationError(f"copula_grid має бути ≥ 2: {copula_grid}", field="outputs.copula_grid")

    products = data.get("products", list(defaults.products))
    if not isinstance(products, list) or not products:
        raise ConfigurationError("products має бути непорожнім списком", field="outputs.products")
    for i, label in enumerate(products):
        _domain(f"outputs.products[{i}]", Product.parse, str(label))

    evaluation_time = data.get("evaluation_time")
    if evaluation_time is not None:
        evaluation_time = _positive(evaluation_time, "outputs.evaluation_time")
        if evaluation_time > t_end:
            raise ConfigurationError(
                f"момент оцінки {evaluation_time} за межами сітки {t_end}",
                field="outputs.evaluation_time"
            )

    bridge = data.get("bridge_correction", defaults.bridge_correction)
    if not isinstance(bridge, bool):
        raise ConfigurationError(f"очікувалось true/false: {bridge!r}", field="outputs.bridge_correction")

    return OutputConfig(
        xs=xs,
        copula_grid=copula_grid,
        products=tuple(str(p) for p in products),
        evaluation_time=evaluation_time,
        bridge_correction=bridge,
    )


def parse_experiment(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Перетворює розібраний JSON у ExperimentConfig.

    Raises:
        ConfigurationError: Некоректне або відсутнє поле (з крапковим шляхом)
    """
    if not isinstance(data, dict):
        raise ConfigurationError("корінь конфігурації має бути JSON-об'єктом")

    grid_data = _require(data, "grid", "")
    t_end = _positive(_require(grid_data, "t_end", "grid"), "grid.t_end")
    dt = _positive(grid_data.get("dt", config.DEFAULT_DT), "grid.dt")
    grid = TimeGrid(t_end=t_end, dt=dt)

    kind, model = _parse_model(_require(data, "model", ""), t_end)

    experiment = ExperimentConfig(
        model_kind=kind,
        model=model,
        grid=grid,
        n_paths=_path_count(data.get("n_paths", config.DEFAULT_N_PATHS), "n_paths"),
        seed=_unsigned(data.get("seed", config.DEFAULT_SEED), "seed"),
        level=_probability(data.get("level", config.DEFAULT_LEVEL), "level"),
        threads=_positive_int(data.get("threads", config.DEFAULT_THREADS), "threads"),
        outputs=_parse_outputs(data.get("outputs", {}), t_end),
    )
    logger.info(
        f"Parsed experiment: model={kind}, t_end={grid.t_end}, steps={grid.n_steps}, "
        f"paths={experiment.n_paths}, seed={experiment.seed}"
    )
    return experiment


def parse_experiment_text(text: str) -> ExperimentConfig:
    """
    Розбирає JSON-текст конфігурації.

    Raises:
        ConfigurationError: Синтаксична помилка JSON (рядок, колонка) або некоректне поле
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"некоректний JSON: {e.msg} (рядок {e.lineno}, колонка {e.colno})"
        ) from e
    return parse_experiment(data)
