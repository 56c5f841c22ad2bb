"""
Модель локальної кореляції: миттєва кореляція X та Y: детермінована
функція поточного спреду ρ̃(X_t − Y_t) з двома плато.

dY_t = ρ̃(X_t − Y_t) dB^X_t + √(1 − ρ̃(X_t − Y_t)²) dB^Y_t, X = B^X.

Схема Ейлера з коефіцієнтами в лівій точці кроку.
Extensibility Point: форма переходу між плато підключається через CorrelationShape.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from core.errors import DomainError
from core.path_engine import TimeGrid, make_increment_block, map_path_chunks

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DRIVER_LABELS = ("BX", "BY")


class CorrelationShape(Protocol):
    """Протокол форми переходу: s ∈ [0, 1] → вага w ∈ [0, 1], w(0) = 0, w(1) = 1, монотонна."""

    name: str
    lipschitz_factor: float

    def __call__(self, s: np.ndarray) -> np.ndarray:
        ...


class LinearShape:
    """Лінійний перехід між плато."""

    name = "linear"
    lipschitz_factor = 1.0

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return s


class SmoothStepShape:
    """Кубічний перехід 3s² − 2s³ з нульовою похідною на краях."""

    name = "smoothstep"
    lipschitz_factor = 1.5

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return s * s * (3.0 - 2.0 * s)


SHAPES = {
    "linear": LinearShape,
    "smoothstep": SmoothStepShape,
}


def get_shape(name: str) -> CorrelationShape:
    """Повертає форму переходу за іменем."""
    try:
        return SHAPES[name]()
    except KeyError:
        raise DomainError(
            f"невідома форма '{name}', доступні: {', '.join(sorted(SHAPES))}"
        ) from None


@dataclass(frozen=True)
class LocalCorrFn:
    """
    Функція локальної кореляції ρ̃.

    ρ̃(x) = rho_min для x ≤ ν, rho_max для x ≥ η, перехід за shape між ними.
    """
    rho_min: float
    rho_max: float
    nu: float
    eta: float
    shape: CorrelationShape = field(default_factory=LinearShape)

    def __post_init__(self):
        for name in ("rho_min", "rho_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and abs(value) < 1.0):
                raise DomainError(f"{name} має лежати в (-1, 1): {value}")
        if not (math.isfinite(self.nu) and math.isfinite(self.eta)):
            raise DomainError(f"бар'єри мають бути скінченними: nu={self.nu}, eta={self.eta}")
        if not self.eta > self.nu:
            raise DomainError(f"потрібно eta > nu: nu={self.nu}, eta={self.eta}")

    @property
    def lipschitz_constant(self) -> float:
        """Стала Ліпшиця ρ̃ за спредом."""
        return self.shape.lipschitz_factor * abs(self.rho_max - self.rho_min) / (self.eta - self.nu)

    def scaled(self, factor: float) -> "LocalCorrFn":
        """Копія з бар'єрами, помноженими на factor (зміна одиниць часу)."""
        if factor <= 0:
            raise DomainError(f"масштаб має бути додатним: {factor}")
        return LocalCorrFn(self.rho_min, self.rho_max, self.nu * factor, self.eta * factor, self.shape)


def rho_tilde(x: ArrayLike, fn: LocalCorrFn) -> ArrayLike:
    """ρ̃(x) для скаляра або масиву."""
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise DomainError("x має бути скінченним")
    s = np.clip((xs - fn.nu) / (fn.eta - fn.nu), 0.0, 1.0)
    value = fn.rho_min + (fn.rho_max - fn.rho_min) * fn.shape(s)
    return float(value) if value.ndim == 0 else value


@dataclass
class LocalCorrPath:
    """Траєкторії X та Y на вузлах сітки."""
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray


@dataclass
class LocalCorrSample:
    """Термінальні значення та знімки спреду в заданих вузлах."""
    x: np.ndarray
    y: np.ndarray
    snapshots: np.ndarray

    @property
    def spread(self) -> np.ndarray:
        return self.x - self.y


# ============ СИМУЛЯЦІЯ ============

def _run_block(
    fn: LocalCorrFn,
    dx: np.ndarray,
    dby: np.ndarray,
    keep_paths: bool = False,
    keep_increments: bool = False,
    observe_steps: Sequence[int] = ()
) -> dict:
    """Покрокова схема Ейлера для блоку (n_paths, n_steps)."""
    n_paths, n_steps = dx.shape
    x = np.zeros(n_paths)
    y = np.zeros(n_paths)
    out = {"x": x, "y": y, "snapshots": np.zeros((n_paths, len(observe_steps)))}
    observe = {step: j for j, step in enumerate(observe_steps)}
    if 0 in observe:
        out["snapshots"][:, observe[0]] = 0.0
    if keep_paths:
        out["x_paths"] = np.zeros((n_paths, n_steps + 1))
        out["y_paths"] = np.zeros((n_paths, n_steps + 1))
    if keep_increments:
        out["y_increments"] = np.empty((n_paths, n_steps))

    for n in range(n_steps):
        r = rho_tilde(x - y, fn)
        dy = r * dx[:, n] + np.sqrt((1.0 - r) * (1.0 + r)) * dby[:, n]
        x += dx[:, n]
        y += dy
        if keep_paths:
            out["x_paths"][:, n + 1] = x
            out["y_paths"][:, n + 1] = y
        if keep_increments:
            out["y_increments"][:, n] = dy
        if n + 1 in observe:
            out["snapshots"][:, observe[n + 1]] = x - y
    return out


def coupled_increments(fn: LocalCorrFn, dx: np.ndarray, dby: np.ndarray) -> np.ndarray:
    """Прирости Y (n_paths, n_steps) за заданими приростами B^X, B^Y."""
    return _run_block(fn, dx, dby, keep_increments=True)["y_increments"]


def simulate_local(
    fn: LocalCorrFn,
    grid: TimeGrid,
    seed: int,
    path_index: int
) -> LocalCorrPath:
    """
    Симулює одну траєкторію (X, Y), X_0 = Y_0 = 0.

    X_{k+1} = X_k + ΔB^X; Y_{k+1} = Y_k + ρ̃(X_k − Y_k)ΔB^X + √(1 − ρ̃²)ΔB^Y.
    """
    increments = make_increment_block(grid, len(DRIVER_LABELS), seed, [path_index])
    out = _run_block(fn, increments[0], increments[1], keep_paths=True)
    return LocalCorrPath(times=grid.times, x=out["x_paths"][0], y=out["y_paths"][0])


def simulate_local_terminal(
    fn: LocalCorrFn,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    observe_times: Sequence[float] = (),
    threads: int = 1,
    chunk_size: Optional[int] = None,
    first_path: int = 0
) -> LocalCorrSample:
    """
    Термінальні X, Y для n_paths траєкторій і спред у моменти observe_times.

    first_path зсуває індекси траєкторій (незалежні популяції з одним seed).
    """
    observe_steps = [grid.index_of(t) for t in observe_times]

    def worker(indices: np.ndarray) -> Tuple[np.ndarray, ...]:
        increments = make_increment_block(grid, len(DRIVER_LABELS), seed, indices + first_path)
        out = _run_block(fn, increments[0], increments[1], observe_steps=observe_steps)
        return out["x"], out["y"], out["snapshots"]

    logger.info(
        f"Simulating local-correlation model: rho_min={fn.rho_min}, rho_max={fn.rho_max}, "
        f"nu={fn.nu}, eta={fn.eta}, shape={fn.shape.name}, T={grid.t_end}, paths={n_paths}"
    )
    x, y, snapshots = map_path_chunks(n_paths, worker, chunk_size=chunk_size, threads=threads)
    return LocalCorrSample(x=x, y=y, snapshots=snapshots)


def simulate_local_trajectories(
    fn: LocalCorrFn,
    grid: TimeGrid,
    seed: int,
    n_paths: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Повні траєкторії X та Y, форма (n_paths, n_steps + 1)."""
    increments = make_increment_block(grid, len(DRIVER_LABELS), seed, np.arange(n_paths))
    out = _run_block(fn, increments[0], increments[1], keep_paths=True)
    return out["x_paths"], out["y_paths"]
