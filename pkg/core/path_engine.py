"""
Генератор броунівських приростів з відтворюваними незалежними потоками.

Архітектурна стратегія: counter-based потоки. Ключ потоку = (seed, path_index,
driver_index), похідний через numpy SeedSequence, генератор Philox. Результат
не залежить від порядку виконання, тому серійний і паралельний запуск
дають біт-ідентичні оцінки.

Гаусові прирости отримуються оберненою CDF від 53-бітних рівномірних,
побудованих з 64-бітних слів Philox.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from core.config import config
from core.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

_MAX_SEED = 2 ** 64
_UNIFORM_SCALE = 2.0 ** -53

# Окремий простір ключів для службових потоків (точні семплери, bridge)
AUXILIARY_STREAM = 2 ** 32


@dataclass(frozen=True)
class TimeGrid:
    """
    Рівномірна сітка на [0, t_end].

    dt зберігається як t_end / n_steps, тому n_steps·dt = t_end точно.
    """
    t_end: float
    dt: float
    n_steps: int = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigurationError(f"t_end має бути додатним: {self.t_end}", field="grid.t_end")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt має бути додатним: {self.dt}", field="grid.dt")
        n_steps = int(round(self.t_end / self.dt))
        if n_steps < 1:
            raise ConfigurationError(
                f"вироджена сітка: dt={self.dt} більший за t_end={self.t_end}", field="grid.dt"
            )
        if abs(n_steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ConfigurationError(
                f"t_end={self.t_end} не кратний dt={self.dt}", field="grid.dt"
            )
        object.__setattr__(self, "n_steps", n_steps)
        object.__setattr__(self, "dt", self.t_end / n_steps)

    @classmethod
    def from_hours(cls, t_end: float, step_hours: float = 1.0) -> "TimeGrid":
        """Сітка з кроком у годинах (рік = 365·24 годин)."""
        return cls(t_end=t_end, dt=step_hours * config.hour_in_years())

    @property
    def times(self) -> np.ndarray:
        """Моменти t_0 = 0, …, t_N = t_end."""
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Індекс вузла сітки, що відповідає моменту t."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > 1e-9 * max(t, self.dt):
            raise DomainError(f"момент t={t} не є вузлом сітки з dt={self.dt}")
        return k

    def truncated(self, t: float) -> "TimeGrid":
        """Та сама сітка, обрізана до [0, t]."""
        k = self.index_of(t)
        if k == 0:
            raise DomainError("неможливо обрізати сітку до t = 0")
        return TimeGrid(t_end=k * self.dt, dt=self.dt)


@dataclass(frozen=True)
class PathSet:
    """
    Прирости незалежних драйверів для однієї траєкторії.

    increments має форму (n_drivers, n_steps).
    """
    labels: Tuple[str, ...]
    increments: np.ndarray
    seed: int
    path_index: int
    grid: TimeGrid

    def driver(self, name: Union[str, int]) -> np.ndarray:
        """Прирости драйвера за іменем або індексом."""
        if isinstance(name, int):
            if not 0 <= name < len(self.labels):
                raise DomainError(f"невідомий драйвер #{name}")
            return self.increments[name]
        try:
            return self.increments[self.labels.index(name)]
        except ValueError:
            raise DomainError(
                f"невідомий драйвер '{name}', доступні: {', '.join(self.labels)}"
            ) from None


# ============ ПОТОКИ ============

def _check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ConfigurationError(f"seed має бути цілим: {seed!r}", field="seed")
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ConfigurationError(f"seed поза межами [0, 2^64): {seed}", field="seed")
    return seed


def _stream(seed: int, key: Tuple[int, ...]) -> np.random.Philox:
    """Philox, ключований (seed, *key) через SeedSequence."""
    return np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def keyed_uniforms(seed: int, key: Tuple[int, ...], size: int) -> np.ndarray:
    """Рівномірні з (0, 1): середини 2^53 комірок, нуль і одиниця недосяжні."""
    raw = _stream(_check_seed(seed), key).random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _UNIFORM_SCALE


def keyed_normals(seed: int, key: Tuple[int, ...], size: int) -> np.ndarray:
    """Стандартні нормальні через Φ⁻¹ від keyed_uniforms."""
    return special.ndtri(keyed_uniforms(seed, key, size))


def make_increments(
    grid: TimeGrid,
    n_drivers: int,
    seed: int,
    path_index: int,
    labels: Optional[Sequence[str]] = None
) -> PathSet:
    """
    Генерує n_drivers незалежних потоків приростів N(0, dt) для однієї траєкторії.

    Args:
        grid: Часова сітка
        n_drivers: Кількість драйверів (≥ 1)
        seed: 64-бітний seed експерименту
        path_index: Номер траєкторії
        labels: Імена драйверів (за замовчуванням "W0", "W1", …)

    Returns:
        PathSet з масивом форми (n_drivers, n_steps)

    Raises:
        ConfigurationError: n_drivers ≤ 0, некоректні labels або seed
    """
    if n_drivers <= 0:
        raise ConfigurationError(f"n_drivers має бути ≥ 1: {n_drivers}", field="n_drivers")
    if path_index < 0:
        raise ConfigurationError(f"path_index має бути ≥ 0: {path_index}")
    if labels is None:
        labels = tuple(f"W{i}" for i in range(n_drivers))
    labels = tuple(labels)
    if len(labels) != n_drivers:
        raise ConfigurationError(f"очікувалось {n_drivers} імен драйверів, отримано {len(labels)}")

    seed = _check_seed(seed)
    sqrt_dt = math.sqrt(grid.dt)
    increments = np.empty((n_drivers, grid.n_steps))
    for d in range(n_drivers):
        increments[d] = sqrt_dt * keyed_normals(seed, (path_index, d), grid.n_steps)
    return PathSet(labels=labels, increments=increments, seed=seed,
                   path_index=path_index, grid=grid)


def make_increment_block(
    grid: TimeGrid,
    n_drivers: int,
    seed: int,
    path_indices: Sequence[int]
) -> np.ndarray:
    """
    Прирости для групи траєкторій, форма (n_drivers, n_paths, n_steps).

    Кожен рядок збігається біт у біт з make_increments для того ж path_index.
    """
    if n_drivers <= 0:
        raise ConfigurationError(f"n_drivers має бути ≥ 1: {n_drivers}", field="n_drivers")
    seed = _check_seed(seed)
    sqrt_dt = math.sqrt(grid.dt)
    block = np.empty((n_drivers, len(path_indices), grid.n_steps))
    for j, path_index in enumerate(path_indices):
        for d in range(n_drivers):
            block[d, j] = sqrt_dt * keyed_normals(seed, (int(path_index), d), grid.n_steps)
    return block


def cumulate(path: PathSet, driver: Union[str, int]) -> np.ndarray:
    """Значення B_{t_k} з B_0 = 0, довжина n_steps + 1."""
    increments = path.driver(driver)
    out = np.zeros(increments.size + 1)
    np.cumsum(increments, out=out[1:])
    return out


# ============ ВИКОНАННЯ ПО ЧАНКАХ ============

def map_path_chunks(
    n_paths: int,
    worker: Callable[[np.ndarray], np.ndarray],
    chunk_size: Optional[int] = None,
    threads: int = 1
) -> np.ndarray:
    """
    Застосовує worker до послідовних блоків індексів траєкторій.

    Результати склеюються в порядку path_index, тому вихід не залежить
    від кількості потоків.

    Args:
        n_paths: Загальна кількість траєкторій
        worker: Функція індекси → масив з першою віссю за траєкторіями
        chunk_size: Розмір блоку (config.CHUNK_SIZE за замовчуванням)
        threads: Максимальна кількість робочих потоків

    Returns:
        Конкатенація результатів уздовж осі 0 (для кортежів: по кожному елементу)
    """
    if n_paths < 1:
        raise ConfigurationError(f"n_paths має бути ≥ 1: {n_paths}", field="n_paths")
    if n_paths > config.MAX_N_PATHS:
        raise ConfigurationError(f"n_paths завеликий: {n_paths}", field="n_paths")
    if threads < 1:
        raise ConfigurationError(f"threads має бути ≥ 1: {threads}", field="threads")
    chunk_size = chunk_size or config.CHUNK_SIZE

    chunks = [
        np.arange(start, min(start + chunk_size, n_paths))
        for start in range(0, n_paths, chunk_size)
    ]
    logger.debug(f"Running {n_paths} paths in {len(chunks)} chunks on {threads} thread(s)")

    if threads == 1 or len(chunks) == 1:
        results = [worker(chunk) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, chunks))

    if isinstance(results[0], tuple):
        return tuple(np.concatenate(parts) for parts in zip(*results))
    return np.concatenate(results)
