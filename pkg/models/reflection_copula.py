"""
Модель з одним бар'єром: броунівський рух B¹, його відбиття від рівня h
та корельований партнер B² = ρ·B̃^h + √(1−ρ²)·Z.

Відповідальність:
- симуляція траєкторій на сітці (з опційною bridge-корекцією перетину);
- точний семплер термінальної пари через закон максимуму броунівського мосту;
- закрита форма копули (B¹_t, B²_t) і функції виживання B¹_t − B²_t.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import special

from core.errors import DomainError
from core.gauss_kernels import bvn_cdf, quantile_or_infinite
from core.path_engine import (
    AUXILIARY_STREAM,
    TimeGrid,
    keyed_normals,
    keyed_uniforms,
    make_increment_block,
    map_path_chunks,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Драйвери: B¹ та незалежний Z; індекс 2 резервовано під bridge-рівномірні
DRIVER_LABELS = ("B1", "Z")
_BRIDGE_DRIVER = 2


@dataclass(frozen=True)
class SingleBarrierParams:
    """
    Параметри моделі з одним бар'єром.

    Attributes:
        h: Рівень бар'єра (> 0)
        rho: Кореляція з (0, 1)
        t: Момент оцінки для статичних формул (> 0)
    """
    h: float
    rho: float
    t: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h > 0):
            raise DomainError(f"бар'єр h має бути додатним: {self.h}")
        if not (math.isfinite(self.rho) and 0.0 < self.rho < 1.0):
            raise DomainError(f"rho поза межами (0, 1): {self.rho}")
        if not (math.isfinite(self.t) and self.t > 0):
            raise DomainError(f"t має бути додатним: {self.t}")

    @property
    def branch_threshold(self) -> float:
        """Межа гілок копули u* = Φ(h/√t)."""
        return float(special.ndtr(self.h / math.sqrt(self.t)))


@dataclass
class SingleBarrierPath:
    """Траєкторії B¹, B̃^h, B² на вузлах сітки та виявлений момент τ^h."""
    times: np.ndarray
    b1: np.ndarray
    b_reflected: np.ndarray
    b2: np.ndarray
    tau: Optional[float] = None


# ============ СИМУЛЯЦІЯ ============

def _reflect_block(
    params: SingleBarrierParams,
    grid: TimeGrid,
    increments: np.ndarray,
    bridge_uniforms: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Будує (B¹, B̃^h, B²) для блоку траєкторій.

    Args:
        increments: Масив (2, n_paths, n_steps) приростів B¹ та Z
        bridge_uniforms: (n_paths, n_steps) рівномірні для bridge-корекції

    Returns:
        b1, b_reflected, b2 форми (n_paths, n_steps + 1) та індекс виявлення
        (−1, якщо бар'єр не досягнуто)
    """
    h, rho = params.h, params.rho
    n_paths, n_steps = increments.shape[1], increments.shape[2]

    b1 = np.zeros((n_paths, n_steps + 1))
    z = np.zeros((n_paths, n_steps + 1))
    np.cumsum(increments[0], axis=1, out=b1[:, 1:])
    np.cumsum(increments[1], axis=1, out=z[:, 1:])

    crossed = np.zeros((n_paths, n_steps + 1), dtype=bool)
    if bridge_uniforms is None:
        crossed[:, 1:] = b1[:, 1:] >= h
    else:
        gap_start = h - b1[:, :-1]
        gap_end = h - b1[:, 1:]
        both_below = (gap_start > 0) & (gap_end > 0)
        crossing_prob = np.where(
            both_below,
            np.exp(-2.0 * np.clip(gap_start, 0, None) * np.clip(gap_end, 0, None) / grid.dt),
            1.0
        )
        crossed[:, 1:] = (gap_end <= 0) | (bridge_uniforms < crossing_prob)

    has_hit = crossed.any(axis=1)
    first = np.where(has_hit, crossed.argmax(axis=1), -1)

    # B̃ = B¹ − 2·B¹_τ після τ; з bridge-корекцією B¹_τ = h
    rows = np.arange(n_paths)
    level = h if bridge_uniforms is not None else b1[rows, np.maximum(first, 0)]
    level = np.broadcast_to(level, (n_paths,))
    after = has_hit[:, None] & (np.arange(n_steps + 1)[None, :] >= first[:, None])
    b_reflected = np.where(after, b1 - 2.0 * level[:, None], -b1)

    b2 = rho * b_reflected + math.sqrt((1.0 - rho) * (1.0 + rho)) * z
    return b1, b_reflected, b2, first


def simulate_single_barrier(
    params: SingleBarrierParams,
    grid: TimeGrid,
    seed: int,
    path_index: int,
    bridge_correction: bool = False
) -> SingleBarrierPath:
    """
    Симулює одну траєкторію (B¹, B̃^h, B²).

    τ^h: перший вузол сітки з B¹ ≥ h (або bridge-перетин, якщо увімкнено).

    Args:
        params: Параметри моделі
        grid: Часова сітка
        seed: Seed експерименту
        path_index: Номер траєкторії
        bridge_correction: Враховувати перетин між вузлами

    Returns:
        SingleBarrierPath з траєкторіями на вузлах сітки
    """
    increments = make_increment_block(grid, len(DRIVER_LABELS), seed, [path_index])
    uniforms = None
    if bridge_correction:
        uniforms = keyed_uniforms(seed, (path_index, _BRIDGE_DRIVER), grid.n_steps)[None, :]
    b1, b_ref, b2, first = _reflect_block(params, grid, increments, uniforms)
    tau = float(first[0] * grid.dt) if first[0] >= 0 else None
    return SingleBarrierPath(times=grid.times, b1=b1[0], b_reflected=b_ref[0], b2=b2[0], tau=tau)


def simulate_single_barrier_terminal(
    params: SingleBarrierParams,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    bridge_correction: bool = False,
    threads: int = 1,
    chunk_size: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Термінальні значення (B¹_T, B²_T) для n_paths траєкторій на сітці."""

    def worker(indices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        increments = make_increment_block(grid, len(DRIVER_LABELS), seed, indices)
        uniforms = None
        if bridge_correction:
            uniforms = np.stack([
                keyed_uniforms(seed, (int(i), _BRIDGE_DRIVER), grid.n_steps) for i in indices
            ])
        b1, _, b2, _ = _reflect_block(params, grid, increments, uniforms)
        return b1[:, -1].copy(), b2[:, -1].copy()

    logger.info(
        f"Simulating single-barrier model: h={params.h}, rho={params.rho}, "
        f"T={grid.t_end}, paths={n_paths}, bridge={bridge_correction}"
    )
    return map_path_chunks(n_paths, worker, chunk_size=chunk_size, threads=threads)


def sample_terminal_pairs(
    params: SingleBarrierParams,
    n_samples: int,
    seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Точний семплер (B¹_t, B²_t) без часової сітки.

    Максимум B¹ на [0, t] за умови B¹_t = w має закон броунівського мосту:
    M = (w + √(w² − 2t·log U)) / 2. Якщо M ≥ h, то B̃^h_t = w − 2h, інакше −w.
    """
    if n_samples < 1:
        raise DomainError(f"n_samples має бути ≥ 1: {n_samples}")
    t, h, rho = params.t, params.h, params.rho
    sqrt_t = math.sqrt(t)

    w = sqrt_t * keyed_normals(seed, (AUXILIARY_STREAM, 0), n_samples)
    z = sqrt_t * keyed_normals(seed, (AUXILIARY_STREAM, 1), n_samples)
    u = keyed_uniforms(seed, (AUXILIARY_STREAM, 2), n_samples)

    running_max = 0.5 * (w + np.sqrt(w * w - 2.0 * t * np.log(u)))
    b_reflected = np.where(running_max >= h, w - 2.0 * h, -w)
    b2 = rho * b_reflected + math.sqrt((1.0 - rho) * (1.0 + rho)) * z
    return w, b2


# ============ КОПУЛА ============

def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} поза [0, 1]: {value}")
    return value


def _upper_branch(a: float, b: float, v: float, hs: float, rho: float) -> float:
    """Гілка u ≥ Φ(h/√t): B¹_t вище бар'єра означає, що відбиття вже відбулось."""
    shifted = b + 2.0 * rho * hs
    return bvn_cdf(a, shifted, rho) + v - float(special.ndtr(shifted))


def _lower_branch(a: float, b: float, hs: float, rho: float) -> float:
    """Гілка u < Φ(h/√t)."""
    a_reflected = a - 2.0 * hs
    return (
        bvn_cdf(a, b, -rho)
        + bvn_cdf(a_reflected, -b - 2.0 * rho * hs, rho)
        + bvn_cdf(a_reflected, b, rho)
        - float(special.ndtr(a_reflected))
    )


def copula_value(u: float, v: float, params: SingleBarrierParams) -> float:
    """
    Копула C_t(u, v) пари (B¹_t, B²_t).

    Args:
        u, v: Аргументи з [0, 1]
        params: Параметри моделі (використовується params.t)

    Returns:
        C_t(u, v), обмежене межами Фреше

    Raises:
        DomainError: u або v поза [0, 1]
    """
    u = _check_unit("u", u)
    v = _check_unit("v", v)
    if u == 0.0 or v == 0.0:
        return 0.0
    if u == 1.0:
        return v
    if v == 1.0:
        return u

    hs = params.h / math.sqrt(params.t)
    a = quantile_or_infinite(u)
    b = quantile_or_infinite(v)
    if u >= params.branch_threshold:
        value = _upper_branch(a, b, v, hs, params.rho)
    else:
        value = _lower_branch(a, b, hs, params.rho)
    return min(max(value, u + v - 1.0, 0.0), u, v)


def copula_grid(params: SingleBarrierParams, grid_size: int) -> np.ndarray:
    """Матриця C_t(i/g, j/g), i, j = 1..g (рядок i відповідає u)."""
    if grid_size < 2:
        raise DomainError(f"grid_size має бути ≥ 2: {grid_size}")
    levels = np.arange(1, grid_size + 1) / grid_size
    return np.array([[copula_value(u, v, params) for v in levels] for u in levels])


# ============ ФУНКЦІЯ ВИЖИВАННЯ ============

def survival_diff(x: ArrayLike, params: SingleBarrierParams) -> ArrayLike:
    """
    P(B¹_t − B²_t ≥ x) у закритій формі.

    Приймає скаляр або масив x; повертає той самий тип.
    """
    xs = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xs)):
        raise DomainError("x має бути скінченним")
    t, h, rho = params.t, params.h, params.rho
    s_minus = math.sqrt(2.0 * (1.0 - rho) * t)
    s_plus = math.sqrt(2.0 * (1.0 + rho) * t)

    value = (
        special.ndtr((-xs + 2.0 * rho * h) / s_minus)
        * special.ndtr((xs - 2.0 * h * (1.0 + rho)) / s_plus)
        + special.ndtr((2.0 * h - xs) / s_minus) * special.ndtr(-xs / s_plus)
    )
    return float(value) if value.ndim == 0 else value


def survival_upper_bound(x: ArrayLike, t: float) -> ArrayLike:
    """Оцінка зверху 2Φ(−x/(2√t)) для x > 0 за будь-якої конструкції пари."""
    xs = np.asarray(x, dtype=float)
    value = 2.0 * special.ndtr(-xs / (2.0 * math.sqrt(t)))
    return float(value) if value.ndim == 0 else value


def survival_diff_via_copula(x: float, params: SingleBarrierParams, n_cells: int = 2000) -> float:
    """
    P(B¹_t − B²_t ≥ x), відновлена з копули сумою Стілтьєса.

    Σ_i [C(u_{i+1}, v_i) − C(u_i, v_i)], де v_i = Φ((a_i − x)/√t),
    a_i: квантиль B¹_t у середині комірки. Похибка O(1/n_cells).
    """
    sqrt_t = math.sqrt(params.t)
    edges = np.linspace(0.0, 1.0, n_cells + 1)
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        a_mid = sqrt_t * float(special.ndtri(0.5 * (left + right)))
        v = float(special.ndtr((a_mid - x) / sqrt_t))
        total += copula_value(right, v, params) - copula_value(left, v, params)
    return total
