"""
Модель кореляції з кількома бар'єрами.

Пара (X, Y): кореляція між X та Y дорівнює −ρ, доки спред X − Y не досягне η,
далі +ρ, доки спред не повернеться до ν, і так далі по драбині
α = (0, η, ν, η, ν, …). Yⁿ обмежує кількість перемикань числом n.

Відповідальність:
- послідовності α_k, u_k та закон часів перемикання τ_k;
- аналітичний ряд функції виживання спреду P(X_t − Yⁿ_t ≥ x) = Σ p_k;
- векторизована симуляція по блоках траєкторій (крок за часом).
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from core.config import config
from core.errors import ConsistencyError, DomainError
from core.gauss_kernels import phi_difference
from core.path_engine import TimeGrid, keyed_uniforms, make_increment_block, map_path_chunks

logger = logging.getLogger(__name__)

# Позначка необмеженої кількості перемикань
INFINITE: Optional[int] = None

DRIVER_LABELS = ("BX", "BY")
_BRIDGE_DRIVER = 2


@dataclass(frozen=True)
class BarrierParams:
    """
    Параметри драбини бар'єрів.

    Attributes:
        nu: Нижній бар'єр ν
        eta: Верхній бар'єр η (> 0, > ν)
        rho: Кореляція з [0, 1]
        max_reflections: Ліміт перемикань n (None = необмежено)
    """
    nu: float
    eta: float
    rho: float
    max_reflections: Optional[int] = INFINITE

    def __post_init__(self):
        if not (math.isfinite(self.nu) and math.isfinite(self.eta)):
            raise DomainError(f"бар'єри мають бути скінченними: nu={self.nu}, eta={self.eta}")
        if self.eta <= 0:
            raise DomainError(f"eta має бути додатним: {self.eta}")
        if not self.nu < self.eta:
            raise DomainError(f"потрібно nu < eta: nu={self.nu}, eta={self.eta}")
        if not (math.isfinite(self.rho) and 0.0 <= self.rho <= 1.0):
            raise DomainError(f"rho поза межами [0, 1]: {self.rho}")
        if self.max_reflections is not None and (
            isinstance(self.max_reflections, bool)
            or not isinstance(self.max_reflections, (int, np.integer))
            or self.max_reflections < 0
        ):
            raise DomainError(f"max_reflections має бути цілим ≥ 0 або None: {self.max_reflections}")

    @property
    def is_infinite(self) -> bool:
        return self.max_reflections is None

    def with_max_reflections(self, n: Optional[int]) -> "BarrierParams":
        """Копія з іншим лімітом перемикань."""
        return replace(self, max_reflections=n)

    def scaled(self, factor: float) -> "BarrierParams":
        """Копія з бар'єрами, помноженими на factor (зміна одиниць часу)."""
        if factor <= 0:
            raise DomainError(f"масштаб має бути додатним: {factor}")
        return replace(self, nu=self.nu * factor, eta=self.eta * factor)


@dataclass
class ReflectionLadder:
    """
    Драбина перемикань однієї траєкторії.

    alpha та u містять значення для k = 0..n_reflections + 1.
    """
    alpha: Tuple[float, ...]
    u: Tuple[float, ...]
    tau_detected: List[float] = field(default_factory=list)
    spread_at_detection: List[float] = field(default_factory=list)

    @property
    def n_reflections(self) -> int:
        """N_t: кількість перемикань до кінця сітки."""
        return len(self.tau_detected)


@dataclass
class MultiBarrierPath:
    """Одна траєкторія X, Y, драйвера B^Y та індексу режиму k на вузлах сітки."""
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    b_y: np.ndarray
    regime: np.ndarray
    ladder: ReflectionLadder


@dataclass
class MultiBarrierSample:
    """Термінальні значення для групи траєкторій."""
    x: np.ndarray
    y: np.ndarray
    n_switches: np.ndarray
    first_switch_time: np.ndarray

    @property
    def spread(self) -> np.ndarray:
        return self.x - self.y


@dataclass
class SurvivalSeries:
    """
    Частинні суми ряду Σ p_k.

    Attributes:
        terms: p_0..p_N
        partial_sums: Накопичені суми
        tail_bound: Оцінка відкинутого залишку
        n_used: Індекс останнього врахованого члена
    """
    terms: np.ndarray
    partial_sums: np.ndarray
    tail_bound: float
    n_used: int

    @property
    def value(self) -> float:
        return float(min(max(self.partial_sums[-1], 0.0), 1.0))


# ============ ПОСЛІДОВНОСТІ ============

def _check_index(name: str, k: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise DomainError(f"{name} має бути цілим: {k!r}")
    if k < 0:
        raise DomainError(f"{name} має бути ≥ 0: {k}")
    return int(k)


def _check_time(t: float) -> float:
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t має бути додатним: {t}")
    return float(t)


def _require_nondegenerate(params: BarrierParams) -> None:
    if params.rho >= 1.0:
        raise DomainError("rho = 1: формула ділить на √(1 − ρ)")


def alpha_seq(k: int, params: BarrierParams) -> float:
    """α_0 = 0; α_k = η для непарних k; α_k = ν для парних k ≥ 2."""
    k = _check_index("k", k)
    if k == 0:
        return 0.0
    return params.eta if k % 2 == 1 else params.nu


def u_seq(k: int, params: BarrierParams) -> float:
    """
    Рівень u_k, першому досягненню якого броунівським рухом рівний за законом τ_k.

    u_k = η/√(2(1+ρ)) + ((η−ν)/√2)·(⌊k/2⌋/√(1−ρ) + ⌊(k−1)/2⌋/√(1+ρ)), u_0 = 0.
    """
    k = _check_index("k", k)
    _require_nondegenerate(params)
    if k == 0:
        return 0.0
    rho = params.rho
    gap = (params.eta - params.nu) / math.sqrt(2.0)
    return (
        params.eta / math.sqrt(2.0 * (1.0 + rho))
        + gap * ((k // 2) / math.sqrt(1.0 - rho) + ((k - 1) // 2) / math.sqrt(1.0 + rho))
    )


def stopping_time_cdf(k: int, t: float, params: BarrierParams) -> float:
    """P(τ_k ≤ t) = 2Φ(−u_k/√t) для k ≥ 1."""
    k = _check_index("k", k)
    if k == 0:
        raise DomainError("τ_0 = 0 детерміновано, закон визначено для k ≥ 1")
    t = _check_time(t)
    return float(2.0 * special.ndtr(-u_seq(k, params) / math.sqrt(t)))


# ============ РЯД ФУНКЦІЇ ВИЖИВАННЯ ============

def p_term(
    n: int,
    t: float,
    x: float,
    params: BarrierParams,
    printed_indexing: bool = False
) -> float:
    """
    Член p_n(t, x) ряду P(X_t − Yⁿ_t ≥ x) = Σ_{k≤n} p_k(t, x).

    p_0 = Φ(−x/√(2(1+ρ)t)). Для n ≥ 1 p_n: приріст ймовірності при
    n-му перемиканні: рівень α_n, зсув u_n/√t, дисперсія спреду до перемикання
    2(1+(−1)^{n−1}ρ)t і після нього 2(1+(−1)^n ρ)t.

    Args:
        n: Номер члена (≥ 0)
        t: Час (> 0)
        x: Поріг спреду
        params: Драбина бар'єрів (ρ < 1)
        printed_indexing: Використати зсунуту індексацію через α_{n+1}, u_{n+1}

    Returns:
        p_n(t, x); |p_n| ≤ 2Φ(−u_n/√t)
    """
    n = _check_index("n", n)
    t = _check_time(t)
    if not math.isfinite(x):
        raise DomainError(f"x має бути скінченним: {x}")
    _require_nondegenerate(params)
    rho = params.rho

    if n == 0:
        return float(special.ndtr(-x / math.sqrt(2.0 * (1.0 + rho) * t)))

    if printed_indexing:
        logger.warning(
            "p_term: shifted (alpha_{n+1}, u_{n+1}) indexing requested; "
            "partial sums then skip the first switch increment"
        )
    m = n + 1 if printed_indexing else n
    level = alpha_seq(m, params)
    shift = u_seq(m, params) / math.sqrt(t)
    sign_before = -1.0 if m % 2 == 0 else 1.0
    a_before = (x - level) / math.sqrt(2.0 * (1.0 + sign_before * rho) * t)
    a_after = (x - level) / math.sqrt(2.0 * (1.0 - sign_before * rho) * t)

    if x < level:
        return phi_difference(a_before - shift, a_after - shift)
    return phi_difference(a_before + shift, a_after + shift)


def _checked_probability(total: float, what: str) -> float:
    slack = config.PROBABILITY_SLACK
    if total < -slack or total > 1.0 + slack:
        raise ConsistencyError(f"{what} поза [0, 1]: {total!r}")
    return min(max(total, 0.0), 1.0)


def survival_mb(
    n: int,
    t: float,
    x: float,
    params: BarrierParams,
    printed_indexing: bool = False
) -> float:
    """
    P(X_t − Yⁿ_t ≥ x) як скінченна сума p_0 + … + p_n.

    Raises:
        ConsistencyError: сума поза [−1e-10, 1 + 1e-10]
    """
    n = _check_index("n", n)
    terms = [p_term(k, t, x, params, printed_indexing=printed_indexing) for k in range(n + 1)]
    return _checked_probability(math.fsum(terms), f"survival_mb(n={n}, t={t}, x={x})")


def tail_bound(k: int, t: float, params: BarrierParams, tol: float) -> float:
    """
    Оцінка залишку Σ_{j>k} p_j через Σ_{j>k} 2Φ(−u_j/√t).

    Сумує, доки окремий доданок не стане меншим за tol/10.
    """
    k = _check_index("k", k)
    t = _check_time(t)
    total = 0.0
    j = k + 1
    while True:
        bound = float(2.0 * special.ndtr(-u_seq(j, params) / math.sqrt(t)))
        total += bound
        if bound < tol / 10.0:
            return total
        j += 1
        if j - k > config.MAX_SERIES_TERMS:
            raise ConsistencyError(f"оцінка хвоста не збіглась за {config.MAX_SERIES_TERMS} членів")


def survival_mb_inf(
    t: float,
    x: float,
    params: BarrierParams,
    tol: Optional[float] = None
) -> SurvivalSeries:
    """
    P(X_t − Y_t ≥ x) для необмеженої кількості перемикань.

    Члени додаються, доки оцінка хвоста не стане меншою за tol.

    Raises:
        DomainError: tol ≤ 0 або ρ = 1
        ConsistencyError: відсутність збіжності або сума поза [0, 1]
    """
    tol = config.SERIES_TOLERANCE if tol is None else tol
    if not tol > 0:
        raise DomainError(f"tol має бути додатним: {tol}")
    t = _check_time(t)
    _require_nondegenerate(params)

    terms = []
    k = 0
    while True:
        terms.append(p_term(k, t, x, params))
        remainder = tail_bound(k, t, params, tol)
        if remainder < tol:
            break
        k += 1
        if k > config.MAX_SERIES_TERMS:
            raise ConsistencyError(f"ряд не збігся за {config.MAX_SERIES_TERMS} членів")

    terms_array = np.array(terms)
    partial_sums = np.cumsum(terms_array)
    _checked_probability(float(partial_sums[-1]), f"survival_mb_inf(t={t}, x={x})")
    logger.debug(f"Series at t={t}, x={x}: {k + 1} terms, tail bound {remainder:.3e}")
    return SurvivalSeries(
        terms=terms_array,
        partial_sums=partial_sums,
        tail_bound=remainder,
        n_used=k
    )


def survival_curve(
    xs: Sequence[float],
    t: float,
    params: BarrierParams,
    n: Optional[int] = None
) -> np.ndarray:
    """Аналітична крива виживання для n перемикань (None = необмежено)."""
    if n is None:
        return np.array([survival_mb_inf(t, float(x), params).value for x in xs])
    return np.array([survival_mb(n, t, float(x), params) for x in xs])


# ============ СИМУЛЯЦІЯ ============

@dataclass
class _BlockResult:
    x: np.ndarray
    y: np.ndarray
    n_switches: np.ndarray
    first_switch_time: np.ndarray
    x_paths: Optional[np.ndarray] = None
    y_paths: Optional[np.ndarray] = None
    regimes: Optional[np.ndarray] = None
    y_increments: Optional[np.ndarray] = None
    events: List[Tuple[int, int, float]] = field(default_factory=list)


def _run_block(
    params: BarrierParams,
    grid: TimeGrid,
    dx: np.ndarray,
    dby: np.ndarray,
    bridge_uniforms: Optional[np.ndarray] = None,
    keep_paths: bool = False,
    keep_increments: bool = False
) -> _BlockResult:
    """
    Покрокова симуляція блоку траєкторій.

    На кроці n: ΔY = ρ(−1)^{k+1}ΔB^X + √(1−ρ²)ΔB^Y; далі, якщо k менше ліміту
    і спред перетнув α_{k+1} (≥ η для парного k, ≤ ν для непарного), k += 1.
    Спред не підтягується до бар'єра: перестрибування зберігається.
    """
    n_paths, n_steps = dx.shape
    rho = params.rho
    noise_scale = math.sqrt((1.0 - rho) * (1.0 + rho))
    cap = config.MAX_SWITCHES_PER_PATH if params.is_infinite else params.max_reflections
    variance = (2.0 * (1.0 + rho) * grid.dt, 2.0 * (1.0 - rho) * grid.dt)

    x = np.zeros(n_paths)
    y = np.zeros(n_paths)
    k = np.zeros(n_paths, dtype=np.int64)
    first = np.full(n_paths, np.nan)

    result = _BlockResult(x=x, y=y, n_switches=k, first_switch_time=first)
    if keep_paths:
        result.x_paths = np.zeros((n_paths, n_steps + 1))
        result.y_paths = np.zeros((n_paths, n_steps + 1))
        result.regimes = np.zeros((n_paths, n_steps + 1), dtype=np.int64)
    if keep_increments:
        result.y_increments = np.empty((n_paths, n_steps))

    for n in range(n_steps):
        even = (k % 2) == 0
        dy = np.where(even, -rho, rho) * dx[:, n] + noise_scale * dby[:, n]
        spread_before = x - y
        x += dx[:, n]
        y += dy
        spread = x - y

        beyond = np.where(even, spread >= params.eta, spread <= params.nu)
        if bridge_uniforms is not None:
            gap_before = np.where(even, params.eta - spread_before, spread_before - params.nu)
            gap_after = np.where(even, params.eta - spread, spread - params.nu)
            step_var = np.where(even, variance[0], variance[1])
            inside = (gap_before > 0) & (gap_after > 0) & (step_var > 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                prob = np.where(inside, np.exp(-2.0 * gap_before * gap_after / step_var), 0.0)
            beyond |= bridge_uniforms[:, n] < prob

        switch = beyond & (k < cap)
        if switch.any():
            k += switch
            first[switch & np.isnan(first)] = (n + 1) * grid.dt
            if keep_paths:
                for p in np.flatnonzero(switch):
                    result.events.append((int(p), n + 1, float(spread[p])))

        if keep_paths:
            result.x_paths[:, n + 1] = x
            result.y_paths[:, n + 1] = y
            result.regimes[:, n + 1] = k
        if keep_increments:
            result.y_increments[:, n] = dy

    if params.is_infinite and (k >= cap).any():
        raise ConsistencyError(f"перевищено ліміт {cap} перемикань на траєкторію")
    return result


def coupled_increments(
    params: BarrierParams,
    grid: TimeGrid,
    dx: np.ndarray,
    dby: np.ndarray,
    bridge_uniforms: Optional[np.ndarray] = None
) -> np.ndarray:
    """Прирости Y (n_paths, n_steps) за заданими приростами B^X, B^Y."""
    _require_simulable(params)
    return _run_block(params, grid, dx, dby, bridge_uniforms, keep_increments=True).y_increments


def _require_simulable(params: BarrierParams) -> None:
    if params.rho >= 1.0:
        raise DomainError("симуляція потребує rho < 1 (вироджена дифузія спреду)")


def _bridge_block(seed: int, indices: Sequence[int], n_steps: int) -> np.ndarray:
    return np.stack([keyed_uniforms(seed, (int(i), _BRIDGE_DRIVER), n_steps) for i in indices])


def simulate_mb(
    params: BarrierParams,
    grid: TimeGrid,
    seed: int,
    path_index: int,
    bridge_correction: bool = False
) -> MultiBarrierPath:
    """
    Симулює одну траєкторію (X, Y) з драбиною перемикань.

    Args:
        params: Драбина бар'єрів з лімітом перемикань
        grid: Часова сітка
        seed: Seed експерименту
        path_index: Номер траєкторії
        bridge_correction: Виявляти перетин бар'єра між вузлами

    Returns:
        MultiBarrierPath з X, Y = Y^{N_t}, B^Y, режимами та драбиною
    """
    _require_simulable(params)
    increments = make_increment_block(grid, len(DRIVER_LABELS), seed, [path_index])
    uniforms = _bridge_block(seed, [path_index], grid.n_steps) if bridge_correction else None
    block = _run_block(params, grid, increments[0], increments[1], uniforms, keep_paths=True)

    tau = [step * grid.dt for _, step, _ in block.events]
    spreads = [spread for _, _, spread in block.events]
    depth = len(tau) + 1
    ladder = ReflectionLadder(
        alpha=tuple(alpha_seq(j, params) for j in range(depth + 1)),
        u=tuple(u_seq(j, params) for j in range(depth + 1)),
        tau_detected=tau,
        spread_at_detection=spreads
    )
    b_y = np.zeros(grid.n_steps + 1)
    np.cumsum(increments[1, 0], out=b_y[1:])
    return MultiBarrierPath(
        times=grid.times,
        x=block.x_paths[0],
        y=block.y_paths[0],
        b_y=b_y,
        regime=block.regimes[0],
        ladder=ladder
    )


def simulate_mb_terminal(
    params: BarrierParams,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    bridge_correction: bool = False,
    threads: int = 1,
    chunk_size: Optional[int] = None
) -> MultiBarrierSample:
    """Термінальні X, Y, кількість перемикань і перший момент перемикання для n_paths траєкторій."""
    _require_simulable(params)

    def worker(indices: np.ndarray) -> Tuple[np.ndarray, ...]:
        increments = make_increment_block(grid, len(DRIVER_LABELS), seed, indices)
        uniforms = _bridge_block(seed, indices, grid.n_steps) if bridge_correction else None
        block = _run_block(params, grid, increments[0], increments[1], uniforms)
        return block.x, block.y, block.n_switches, block.first_switch_time

    logger.info(
        f"Simulating multi-barrier model: nu={params.nu}, eta={params.eta}, rho={params.rho}, "
        f"n={'inf' if params.is_infinite else params.max_reflections}, T={grid.t_end}, paths={n_paths}"
    )
    x, y, n_switches, first = map_path_chunks(n_paths, worker, chunk_size=chunk_size, threads=threads)
    return MultiBarrierSample(x=x, y=y, n_switches=n_switches, first_switch_time=first)


def simulate_mb_trajectories(
    params: BarrierParams,
    grid: TimeGrid,
    seed: int,
    n_paths: int,
    bridge_correction: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """Повні траєкторії X та Y, форма (n_paths, n_steps + 1)."""
    _require_simulable(params)
    indices = np.arange(n_paths)
    increments = make_increment_block(grid, len(DRIVER_LABELS), seed, indices)
    uniforms = _bridge_block(seed, indices, grid.n_steps) if bridge_correction else None
    block = _run_block(params, grid, increments[0], increments[1], uniforms, keep_paths=True)
    return block.x_paths, block.y_paths
