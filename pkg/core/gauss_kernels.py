"""
Гаусові примітиви: Φ, Φ⁻¹, двовимірна нормальна CDF Φ_ρ та інтегральні тотожності.

Відповідальність: скалярні, чисті функції, на яких побудовані закриті формули
копули, функції виживання та закони часів першого досягнення.

Алгоритм Φ_ρ: квадратура Гаусса–Лежандра для одноінтегрального подання
Дрезнера–Весоловського з кількістю вузлів, що залежить від |ρ|
(6 / 12 / 20), і окремою гілкою для |ρ| ≥ 0.925 (схема Genz, BVNU).
Точність порядку 1e-15.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from core.errors import DomainError

logger = logging.getLogger(__name__)

_TWO_PI = 2.0 * math.pi
_SQRT_TWO_PI = math.sqrt(_TWO_PI)

# Межі |ρ| для вибору кількості вузлів квадратури
_NODE_TABLE: Tuple[Tuple[float, int], ...] = ((0.3, 6), (0.75, 12), (1.0, 20))
_HIGH_CORRELATION = 0.925


# ============ ВАЛІДАЦІЯ ============

def _check_real(name: str, value: float, allow_infinite: bool = False) -> float:
    """Перевіряє, що аргумент є дійсним числом (±∞ лише за дозволом)."""
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise DomainError(f"{name} не є числом: {value!r}") from e
    if math.isnan(value):
        raise DomainError(f"{name} = NaN")
    if math.isinf(value) and not allow_infinite:
        raise DomainError(f"{name} має бути скінченним: {value}")
    return value


def _check_correlation(rho: float) -> float:
    rho = _check_real("rho", rho)
    if abs(rho) > 1.0:
        raise DomainError(f"rho поза межами [-1, 1]: {rho}")
    return rho


# ============ ОДНОВИМІРНІ ФУНКЦІЇ ============

def norm_cdf(x: float, allow_infinite: bool = False) -> float:
    """
    Φ(x), функція розподілу стандартного нормального закону.

    Args:
        x: Аргумент (скінченний; ±∞ лише з allow_infinite=True)
        allow_infinite: Дозволити ±∞ (граничні випадки копули)

    Returns:
        Φ(x) з абсолютною похибкою ~1e-16

    Raises:
        DomainError: NaN або нескінченний аргумент
    """
    x = _check_real("x", x, allow_infinite=allow_infinite)
    return float(special.ndtr(x))


def norm_cdf_inv(p: float) -> float:
    """
    Φ⁻¹(p) для p ∈ (0, 1).

    Raises:
        DomainError: p ∉ (0, 1)
    """
    p = _check_real("p", p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p має лежати в (0, 1): {p}")
    return float(special.ndtri(p))


def quantile_or_infinite(p: float) -> float:
    """Φ⁻¹(p) з продовженням Φ⁻¹(0) = −∞, Φ⁻¹(1) = +∞."""
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return float(special.ndtri(p))


def phi_difference(a: float, b: float) -> float:
    """
    Φ(a) − Φ(b) без катастрофічного скорочення у правому хвості.

    Для a, b > 0 рахуємо через хвости: Φ(−b) − Φ(−a).
    """
    if a > 0.0 and b > 0.0:
        return float(special.ndtr(-b) - special.ndtr(-a))
    return float(special.ndtr(a) - special.ndtr(b))


# ============ ДВОВИМІРНА НОРМАЛЬНА CDF ============

@lru_cache(maxsize=None)
def _legendre_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Вузли 1 + x_i на (0, 2) та ваги Гаусса–Лежандра."""
    nodes, weights = leggauss(order)
    return 1.0 + nodes, weights


def _upper_orthant(dh: float, dk: float, r: float) -> float:
    """
    P(X > dh, Y > dk) для стандартної пари з кореляцією r, |r| < 1.

    Аргументи скінченні; нескінченності обробляє bvn_cdf.
    """
    if r == 0.0:
        return float(special.ndtr(-dh) * special.ndtr(-dk))

    order = next(n for bound, n in _NODE_TABLE if abs(r) < bound)
    x, w = _legendre_rule(order)
    h, k = dh, dk
    hk = h * k

    if abs(r) < _HIGH_CORRELATION:
        hs = (h * h + k * k) / 2.0
        asr = math.asin(r) / 2.0
        sn = np.sin(asr * x)
        bvn = float(np.dot(np.exp((sn * hk - hs) / (1.0 - sn * sn)), w))
        bvn = bvn * asr / _TWO_PI + float(special.ndtr(-h) * special.ndtr(-k))
        return min(1.0, max(0.0, bvn))

    # Висока кореляція: інтегруємо по √(1−r²) з розкладом навколо r = ±1
    if r < 0.0:
        k = -k
        hk = -hk
    bvn = 0.0
    if abs(r) < 1.0:
        as_ = (1.0 - r) * (1.0 + r)
        a = math.sqrt(as_)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 80.0
        asr = -(bs / as_ + hk) / 2.0
        if asr > -100.0:
            bvn = a * math.exp(asr) * (
                1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_
            )
        if hk > -100.0:
            b = math.sqrt(bs)
            sp = _SQRT_TWO_PI * float(special.ndtr(-b / a))
            bvn -= math.exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
        a /= 2.0
        xs = (a * x) ** 2
        asr_nodes = -(bs / xs + hk) / 2.0
        mask = asr_nodes > -100.0
        xs = xs[mask]
        sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-(hk / 2.0) * xs / (1.0 + rs) ** 2) / rs
        bvn = (a * float(np.dot(np.exp(asr_nodes[mask]) * (sp - ep), w[mask])) - bvn) / _TWO_PI

    if r > 0.0:
        bvn += float(special.ndtr(-max(h, k)))
    elif h >= k:
        bvn = -bvn
    else:
        if h < 0.0:
            lower = float(special.ndtr(k) - special.ndtr(h))
        else:
            lower = float(special.ndtr(-h) - special.ndtr(-k))
        bvn = lower - bvn
    return min(1.0, max(0.0, bvn))


def bvn_cdf(x: float, y: float, rho: float) -> float:
    """
    Φ_ρ(x, y) = P(X ≤ x, Y ≤ y) для стандартної нормальної пари з кореляцією ρ.

    Args:
        x, y: Межі (±∞ дозволені та зводяться до маргінальних CDF)
        rho: Кореляція з [−1, 1]; |ρ| = 1 дає межі Фреше

    Returns:
        Φ_ρ(x, y) з абсолютною похибкою ≤ 1e-12

    Raises:
        DomainError: NaN-аргументи або |ρ| > 1
    """
    x = _check_real("x", x, allow_infinite=True)
    y = _check_real("y", y, allow_infinite=True)
    rho = _check_correlation(rho)

    if x == -math.inf or y == -math.inf:
        return 0.0
    if x == math.inf:
        return float(special.ndtr(y))
    if y == math.inf:
        return float(special.ndtr(x))
    if rho == 1.0:
        return float(special.ndtr(min(x, y)))
    if rho == -1.0:
        return max(float(special.ndtr(x) + special.ndtr(y)) - 1.0, 0.0)
    return _upper_orthant(-x, -y, rho)


# ============ ІНТЕГРАЛЬНІ ТОТОЖНОСТІ ============

def phi_affine_integral(a: float, b: float, x: float) -> float:
    """
    ∫_{−∞}^{x} Φ(a·u + b) φ(u) du у закритій формі.

    Дорівнює Φ_{−a/√(a²+1)}(b/√(a²+1), x).
    """
    a = _check_real("a", a)
    b = _check_real("b", b)
    x = _check_real("x", x, allow_infinite=True)
    scale = math.sqrt(a * a + 1.0)
    return bvn_cdf(b / scale, x, -a / scale)


# ============ ЗАКОНИ БРОУНІВСЬКОГО РУХУ ============

def _check_time(t: float) -> float:
    t = _check_real("t", t)
    if t <= 0.0:
        raise DomainError(f"t має бути додатним: {t}")
    return t


def first_passage_cdf(u: float, t: float) -> float:
    """P(τ_u ≤ t) = 2Φ(−u/√t) для першого досягнення рівня u ≥ 0."""
    u = _check_real("u", u)
    t = _check_time(t)
    if u < 0.0:
        raise DomainError(f"рівень u має бути невід'ємним: {u}")
    return float(2.0 * special.ndtr(-u / math.sqrt(t)))


def sup_joint_cdf(x: float, y: float, t: float) -> float:
    """P(B_t ≤ x, sup_{s≤t} B_s ≤ y) для y ≥ 0."""
    x = _check_real("x", x)
    y = _check_real("y", y)
    t = _check_time(t)
    if y < 0.0:
        raise DomainError(f"рівень супремуму має бути невід'ємним: {y}")
    s = math.sqrt(t)
    if x < y:
        return phi_difference(x / s, (x - 2.0 * y) / s)
    return float(2.0 * special.ndtr(y / s) - 1.0)


def inf_joint_cdf(x: float, y: float, t: float) -> float:
    """P(B_t ≤ x, inf_{s≤t} B_s ≤ y) для y ≤ 0."""
    x = _check_real("x", x)
    y = _check_real("y", y)
    t = _check_time(t)
    if y > 0.0:
        raise DomainError(f"рівень інфімуму має бути недодатним: {y}")
    s = math.sqrt(t)
    if x <= y:
        return float(special.ndtr(x / s))
    return float(2.0 * special.ndtr(y / s) - special.ndtr((2.0 * y - x) / s))


def stopped_increment_cdf(x: float, h: float, t: float) -> float:
    """
    P(B_t − B_τ ≤ x, τ ≤ t), де τ: перше досягнення рівня h > 0.

    Приріст після зупинки незалежний від τ, тому закон зводиться до Φ.
    """
    x = _check_real("x", x)
    h = _check_real("h", h)
    t = _check_time(t)
    if h <= 0.0:
        raise DomainError(f"бар'єр h має бути додатним: {h}")
    s = math.sqrt(t)
    if x < 0.0:
        return float(special.ndtr((x - h) / s))
    return float(special.ndtr((x + h) / s) - 2.0 * special.ndtr(h / s) + 1.0)


# ============ ГАУСОВА КОПУЛА ============

def gaussian_copula(u: float, v: float, rho: float) -> float:
    """C(u, v) = Φ_ρ(Φ⁻¹(u), Φ⁻¹(v)) з межами Φ⁻¹(0) = −∞, Φ⁻¹(1) = +∞."""
    for name, value in (("u", u), ("v", v)):
        value = _check_real(name, value)
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"{name} має лежати в [0, 1]: {value}")
    return bvn_cdf(quantile_or_infinite(u), quantile_or_infinite(v), rho)


def gaussian_copula_grid(rho: float, grid_size: int) -> np.ndarray:
    """Матриця C(i/g, j/g), i, j = 1..g, гаусової копули з кореляцією ρ."""
    if grid_size < 2:
        raise DomainError(f"grid_size має бути ≥ 2: {grid_size}")
    levels = np.arange(1, grid_size + 1) / grid_size
    return np.array([[gaussian_copula(u, v, rho) for v in levels] for u in levels])
