"""
Unit tests для двофакторної моделі електроенергії та вугілля.

Архітектура тестів:
- Вироджені випадки (σ = 0) перевіряються точно
- Мартингальність та закрита форма Маргрейба → статистично (slow)

Запуск:
    pytest test/test_commodities.py -v
"""

import math

import numpy as np
import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.config import config
from core.errors import ConfigurationError, DomainError
from core.path_engine import TimeGrid
from models.commodities import (
    COAL,
    ELECTRICITY,
    BarrierClock,
    ConstantCorrelation,
    FlatCurve,
    InterpolatedCurve,
    LocalDependence,
    MarketSetup,
    MultiBarrierDependence,
    Product,
    ProductKind,
    TwoFactorParams,
    forward_path,
    make_market_drivers,
    margrabe_price,
    price_spread_option,
    product_path,
    product_price,
    simulate_product_paths,
    simulate_products,
    spread_survival,
    suggest_barrier_shift,
)
from models.local_corr import LocalCorrFn
from models.multibarrier import BarrierParams


DAILY = TimeGrid(1.0, 1.0 / 365.0)
FROZEN = TwoFactorParams(sigma_s=0.0, alpha_s=1.0, sigma_l=0.0)


# ============ FIXTURES ============

def make_market(dependence, f0_elec=100.0, f0_coal=100.0, heat_rate=1.0, frozen=False, strike=0.0):
    """Ринок з параметрами з конфігурації (або нульовими волатильностями)."""
    elec = FROZEN if frozen else TwoFactorParams.from_preset(ELECTRICITY)
    coal = FROZEN if frozen else TwoFactorParams.from_preset(COAL)
    return MarketSetup(
        elec=elec, coal=coal,
        f0_elec=FlatCurve(f0_elec), f0_coal=FlatCurve(f0_coal),
        heat_rate=heat_rate, dependence=dependence, strike=strike
    )


@pytest.fixture
def benchmark():
    """Стала кореляція 0.275."""
    return make_market(ConstantCorrelation(config.BENCHMARK_CORRELATION))


@pytest.fixture
def barrier_market():
    """Кілька бар'єрів ν = 0, η = 0.5, ρ = 0.9 у річних одиницях."""
    return make_market(MultiBarrierDependence(BarrierParams(nu=0.0, eta=0.5, rho=0.9)))


class TestTwoFactorParams:
    """Тести маргінальних параметрів."""

    def test_presets(self):
        """Тест: параметри електроенергії та вугілля з конфігурації."""
        elec = TwoFactorParams.from_preset("electricity")
        coal = TwoFactorParams.from_preset("coal")

        assert (elec.sigma_s, elec.alpha_s, elec.sigma_l) == (0.972925, 17.0363, 0.102555)
        assert (coal.sigma_s, coal.alpha_s, coal.sigma_l) == (0.112134, 2.07832, 0.092602)

    def test_unknown_preset(self):
        """Тест: невідомий товар → ConfigurationError."""
        with pytest.raises(ConfigurationError):
            TwoFactorParams.from_preset("gas")

    @pytest.mark.parametrize("sigma_s,alpha_s,sigma_l", [(-0.1, 1.0, 0.1), (0.1, 0.0, 0.1), (0.1, 1.0, math.nan)])
    def test_invalid(self, sigma_s, alpha_s, sigma_l):
        """Тест: від'ємна волатильність, α ≤ 0, NaN → DomainError."""
        with pytest.raises(DomainError):
            TwoFactorParams(sigma_s=sigma_s, alpha_s=alpha_s, sigma_l=sigma_l)

    def test_samuelson_shape(self):
        """Тест: миттєва волатильність спадає за часом до погашення."""
        elec = TwoFactorParams.from_preset(ELECTRICITY)
        values = [elec.total_volatility(tau) for tau in np.linspace(0.0, 2.0, 50)]

        assert np.all(np.diff(values) < 0)
        assert values[-1] == pytest.approx(elec.sigma_l, rel=1e-6)

    def test_integrated_variance(self):
        """Тест: Var log f(1, 1) = σ_s²(1 − e^{−2α})/(2α) + σ_l²."""
        elec = TwoFactorParams.from_preset(ELECTRICITY)
        a = elec.alpha_s
        expected = elec.sigma_s ** 2 * (1.0 - math.exp(-2.0 * a)) / (2.0 * a) + elec.sigma_l ** 2

        assert elec.integrated_log_variance(1.0, 1.0) == pytest.approx(expected, rel=1e-12)


class TestCurvesAndProducts:
    """Тести кривих та продуктів."""

    def test_flat_curve(self):
        """Тест: стала крива."""
        np.testing.assert_array_equal(FlatCurve(50.0)(np.array([0.1, 2.0])), [50.0, 50.0])
        with pytest.raises(DomainError):
            FlatCurve(0.0)

    def test_interpolated_curve(self):
        """Тест: лінійна інтерполяція, плоска за межами вузлів."""
        curve = InterpolatedCurve(maturities=(0.0, 1.0), prices=(100.0, 120.0))

        np.testing.assert_allclose(curve(np.array([-1.0, 0.5, 3.0])), [100.0, 110.0, 120.0])
        with pytest.raises(DomainError, match="зростати"):
            InterpolatedCurve(maturities=(1.0, 0.5), prices=(1.0, 1.0))

    @pytest.mark.parametrize("label,kind,months", [
        ("Spot", ProductKind.SPOT, 0),
        ("spot", ProductKind.SPOT, 0),
        ("3MAH", ProductKind.MONTH_AHEAD, 3),
        ("12mah", ProductKind.MONTH_AHEAD, 12),
    ])
    def test_parse(self, label, kind, months):
        """Тест: розбір 'Spot' та 'nMAH'."""
        product = Product.parse(label)
        assert (product.kind, product.months) == (kind, months)

    @pytest.mark.parametrize("label", ["0MAH", "forward", "MAH"])
    def test_parse_invalid(self, label):
        """Тест: некоректна назва продукту → DomainError."""
        with pytest.raises(DomainError):
            Product.parse(label)

    def test_month_ahead_window(self):
        """Тест: 2MAH у t = 0.5 → 30 денних середин вікна [t + 30д, t + 60д]."""
        maturities = Product.parse("2MAH").maturities(0.5)
        period = 30.0 / 365.0

        assert maturities.size == 30
        assert maturities[0] == pytest.approx(0.5 + period + 0.5 / 365.0)
        assert maturities[-1] == pytest.approx(0.5 + 2.0 * period - 0.5 / 365.0)

    def test_started_delivery_rejected(self):
        """Тест: фіксована поставка, що вже почалась → DomainError."""
        product = Product(ProductKind.MONTH_AHEAD, months=1, delivery_start=0.2)
        with pytest.raises(DomainError, match="почалась"):
            product.maturities(0.5)


class TestForwardPath:
    """Тести для forward_path та product_price."""

    def test_frozen_market_is_constant(self):
        """Тест: σ_s = σ_l = 0 → f(t, T) = f(0, T)."""
        setup = make_market(ConstantCorrelation(0.3), frozen=True)
        drivers = make_market_drivers(DAILY, seed=1, path_index=0)

        path = forward_path(setup, ELECTRICITY, 1.5, DAILY, drivers)

        np.testing.assert_array_equal(path, np.full(DAILY.n_steps + 1, 100.0))

    def test_positive_and_anchored(self, benchmark):
        """Тест: f(0, T) з кривої та f > 0."""
        drivers = make_market_drivers(DAILY, seed=2, path_index=0)
        for commodity in (ELECTRICITY, COAL):
            path = forward_path(benchmark, commodity, 1.2, DAILY, drivers)
            assert path[0] == pytest.approx(100.0)
            assert np.all(path > 0)

    def test_maturity_before_grid_end(self, benchmark):
        """Тест: T < t_end → DomainError."""
        drivers = make_market_drivers(DAILY, seed=2, path_index=0)
        with pytest.raises(DomainError, match="раніше"):
            forward_path(benchmark, ELECTRICITY, 0.5, DAILY, drivers)

    def test_unknown_commodity(self, benchmark):
        """Тест: невідомий товар → DomainError."""
        drivers = make_market_drivers(DAILY, seed=2, path_index=0)
        with pytest.raises(DomainError, match="невідомий товар"):
            forward_path(benchmark, "gas", 1.0, DAILY, drivers)

    @pytest.mark.parametrize("commodity", [ELECTRICITY, COAL])
    def test_single_point_product_matches_forward(self, barrier_market, commodity):
        """Тест: продукт з resolution = 1 дорівнює forward_path у єдиному погашенні."""
        drivers = make_market_drivers(DAILY, seed=3, path_index=5)
        product = Product(ProductKind.MONTH_AHEAD, months=2, resolution=1)
        maturity = float(product.maturities(1.0)[0])

        price = product_price(barrier_market, commodity, product, 1.0, drivers)
        path = forward_path(barrier_market, commodity, maturity, DAILY, drivers)

        assert price == pytest.approx(path[-1], rel=1e-10)

    def test_spot_matches_forward_at_evaluation(self, benchmark):
        """Тест: спот S_t = f(t, t)."""
        drivers = make_market_drivers(DAILY, seed=4, path_index=0)

        spot = product_price(benchmark, ELECTRICITY, Product.parse("Spot"), 1.0, drivers)
        path = forward_path(benchmark, ELECTRICITY, 1.0, DAILY, drivers)

        assert spot == pytest.approx(path[-1], rel=1e-10)

    def test_frozen_products(self):
        """Тест: σ = 0, f0 ≡ 100 → усі продукти коштують 100."""
        setup = make_market(ConstantCorrelation(0.0), frozen=True)
        drivers = make_market_drivers(DAILY, seed=1, path_index=0)
        for label in ("Spot", "1MAH", "6MAH"):
            assert product_price(setup, COAL, Product.parse(label), 0.2, drivers) == pytest.approx(100.0, abs=1e-12)


class TestProductPath:
    """Тести для product_path та simulate_product_paths."""

    @pytest.mark.parametrize("commodity", [ELECTRICITY, COAL])
    @pytest.mark.parametrize("label", ["Spot", "1MAH", "6MAH"])
    def test_nodes_match_product_price(self, barrier_market, commodity, label):
        """Тест: значення у вузлі t_k дорівнює product_price у момент t_k."""
        drivers = make_market_drivers(DAILY, seed=6, path_index=2)
        product = Product.parse(label)

        path = product_path(barrier_market, commodity, product, DAILY, drivers)

        assert path.shape == (DAILY.n_steps + 1,)
        for k in (73, 200, DAILY.n_steps):
            expected = product_price(barrier_market, commodity, product, DAILY.times[k], drivers)
            assert path[k] == pytest.approx(expected, rel=1e-9)

    def test_starts_at_initial_curve(self, benchmark):
        """Тест: у t = 0 ціна дорівнює середньому f(0, ·) по вікну поставки."""
        drivers = make_market_drivers(DAILY, seed=6, path_index=0)

        path = product_path(benchmark, ELECTRICITY, Product.parse("3MAH"), DAILY, drivers)

        assert path[0] == 100.0
        assert np.all(path > 0)

    def test_fixed_delivery_is_mean_of_forwards(self, benchmark):
        """Тест: фіксоване вікно → середнє forward_path по погашеннях вікна."""
        grid = TimeGrid(0.2, 1.0 / 365.0)
        drivers = make_market_drivers(grid, seed=7, path_index=0)
        product = Product(ProductKind.MONTH_AHEAD, months=1, resolution=5, delivery_start=0.5)

        path = product_path(benchmark, COAL, product, grid, drivers)
        forwards = [forward_path(benchmark, COAL, float(m), grid, drivers) for m in product.maturities(0.2)]

        np.testing.assert_allclose(path, np.mean(forwards, axis=0), rtol=1e-10)

    def test_started_fixed_delivery_rejected(self, benchmark):
        """Тест: поставка почалась до кінця сітки → DomainError."""
        drivers = make_market_drivers(DAILY, seed=7, path_index=0)
        product = Product(ProductKind.MONTH_AHEAD, months=1, delivery_start=0.5)

        with pytest.raises(DomainError, match="почалась"):
            product_path(benchmark, ELECTRICITY, product, DAILY, drivers)

    def test_frozen_market_paths(self):
        """Тест: σ = 0 → траєкторії всіх продуктів сталі, спред f^E − H·f^C = 20."""
        setup = make_market(ConstantCorrelation(0.5), f0_elec=120.0, frozen=True)
        grid = TimeGrid(0.1, 1.0 / 365.0)

        paths = simulate_product_paths(setup, [Product.parse("Spot"), Product.parse("1MAH")], 3, grid, seed=1)

        assert list(paths) == ["Spot", "1MAH"]
        for sample in paths.values():
            assert sample.elec.shape == sample.coal.shape == (3, grid.n_steps + 1)
            np.testing.assert_allclose(sample.spread, 20.0, atol=1e-12)

    def test_paths_use_keyed_drivers(self, barrier_market):
        """Тест: траєкторія i збігається з product_path на make_market_drivers(grid, seed, i)."""
        grid = TimeGrid(0.1, 1.0 / 365.0)
        product = Product.parse("1MAH")

        paths = simulate_product_paths(barrier_market, [product], 3, grid, seed=9)["1MAH"]
        single = product_path(barrier_market, COAL, product, grid, make_market_drivers(grid, seed=9, path_index=2))

        np.testing.assert_array_equal(paths.coal[2], single)

    def test_invalid_path_count(self, benchmark):
        """Тест: n_paths = 0 → DomainError."""
        with pytest.raises(DomainError, match="n_paths"):
            simulate_product_paths(benchmark, [Product.parse("Spot")], 0, DAILY, seed=1)


class TestDependence:
    """Тести структур залежності довгострокових драйверів."""

    def test_clock_factors(self):
        """Тест: 1/√(кроків на рік)."""
        assert BarrierClock.YEAR.to_year_factor == 1.0
        assert BarrierClock.HOUR.to_year_factor == pytest.approx(1.0 / math.sqrt(8760.0))

    def test_clock_matches_calendar(self):
        """Тест: кроки годинника узгоджені з календарем конфігурації."""
        assert BarrierClock.DAY.value == config.DAYS_PER_YEAR
        assert BarrierClock.HOUR.value == config.DAYS_PER_YEAR * config.HOURS_PER_DAY
        assert 1.0 / BarrierClock.HOUR.value == pytest.approx(config.hour_in_years())

    def test_constant_range(self):
        """Тест: |ρ| > 1 → DomainError."""
        with pytest.raises(DomainError):
            ConstantCorrelation(1.5)

    def test_zero_correlation_barrier_equals_benchmark(self):
        """Тест: кілька бар'єрів з ρ = 0 дають ті самі ціни, що й стала кореляція 0."""
        constant = make_market(ConstantCorrelation(0.0))
        barrier = make_market(MultiBarrierDependence(BarrierParams(nu=0.0, eta=0.5, rho=0.0)))
        products = [Product.parse("Spot"), Product.parse("3MAH")]

        left = simulate_products(constant, products, 1.0, 64, DAILY, seed=9)
        right = simulate_products(barrier, products, 1.0, 64, DAILY, seed=9)

        for label in ("Spot", "3MAH"):
            np.testing.assert_array_equal(left[label].spread, right[label].spread)

    def test_describe(self):
        """Тест: describe повертає параметри та годинник."""
        dependence = MultiBarrierDependence(BarrierParams(nu=170.0, eta=170.5, rho=0.9), BarrierClock.HOUR)
        local = LocalDependence(LocalCorrFn(-0.9, 0.9, 0.0, 0.5))

        assert dependence.describe()["clock"] == "HOUR"
        assert dependence.describe()["eta"] == 170.5
        assert local.describe()["shape"] == "linear"

    def test_local_dependence_runs(self):
        """Тест: локальна кореляція як структура залежності."""
        setup = make_market(LocalDependence(LocalCorrFn(-0.9, 0.9, 0.0, 0.5)))
        sample = simulate_products(setup, [Product.parse("Spot")], 0.2, 16, DAILY, seed=1)

        assert np.all(sample["Spot"].coal > 0)

    def test_threads_do_not_change_prices(self, barrier_market):
        """Тест: кількість потоків не впливає на ціни."""
        products = [Product.parse("1MAH")]
        serial = simulate_products(barrier_market, products, 1.0, 300, DAILY, seed=5, threads=1)
        parallel = simulate_products(barrier_market, products, 1.0, 300, DAILY, seed=5, threads=3)

        np.testing.assert_array_equal(serial["1MAH"].spread, parallel["1MAH"].spread)


class TestSpreadExperiments:
    """Тести функції виживання спреду та цін опціонів."""

    def test_point_mass_survival(self):
        """Тест: σ = 0 та рівні початкові ціни → S(x) = 1 для x ≤ 0, 0 для x > 0."""
        setup = make_market(ConstantCorrelation(0.0), frozen=True)

        curve = spread_survival(setup, Product.parse("3MAH"), 1.0, [-1.0, 0.0, 0.5], 100, DAILY, seed=1)

        np.testing.assert_array_equal(curve.values, [1.0, 1.0, 0.0])

    def test_out_of_the_money_is_zero(self):
        """Тест: σ = 0, f^E = 100, H·f^C = 120 → ціна рівно 0."""
        setup = make_market(ConstantCorrelation(0.0), f0_coal=60.0, heat_rate=2.0, frozen=True)

        estimate = price_spread_option(setup, Product.parse("Spot"), 1.0, 100, DAILY, seed=1)

        assert estimate.mean == 0.0
        assert estimate.stderr == 0.0

    def test_strike_applies(self):
        """Тест: σ = 0, спред 20, K = 5 → ціна 15."""
        setup = make_market(ConstantCorrelation(0.0), f0_elec=120.0, frozen=True, strike=5.0)

        estimate = price_spread_option(setup, Product.parse("Spot"), 1.0, 10, DAILY, seed=1)

        assert estimate.mean == pytest.approx(15.0, abs=1e-12)

    def test_margrabe_spot(self):
        """Тест: закрита форма для споту при ρ = 0 ≈ 8.889."""
        setup = make_market(ConstantCorrelation(0.0))
        assert margrabe_price(setup, Product.parse("Spot"), 1.0) == pytest.approx(8.889, abs=0.01)

    def test_margrabe_restrictions(self, barrier_market, benchmark):
        """Тест: Маргрейб лише для сталої кореляції та одного погашення."""
        with pytest.raises(DomainError, match="сталої кореляції"):
            margrabe_price(barrier_market, Product.parse("Spot"), 1.0)
        with pytest.raises(DomainError, match="одного погашення"):
            margrabe_price(benchmark, Product.parse("3MAH"), 1.0)

    @pytest.mark.slow
    def test_monte_carlo_matches_margrabe(self):
        """Тест: Monte Carlo ціна споту в межах 4 стандартних похибок від Маргрейба."""
        setup = make_market(ConstantCorrelation(0.0))

        estimate = price_spread_option(setup, Product.parse("Spot"), 1.0, 10_000, DAILY, seed=20160322)

        assert abs(estimate.mean - margrabe_price(setup, Product.parse("Spot"), 1.0)) <= 4.0 * estimate.stderr

    @pytest.mark.slow
    def test_martingale(self, barrier_market):
        """Тест: середні ціни продуктів збігаються з початковими в межах 4 похибок."""
        samples = simulate_products(
            barrier_market, [Product.parse(p) for p in ("Spot", "3MAH", "6MAH")],
            1.0, 10_000, DAILY, seed=20160322
        )
        for sample in samples.values():
            for prices in (sample.elec, sample.coal):
                stderr = prices.std(ddof=1) / math.sqrt(prices.size)
                assert abs(prices.mean() - 100.0) <= 4.0 * stderr

    @pytest.mark.slow
    def test_log_variance_of_spot(self, benchmark):
        """Тест: Var log(f(1,1)/f(0,1)) ≈ закрита форма."""
        sample = simulate_products(benchmark, [Product.parse("Spot")], 1.0, 10_000, DAILY, seed=7)["Spot"]
        log_ratio = np.log(sample.elec / 100.0)
        expected = benchmark.elec.integrated_log_variance(1.0, 1.0)

        assert log_ratio.var(ddof=1) == pytest.approx(expected, abs=4.0 * expected * math.sqrt(2.0 / log_ratio.size))

    @pytest.mark.slow
    @pytest.mark.integration
    def test_survival_levels(self, barrier_market, benchmark):
        """Тест: 3MAH S(0) ≈ 0.7 для кількох бар'єрів та ≈ 0.5 для бенчмарку."""
        product = Product.parse("3MAH")

        barrier = spread_survival(barrier_market, product, 1.0, [0.0], 10_000, DAILY, seed=20160322)
        constant = spread_survival(benchmark, product, 1.0, [0.0], 10_000, DAILY, seed=20160322)

        assert barrier.values[0] == pytest.approx(0.7, abs=0.05)
        assert constant.values[0] == pytest.approx(0.5, abs=0.05)

    @pytest.mark.slow
    @pytest.mark.integration
    def test_benchmark_six_month_price(self, benchmark):
        """Тест: інтервал ціни 6MAH бенчмарку перетинається з [4.60, 4.88]."""
        estimate = price_spread_option(benchmark, Product.parse("6MAH"), 1.0, 10_000, DAILY, seed=20160322)

        assert estimate.ci_low <= 4.88 and estimate.ci_high >= 4.60


class TestBarrierShift:
    """Тести евристики зсуву бар'єра."""

    def test_equal_curves(self, benchmark):
        """Тест: рівні початкові ціни → η′ = η."""
        assert suggest_barrier_shift(benchmark, 0.5, 0.1) == 0.5

    def test_shift_value(self):
        """Тест: f^E = 100, H·f^C = 120, σ = 0.1, η = 0.5 → 2.3232."""
        setup = make_market(ConstantCorrelation(0.0), f0_coal=120.0)
        assert suggest_barrier_shift(setup, 0.5, 0.1) == pytest.approx(0.5 + 10.0 * math.log(1.2), abs=1e-12)
        assert suggest_barrier_shift(setup, 0.5, 0.1) == pytest.approx(2.3232, abs=1e-4)

    def test_shift_scales_inversely_with_sigma(self):
        """Тест: подвоєння σ зменшує зсув удвічі."""
        setup = make_market(ConstantCorrelation(0.0), f0_coal=120.0)
        base = suggest_barrier_shift(setup, 0.5, 0.1) - 0.5
        doubled = suggest_barrier_shift(setup, 0.5, 0.2) - 0.5

        assert doubled == pytest.approx(base / 2.0)

    def test_hour_clock(self):
        """Тест: у годинних одиницях зсув ≈ 170.6."""
        setup = make_market(ConstantCorrelation(0.0), f0_coal=120.0)
        shifted = suggest_barrier_shift(setup, 0.5, 0.1, clock=BarrierClock.HOUR)

        assert shifted == pytest.approx(0.5 + math.log(1.2) * math.sqrt(8760.0) / 0.1, rel=1e-12)
        assert shifted == pytest.approx(171.14, abs=0.05)

    def test_invalid_sigma(self, benchmark):
        """Тест: σ ≤ 0 → DomainError."""
        with pytest.raises(DomainError, match="sigma_ref"):
            suggest_barrier_shift(benchmark, 0.5, 0.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
