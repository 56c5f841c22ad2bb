"""
Integration tests для ExperimentRunner: криві, копули, ціни та пресети.

Запуск:
    pytest test/test_runner.py -v
"""

import json

import numpy as np
import pytest

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from core.errors import ConfigurationError
from core.experiment import ExperimentConfig, OutputConfig, parse_experiment
from core.path_engine import TimeGrid
import core.runner as runner_module
from core.runner import ExperimentRunner, constant_survival, empirical_survival_at
from models.commodities import ConstantCorrelation
from models.multibarrier import BarrierParams
from models.reflection_copula import SingleBarrierParams


# ============ FIXTURES ============

@pytest.fixture
def runner():
    return ExperimentRunner()


@pytest.fixture
def reflection_experiment():
    """Відбиття без повернення: n = 0."""
    return ExperimentConfig(
        model_kind="multibarrier", model=BarrierParams(0.0, 0.5, 0.9, 0),
        grid=TimeGrid(1.0, 0.01), n_paths=2000, seed=11,
        outputs=OutputConfig(xs=(-1.0, 0.0, 1.0), copula_grid=5),
    )


@pytest.fixture
def frozen_market_doc():
    """Ринок без волатильності: f^E = 120, H·f^C = 100."""
    frozen = {"sigma_s": 0.0, "alpha_s": 1.0, "sigma_l": 0.0}
    return {
        "model": {
            "kind": "commodity", "elec": frozen, "coal": frozen,
            "f0_elec": 120, "f0_coal": 100, "heat_rate": 1.0,
            "dependence": {"kind": "constant", "rho": 0.3},
        },
        "grid": {"t_end": 0.2, "dt": 1.0 / 365.0},
        "n_paths": 50,
        "seed": 5,
        "outputs": {"products": ["Spot", "1MAH"], "xs": [0.0, 25.0]},
    }


class TestSurvival:
    """Тести для run_survival."""

    def test_reflection_analytic_column(self, runner, reflection_experiment):
        """Тест: n = 0, x = 0 → аналітика рівно 1/2 за симетрією."""
        tables = runner.run_survival(reflection_experiment)

        assert len(tables) == 1
        table = tables[0]
        assert table.analytic[1] == pytest.approx(0.5, abs=1e-12)
        assert table.curve.band_low[1] <= 0.5 + 0.05 and table.curve.band_high[1] >= 0.5 - 0.05
        assert [row[0] for row in table.rows()] == [-1.0, 0.0, 1.0]

    def test_constant_model(self, runner):
        """Тест: стала кореляція → Φ(−x/√(2(1−ρ)t))."""
        experiment = ExperimentConfig(
            model_kind="constant", model=ConstantCorrelation(0.5), grid=TimeGrid(1.0, 0.1),
            n_paths=5000, seed=2, outputs=OutputConfig(xs=(0.0, 1.0)),
        )

        table = runner.run_survival(experiment)[0]

        np.testing.assert_allclose(table.analytic, constant_survival(np.array([0.0, 1.0]), 1.0, 0.5))
        assert table.curve.values[1] == pytest.approx(table.analytic[1], abs=0.03)

    def test_perfect_correlation(self):
        """Тест: ρ = 1 → спред вироджений у нулі."""
        np.testing.assert_array_equal(constant_survival(np.array([-0.1, 0.0, 0.1]), 1.0, 1.0), [1.0, 1.0, 0.0])

    def test_single_barrier_analytic(self, runner):
        """Тест: аналітика з одним бар'єром у межах [0, 1] і не зростає."""
        experiment = ExperimentConfig(
            model_kind="single_barrier", model=SingleBarrierParams(0.25, 0.9, 1.0),
            grid=TimeGrid(1.0, 0.01), n_paths=500, seed=1,
            outputs=OutputConfig(xs=(-2.0, 0.0, 2.0), bridge_correction=True),
        )

        table = runner.run_survival(experiment)[0]

        assert np.all(np.diff(table.analytic) <= 0)
        assert table.analytic[1] == pytest.approx(0.698, abs=0.005)

    def test_local_has_no_analytic(self, runner):
        """Тест: локальна кореляція → аналітичний стовпчик порожній."""
        experiment = parse_experiment({
            "model": {"kind": "local", "rho_min": -0.5, "rho_max": 0.5, "nu": 0, "eta": 1},
            "grid": {"t_end": 1.0, "dt": 0.1}, "n_paths": 100,
        })

        table = runner.run_survival(experiment)[0]

        assert table.analytic is None
        assert table.rows()[0][1] == ""

    def test_commodity_tables_per_product(self, runner, frozen_market_doc):
        """Тест: одна таблиця на продукт; f^E − H·f^C = 20 для всіх траєкторій."""
        tables = runner.run_survival(parse_experiment(frozen_market_doc))

        assert [t.label for t in tables] == ["Spot", "1MAH"]
        for table in tables:
            np.testing.assert_array_equal(table.curve.values, [1.0, 0.0])
            assert empirical_survival_at(table.curve, 0.0) == 1.0


class TestCopula:
    """Тести для run_copula."""

    def test_reflection_gaussian(self, runner, reflection_experiment):
        """Тест: n = 0 → гаусова копула з кореляцією −ρ як аналітика."""
        result = runner.run_copula(reflection_experiment)

        assert result.empirical.shape == (5, 5)
        assert result.max_abs_error < 0.05

    def test_single_barrier_exact_sampler(self, runner):
        """Тест: точний семплер узгоджений із закритою формулою."""
        experiment = ExperimentConfig(
            model_kind="single_barrier", model=SingleBarrierParams(2.0, 0.95, 1.0),
            grid=TimeGrid(1.0, 0.01), n_paths=20_000, seed=20160322,
            outputs=OutputConfig(copula_grid=10),
        )

        result = runner.run_copula(experiment, label="h_2")

        assert result.label == "h_2"
        assert result.max_abs_error < 0.02

    def test_local_no_analytic(self, runner):
        """Тест: локальна кореляція → лише емпірична копула."""
        experiment = parse_experiment({
            "model": {"kind": "local", "rho_min": -0.9, "rho_max": 0.9, "nu": 0, "eta": 0.5},
            "grid": {"t_end": 1.0, "dt": 0.1}, "n_paths": 200,
            "outputs": {"copula_grid": 4},
        })

        result = runner.run_copula(experiment)

        assert result.analytic is None and result.max_abs_error is None


class TestTrajectories:
    """Тести для run_trajectories, run_components та run_product_trajectories."""

    def test_shape(self, runner, reflection_experiment):
        """Тест: (n_paths, n_steps + 1), старт у нулі."""
        times, spreads = runner.run_trajectories(replace_paths(reflection_experiment, 7))

        assert times.shape == (101,)
        assert spreads.shape == (7, 101)
        np.testing.assert_array_equal(spreads[:, 0], 0.0)

    def test_components_give_spread(self, runner, reflection_experiment):
        """Тест: X − Y з run_components збігається з run_trajectories."""
        experiment = replace_paths(reflection_experiment, 3)

        times, x, y = runner.run_components(experiment)
        _, spreads = runner.run_trajectories(experiment)

        assert x.shape == y.shape == (3, times.size)
        np.testing.assert_array_equal(x - y, spreads)

    def test_constant_rejected(self, runner):
        """Тест: модель без траєкторій → ConfigurationError."""
        experiment = ExperimentConfig(
            model_kind="constant", model=ConstantCorrelation(0.0), grid=TimeGrid(1.0, 0.1),
        )
        with pytest.raises(ConfigurationError, match="траєкторії"):
            runner.run_trajectories(experiment)

    def test_product_trajectories(self, runner, frozen_market_doc):
        """Тест: σ = 0 → ціни продуктів сталі на кожному вузлі."""
        frozen_market_doc["n_paths"] = 2

        paths = runner.run_product_trajectories(parse_experiment(frozen_market_doc))

        assert list(paths) == ["Spot", "1MAH"]
        for sample in paths.values():
            assert sample.elec.shape == (2, sample.times.size)
            np.testing.assert_allclose(sample.elec, 120.0, rtol=1e-12)
            np.testing.assert_allclose(sample.coal, 100.0, rtol=1e-12)

    def test_product_trajectories_require_commodity(self, runner, reflection_experiment):
        """Тест: некомодитна модель → ConfigurationError."""
        with pytest.raises(ConfigurationError, match="commodity"):
            runner.run_product_trajectories(reflection_experiment)


class TestPrice:
    """Тести для run_price."""

    def test_frozen_market(self, runner, frozen_market_doc):
        """Тест: σ = 0 → ціна дорівнює (f^E − H·f^C)⁺ = 20 з нульовою похибкою."""
        rows = runner.run_price(parse_experiment(frozen_market_doc))

        assert [row.product for row in rows] == ["Spot", "1MAH"]
        for row in rows:
            assert row.estimate.mean == pytest.approx(20.0, rel=1e-12)
            assert row.estimate.stderr == 0.0
            assert row.model == "constant"
            assert row.overlap is None

    def test_reference_overlap(self, runner, frozen_market_doc):
        """Тест: референтний інтервал потрапляє у рядок CSV і JSON."""
        rows = runner.run_price(parse_experiment(frozen_market_doc), {"Spot": (19.0, 21.0)})

        spot = rows[0]
        assert spot.overlap is True
        assert spot.row()[-3:] == (19.0, 21.0, "true")
        assert spot.to_dict()["reference"] == [19.0, 21.0]
        assert rows[1].row()[-3:] == ("", "", "")

    def test_requires_commodity(self, runner, reflection_experiment):
        """Тест: некомодитна модель → ConfigurationError."""
        with pytest.raises(ConfigurationError, match="commodity"):
            runner.run_price(reflection_experiment)

    def test_strike(self, runner, frozen_market_doc):
        """Тест: страйк 25 вище спреду → ціна рівно 0."""
        frozen_market_doc["model"]["strike"] = 25.0

        rows = runner.run_price(parse_experiment(frozen_market_doc))

        assert all(row.estimate.mean == 0.0 for row in rows)


@pytest.mark.integration
class TestReproduce:
    """Тести для run_reproduce."""

    def test_writes_files(self, runner, tmp_path):
        """Тест: CSV-файли та summary.json у out/<preset>."""
        summary = runner.run_reproduce("multibarrier-copula", tmp_path, seed=3, n_paths=300, dt=0.01)

        target = tmp_path / "multibarrier-copula"
        assert "n_0_copula_analytic.csv" in summary.files
        assert "n_5_copula_empirical.csv" in summary.files
        assert summary.files[-1] == "summary.json"
        for name in summary.files:
            assert (target / name).exists()

        payload = json.loads((target / "summary.json").read_text(encoding="utf-8"))
        assert payload["seed"] == 3
        assert payload["n_paths"]["n_50"] == 300
        assert payload["results"]["n_0"]["grid_size"] == 20

    def test_threads_do_not_change_files(self, runner, tmp_path):
        """Тест: однаковий seed → однакові CSV незалежно від потоків."""
        runner.run_reproduce("local-copula", tmp_path / "serial", seed=9, n_paths=400, dt=0.01, threads=1)
        runner.run_reproduce("local-copula", tmp_path / "parallel", seed=9, n_paths=400, dt=0.01, threads=3)

        name = "local-copula/rho_-0.9_0.9_copula_empirical.csv"
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "parallel" / name).read_bytes()

    def test_multibarrier_components_file(self, runner, tmp_path):
        """Тест: поруч зі спредами пишеться X, Y, X − Y першої траєкторії."""
        summary = runner.run_reproduce("multibarrier-trajectories", tmp_path, seed=4, n_paths=3, dt=0.1)

        target = tmp_path / "multibarrier-trajectories"
        assert "n_0_trajectories.csv" in summary.files
        assert "n_50_path_0_components.csv" in summary.files

        lines = (target / "n_0_path_0_components.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "t,x,y,spread"
        assert len(lines) == 1 + 201
        t, x, y, spread = (float(v) for v in lines[-1].split(","))
        assert t == pytest.approx(20.0)
        assert spread == pytest.approx(x - y, abs=1e-12)

    def test_local_trajectories(self, runner, tmp_path):
        """Тест: пресет local-trajectories пише 50 траєкторій на [0, 20]."""
        summary = runner.run_reproduce("local-trajectories", tmp_path, seed=4, dt=0.1)

        target = tmp_path / "local-trajectories"
        header = (target / "rho_-0.9_0.9_trajectories.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header.split(",") == ["t"] + [f"path_{i}" for i in range(50)]
        assert "rho_-0.9_0.9_path_0_components.csv" in summary.files
        assert summary.results["rho_-0.9_0.9"] == {"n_paths": 50, "n_points": 201}

    def test_commodity_trajectories(self, runner, tmp_path):
        """Тест: по файлу цін на кожен продукт, один рік."""
        summary = runner.run_reproduce("commodity-trajectories", tmp_path, seed=4, dt=1.0 / 365.0)

        target = tmp_path / "commodity-trajectories"
        for product in ("Spot", "1MAH", "3MAH", "6MAH"):
            name = f"multibarrier_{product}_trajectories.csv"
            assert name in summary.files
            lines = (target / name).read_text(encoding="utf-8").splitlines()
            assert lines[0] == "t,electricity_0,coal_0"
            assert len(lines) == 1 + 366
            assert [float(v) for v in lines[1].split(",")] == pytest.approx([0.0, 100.0, 100.0])

    def test_file_names_are_generated(self, runner, tmp_path, mocker):
        """Тест: кожне ім'я файлу проходить через generate_filename."""
        spy = mocker.spy(runner_module, "generate_filename")

        summary = runner.run_reproduce("local-copula", tmp_path, seed=1, n_paths=50, dt=0.05)

        assert spy.call_count == len(summary.files)
        assert spy.spy_return == "summary.json"

    def test_unknown_preset(self, runner, tmp_path):
        """Тест: невідомий пресет → ConfigurationError з переліком."""
        with pytest.raises(ConfigurationError, match="невідомий пресет"):
            runner.run_reproduce("no-such-preset", tmp_path)


def replace_paths(experiment: ExperimentConfig, n_paths: int) -> ExperimentConfig:
    return experiment.with_overrides(n_paths=n_paths)


if __name__ == "__main__":
    pytest.main([__file__, "-v", "--tb=short"])
