"""
Фасад запуску експериментів: криві виживання, копули, траєкторії, ціни опціонів
та відтворення пресетів із записом CSV/JSON.

Архітектурний патерн: Facade Pattern.
Відповідальність: вибір аналітичної формули та симулятора за типом моделі,
агрегація результатів і запис артефактів. CLI працює лише з цим класом.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import special

from core.config import config
from core.errors import ConfigurationError
from core.experiment import ExperimentConfig
from core.gauss_kernels import gaussian_copula_grid
from core.path_engine import make_increment_block, map_path_chunks
from core.presets import Preset, get_preset
from models import commodities, local_corr, multibarrier, reflection_copula
from models.commodities import ConstantCorrelation, Product, ProductPaths
from utils.estimators import (
    EmpiricalCurve,
    MCEstimate,
    empirical_copula,
    empirical_survival,
    intervals_overlap,
    mc_estimate,
)
from utils.file_exporters import ExportFormat, FileExporter, generate_filename

logger = logging.getLogger(__name__)


@dataclass
class SurvivalTable:
    """Аналітична (якщо є) та емпірична криві виживання на спільних абсцисах."""
    label: str
    curve: EmpiricalCurve
    analytic: Optional[np.ndarray] = None

    def rows(self) -> List[Tuple]:
        """Рядки у порядку config.SURVIVAL_COLUMNS; відсутня аналітика: порожній рядок."""
        rows = []
        for i, x in enumerate(self.curve.abscissae):
            analytic = "" if self.analytic is None else float(self.analytic[i])
            rows.append((
                float(x), analytic, float(self.curve.values[i]),
                float(self.curve.band_low[i]), float(self.curve.band_high[i]),
            ))
        return rows


@dataclass
class CopulaResult:
    """Емпірична копула та (за наявності) закрита формула на тій самій сітці."""
    label: str
    empirical: np.ndarray
    analytic: Optional[np.ndarray] = None

    @property
    def max_abs_error(self) -> Optional[float]:
        if self.analytic is None:
            return None
        return float(np.max(np.abs(self.empirical - self.analytic)))


@dataclass
class PriceRow:
    """Оцінка ціни спред-опціону для одного продукту."""
    product: str
    model: str
    estimate: MCEstimate
    reference: Optional[Tuple[float, float]] = None

    @property
    def overlap(self) -> Optional[bool]:
        if self.reference is None:
            return None
        return intervals_overlap(self.estimate.ci_low, self.estimate.ci_high, *self.reference)

    def row(self) -> Tuple:
        """Рядок у порядку config.PRICE_COLUMNS."""
        low, high = self.reference if self.reference else ("", "")
        overlap = "" if self.overlap is None else str(self.overlap).lower()
        return (
            self.product, self.model, self.estimate.mean, self.estimate.stderr,
            self.estimate.ci_low, self.estimate.ci_high, low, high, overlap,
        )

    def to_dict(self) -> dict:
        payload = self.estimate.to_dict()
        payload.update({"product": self.product, "model": self.model})
        if self.reference is not None:
            payload["reference"] = list(self.reference)
            payload["overlap"] = self.overlap
        return payload


@dataclass
class ReproduceSummary:
    """Підсумок відтворення пресету (серіалізується в summary.json)."""
    preset: str
    task: str
    seed: int
    n_paths: Dict[str, int] = field(default_factory=dict)
    files: List[str] = field(default_factory=list)
    runtimes: Dict[str, float] = field(default_factory=dict)
    results: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "task": self.task,
            "seed": self.seed,
            "n_paths": self.n_paths,
            "files": self.files,
            "runtimes_seconds": self.runtimes,
            "results": self.results,
        }


# ============ ДОПОМІЖНІ СИМУЛЯЦІЇ ============

def constant_survival(xs: np.ndarray, t: float, rho: float) -> np.ndarray:
    """P(X_t − Y_t ≥ x) для пари зі сталою кореляцією: Φ(−x/√(2(1−ρ)t))."""
    xs = np.asarray(xs, dtype=float)
    variance = 2.0 * (1.0 - rho) * t
    if variance <= 0.0:
        return (xs <= 0.0).astype(float)
    return special.ndtr(-xs / math.sqrt(variance))


def _constant_terminal(experiment: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    model: ConstantCorrelation = experiment.model
    grid = experiment.grid

    def worker(indices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        increments = make_increment_block(grid, 2, experiment.seed, indices)
        dy = model.couple(increments[0], increments[1], grid)
        return increments[0].sum(axis=1), dy.sum(axis=1)

    return map_path_chunks(experiment.n_paths, worker, threads=experiment.threads)


class ExperimentRunner:
    """
    Виконує експерименти та пише артефакти.

    Усі методи детерміновані за заданим seed і не залежать від threads.
    """

    def __init__(self, exporter: Optional[FileExporter] = None):
        self.exporter = exporter or FileExporter()
        logger.info("ExperimentRunner initialized")

    # ============ ТЕРМІНАЛЬНІ ПАРИ ============

    def terminal_pairs(self, experiment: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
        """Термінальні (X_T, Y_T) для некомодитної моделі."""
        kind, model, grid = experiment.model_kind, experiment.model, experiment.grid
        bridge = experiment.outputs.bridge_correction
        if kind == "single_barrier":
            return reflection_copula.simulate_single_barrier_terminal(
                model, grid, experiment.seed, experiment.n_paths,
                bridge_correction=bridge, threads=experiment.threads,
            )
        if kind == "multibarrier":
            sample = multibarrier.simulate_mb_terminal(
                model, grid, experiment.seed, experiment.n_paths,
                bridge_correction=bridge, threads=experiment.threads,
            )
            return sample.x, sample.y
        if kind == "local":
            sample = local_corr.simulate_local_terminal(
                model, grid, experiment.seed, experiment.n_paths, threads=experiment.threads,
            )
            return sample.x, sample.y
        if kind == "constant":
            return _constant_terminal(experiment)
        raise ConfigurationError(f"модель '{kind}' не має пари (X, Y)", field="model.kind")

    def analytic_survival(self, experiment: ExperimentConfig, xs: np.ndarray) -> Optional[np.ndarray]:
        """Закрита формула виживання спреду або None для локальної кореляції."""
        kind, model, t = experiment.model_kind, experiment.model, experiment.grid.t_end
        if kind == "single_barrier":
            return np.asarray(reflection_copula.survival_diff(xs, replace(model, t=t)))
        if kind == "multibarrier":
            if model.rho >= 1.0:
                return None
            return multibarrier.survival_curve(xs, t, model, model.max_reflections)
        if kind == "constant":
            return constant_survival(xs, t, model.rho)
        return None

    # ============ ОПЕРАЦІЇ ============

    def run_survival(self, experiment: ExperimentConfig) -> List[SurvivalTable]:
        """
        Криві виживання спреду.

        Для товарної моделі: по одній таблиці на продукт з outputs.products
        (аналітичний стовпчик порожній). Інакше: одна таблиця з аналітикою,
        якщо модель її допускає.
        """
        xs = np.sort(np.asarray(experiment.outputs.xs, dtype=float))
        if experiment.model_kind == "commodity":
            samples = self._simulate_products(experiment)
            return [
                SurvivalTable(label=label, curve=empirical_survival(sample.spread, xs, experiment.level))
                for label, sample in samples.items()
            ]

        x, y = self.terminal_pairs(experiment)
        curve = empirical_survival(x - y, xs, experiment.level)
        analytic = self.analytic_survival(experiment, xs)
        logger.info(f"Survival curve ready: model={experiment.model_kind}, points={xs.size}")
        return [SurvivalTable(label=experiment.model_kind, curve=curve, analytic=analytic)]

    def run_copula(self, experiment: ExperimentConfig, label: Optional[str] = None) -> CopulaResult:
        """Емпірична копула (X_T, Y_T) та закрита формула, якщо вона відома."""
        kind, model, size = experiment.model_kind, experiment.model, experiment.outputs.copula_grid
        if kind == "single_barrier":
            # Точний семплер без сітки
            x, y = reflection_copula.sample_terminal_pairs(model, experiment.n_paths, experiment.seed)
            analytic = reflection_copula.copula_grid(model, size)
        else:
            x, y = self.terminal_pairs(experiment)
            analytic = None
            if kind == "multibarrier" and model.max_reflections == 0:
                analytic = gaussian_copula_grid(-model.rho, size)
            elif kind == "constant":
                analytic = gaussian_copula_grid(model.rho, size)
        empirical = empirical_copula(np.column_stack([x, y]), size)
        return CopulaResult(label=label or kind, empirical=empirical, analytic=analytic)

    def run_components(self, experiment: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Траєкторії X та Y окремо: (times, x, y), x та y форми (n_paths, n_steps + 1)."""
        kind, model, grid = experiment.model_kind, experiment.model, experiment.grid
        if kind == "multibarrier":
            x, y = multibarrier.simulate_mb_trajectories(
                model, grid, experiment.seed, experiment.n_paths,
                bridge_correction=experiment.outputs.bridge_correction,
            )
        elif kind == "local":
            x, y = local_corr.simulate_local_trajectories(model, grid, experiment.seed, experiment.n_paths)
        else:
            raise ConfigurationError(
                f"траєкторії доступні для multibarrier та local, отримано '{kind}'", field="model.kind"
            )
        return grid.times, x, y

    def run_trajectories(self, experiment: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
        """Траєкторії спреду X − Y, форма (n_paths, n_steps + 1)."""
        times, x, y = self.run_components(experiment)
        return times, x - y

    def run_product_trajectories(self, experiment: ExperimentConfig) -> Dict[str, ProductPaths]:
        """
        Траєкторії цін електроенергії та вугілля для кожного продукту з outputs.products.

        Raises:
            ConfigurationError: Модель не товарна
        """
        self._require_commodity(experiment, "траєкторії продуктів")
        products = [Product.parse(label) for label in experiment.outputs.products]
        return commodities.simulate_product_paths(
            experiment.model, products, experiment.n_paths, experiment.grid, experiment.seed
        )

    @staticmethod
    def _require_commodity(experiment: ExperimentConfig, what: str) -> None:
        if experiment.model_kind != "commodity":
            raise ConfigurationError(
                f"{what} потребує моделі 'commodity', отримано '{experiment.model_kind}'",
                field="model.kind"
            )

    def run_price(
        self,
        experiment: ExperimentConfig,
        references: Optional[Dict[str, Tuple[float, float]]] = None,
        model_label: Optional[str] = None
    ) -> List[PriceRow]:
        """
        Ціни спред-опціонів для кожного продукту з outputs.products на спільних траєкторіях.

        Raises:
            ConfigurationError: Модель не товарна
        """
        self._require_commodity(experiment, "ціноутворення")
        setup = experiment.model
        references = references or {}
        rows = []
        for label, sample in self._simulate_products(experiment).items():
            payoff = commodities.spread_payoff(sample, setup.strike)
            estimate = mc_estimate(payoff, experiment.level, seed=experiment.seed)
            rows.append(PriceRow(
                product=label, model=model_label or setup.dependence.name,
                estimate=estimate, reference=references.get(label),
            ))
            logger.info(f"Price {label}: {estimate.mean:.4f} [{estimate.ci_low:.4f}, {estimate.ci_high:.4f}]")
        return rows

    def _simulate_products(self, experiment: ExperimentConfig) -> Dict[str, commodities.ProductSample]:
        products = [Product.parse(label) for label in experiment.outputs.products]
        return commodities.simulate_products(
            experiment.model, products, experiment.evaluation_time,
            experiment.n_paths, experiment.grid, experiment.seed, threads=experiment.threads,
        )

    # ============ ВІДТВОРЕННЯ ============

    def run_reproduce(
        self,
        preset_name: str,
        out_dir: Path,
        seed: Optional[int] = None,
        n_paths: Optional[int] = None,
        dt: Optional[float] = None,
        threads: Optional[int] = None,
        level: Optional[float] = None
    ) -> ReproduceSummary:
        """
        Виконує всі запуски пресету і пише CSV-файли та summary.json у out_dir/<preset>.

        Raises:
            ConfigurationError: Невідомий пресет або некоректні перевизначення
        """
        preset = get_preset(preset_name)
        target = Path(out_dir) / preset.name
        target.mkdir(parents=True, exist_ok=True)

        effective_seed = config.DEFAULT_SEED if seed is None else seed
        summary = ReproduceSummary(preset=preset.name, task=preset.task, seed=effective_seed)

        logger.info("=" * 60)
        logger.info(f"Reproducing preset '{preset.name}': {len(preset.runs)} run(s), seed={effective_seed}")
        logger.info("=" * 60)

        for run in preset.runs:
            experiment = run.experiment.with_overrides(
                seed=effective_seed, n_paths=n_paths, dt=dt, threads=threads, level=level
            )
            started = time.perf_counter()
            result = self._run_task(preset, run.label, experiment, target, summary)
            summary.runtimes[run.label] = round(time.perf_counter() - started, 3)
            summary.n_paths[run.label] = experiment.n_paths
            summary.results[run.label] = result
            logger.info(f"Run '{run.label}' finished in {summary.runtimes[run.label]:.1f}s")

        self._write(target, "summary", ExportFormat.JSON, self.exporter.export_json(summary.to_dict()), summary)
        logger.info(f"Preset '{preset.name}' done: {len(summary.files)} file(s) in {target}")
        return summary

    def _write(self, target: Path, base_name: str, fmt: str, data: bytes, summary: ReproduceSummary) -> None:
        name = generate_filename(base_name, fmt)
        (target / name).write_bytes(data)
        summary.files.append(name)
        logger.debug(f"Wrote {target / name}")

    def _run_task(
        self,
        preset: Preset,
        label: str,
        experiment: ExperimentConfig,
        target: Path,
        summary: ReproduceSummary
    ) -> object:
        as_csv = ExportFormat.CSV
        if preset.task == "copula":
            copula = self.run_copula(experiment, label)
            self._write(target, f"{label}_copula_empirical", as_csv,
                        self.exporter.export_copula_csv(copula.empirical), summary)
            if copula.analytic is not None:
                self._write(target, f"{label}_copula_analytic", as_csv,
                            self.exporter.export_copula_csv(copula.analytic), summary)
            return {"grid_size": int(copula.empirical.shape[0]), "max_abs_error": copula.max_abs_error}

        if preset.task in ("survival", "spread_survival"):
            result = {}
            for table in self.run_survival(experiment):
                name = f"{label}_survival" if preset.task == "survival" else f"{label}_{table.label}_survival"
                self._write(target, name, as_csv, self.exporter.export_survival_csv(table.rows()), summary)
                at_zero = float(empirical_survival_at(table.curve, 0.0))
                result[table.label] = {"empirical_at_0": at_zero}
            return result

        if preset.task == "trajectories":
            times, x, y = self.run_components(experiment)
            self._write(target, f"{label}_trajectories", as_csv,
                        self.exporter.export_trajectories_csv(times, x - y), summary)
            self._write(target, f"{label}_path_0_components", as_csv,
                        self.exporter.export_components_csv(times, x[0], y[0]), summary)
            return {"n_paths": int(x.shape[0]), "n_points": int(times.size)}

        if preset.task == "product_trajectories":
            result = {}
            for product, paths in self.run_product_trajectories(experiment).items():
                self._write(target, f"{label}_{product}_trajectories", as_csv,
                            self.exporter.export_product_paths_csv(paths.times, paths.elec, paths.coal), summary)
                result[product] = {
                    "electricity_at_end": paths.elec[:, -1],
                    "coal_at_end": paths.coal[:, -1],
                }
            return result

        if preset.task == "spread_options":
            rows = self.run_price(experiment, preset.references.get(label), model_label=label)
            self._write(target, f"{label}_prices", as_csv,
                        self.exporter.export_prices_csv([r.row() for r in rows]), summary)
            return {row.product: row.to_dict() for row in rows}

        raise ConfigurationError(f"невідома задача пресету '{preset.task}'", field="preset")


def empirical_survival_at(curve: EmpiricalCurve, x: float) -> float:
    """Значення кривої в найближчій абсцисі до x."""
    index = int(np.argmin(np.abs(curve.abscissae - x)))
    return float(curve.values[index])
