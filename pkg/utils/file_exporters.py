"""
Експорт результатів експериментів у CSV та JSON.

Архітектурна стратегія: Strategy Pattern для підтримки множини форматів.
Схеми CSV фіксовані (config.SURVIVAL_COLUMNS, config.PRICE_COLUMNS, config.COMPONENT_COLUMNS):
UTF-8, рядок заголовка, роздільник ',', десяткова крапка.
"""

import csv
import json
import logging
from datetime import datetime
from io import StringIO
from typing import Any, Iterable, Sequence

import numpy as np

from core.config import config

logger = logging.getLogger(__name__)


class ExportFormat:
    """Константи підтримуваних форматів експорту."""
    CSV = 'csv'
    JSON = 'json'


def _cell(value: Any) -> str:
    """Значення комірки: float з повною точністю, решта як рядок."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return str(value)


def _to_jsonable(value: Any) -> Any:
    """numpy-типи → вбудовані типи Python для json.dumps."""
    if isinstance(value, dict):
        return {str(k): _to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class FileExporter:
    """
    Експортер артефактів експерименту.

    Design Pattern: Facade + Strategy для різних форматів.
    Responsibility: Конвертація таблиць і словників → байти файлів.
    """

    @staticmethod
    def _export_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> bytes:
        buffer = StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
        return buffer.getvalue().encode("utf-8")

    @staticmethod
    def export_survival_csv(rows: Iterable[Sequence[Any]]) -> bytes:
        """Крива виживання: x, analytic, empirical, band_low, band_high."""
        return FileExporter._export_csv(config.SURVIVAL_COLUMNS, rows)

    @staticmethod
    def export_prices_csv(rows: Iterable[Sequence[Any]]) -> bytes:
        """Зведення цін у порядку config.PRICE_COLUMNS."""
        return FileExporter._export_csv(config.PRICE_COLUMNS, rows)

    @staticmethod
    def export_copula_csv(matrix: np.ndarray) -> bytes:
        """
        Матриця копули: заголовок 'u\\v' та рівні v = j/g, далі рядки u = i/g.
        """
        grid_size = matrix.shape[0]
        levels = np.arange(1, grid_size + 1) / grid_size
        header = ["u\\v"] + [_cell(v) for v in levels]
        rows = ([levels[i]] + list(matrix[i]) for i in range(grid_size))
        return FileExporter._export_csv(header, rows)

    @staticmethod
    def export_trajectories_csv(times: np.ndarray, paths: np.ndarray) -> bytes:
        """Траєкторії: t, path_0, …, path_{n−1}; рядок на вузол сітки."""
        header = ["t"] + [f"path_{i}" for i in range(paths.shape[0])]
        rows = ([times[k]] + list(paths[:, k]) for k in range(times.size))
        return FileExporter._export_csv(header, rows)

    @staticmethod
    def export_components_csv(times: np.ndarray, x: np.ndarray, y: np.ndarray) -> bytes:
        """Одна траєкторія по компонентах: t, x, y, spread."""
        rows = ((times[k], x[k], y[k], x[k] - y[k]) for k in range(times.size))
        return FileExporter._export_csv(config.COMPONENT_COLUMNS, rows)

    @staticmethod
    def export_product_paths_csv(times: np.ndarray, elec: np.ndarray, coal: np.ndarray) -> bytes:
        """Ціни продукту: t, electricity_i, coal_i для кожної траєкторії i."""
        header = ["t"]
        for i in range(elec.shape[0]):
            header += [f"electricity_{i}", f"coal_{i}"]
        rows = (
            [times[k]] + [value for i in range(elec.shape[0]) for value in (elec[i, k], coal[i, k])]
            for k in range(times.size)
        )
        return FileExporter._export_csv(header, rows)

    @staticmethod
    def export_json(payload: dict) -> bytes:
        """JSON з відсортованими ключами (стабільний для diff)."""
        text = json.dumps(_to_jsonable(payload), ensure_ascii=False, indent=2, sort_keys=True)
        return (text + "\n").encode("utf-8")


def generate_filename(
    base_name: str = "experiment",
    format: str = ExportFormat.CSV,
    include_timestamp: bool = False
) -> str:
    """
    Генерує ім'я файлу для експорту.

    Без timestamp ім'я детерміноване: повторний запуск перезаписує той самий файл.

    Args:
        base_name: Базова назва файлу
        format: Формат експорту
        include_timestamp: Чи додавати timestamp

    Returns:
        Згенероване ім'я файлу
    """
    if include_timestamp:
        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        return f"{base_name}_{timestamp}.{format}"
    else:
        return f"{base_name}.{format}"
