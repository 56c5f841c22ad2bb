"""
Читання файлів конфігурації експериментів.

Архітектурна стратегія: Adapter Pattern для уніфікації файлових джерел.
Відповідальність: Валідація розміру та розширення, декодування UTF-8,
передача тексту парсеру core.experiment.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from core.config import config
from core.errors import ConfigurationError
from core.experiment import ExperimentConfig, parse_experiment_text

logger = logging.getLogger(__name__)


@dataclass
class ConfigReadResult:
    """
    Структурований результат читання файлу конфігурації.

    Design Pattern: Value Object для передачі даних між шарами.
    """
    text: str
    filename: str
    size_bytes: int = 0

    def __post_init__(self):
        """Автоматичний підрахунок розміру."""
        if self.size_bytes == 0:
            self.size_bytes = len(self.text.encode("utf-8"))


class ConfigFileHandler:
    """
    Обробник файлів конфігурації.

    Strategy Pattern: нові формати додаються через SUPPORTED_EXTENSIONS та окремий reader.
    """

    MAX_FILE_SIZE_BYTES = config.MAX_CONFIG_SIZE_KB * 1024

    SUPPORTED_EXTENSIONS = {'.json'}

    @classmethod
    def read_config(cls, file_path: Union[str, Path]) -> ConfigReadResult:
        """
        Читає файл конфігурації.

        Args:
            file_path: Шлях до JSON-файлу

        Returns:
            ConfigReadResult з текстом та метаданими

        Raises:
            ConfigurationError: Файл відсутній, завеликий, не JSON або не UTF-8
        """
        path = Path(file_path)

        extension = path.suffix.lower()
        if extension not in cls.SUPPORTED_EXTENSIONS:
            raise ConfigurationError(
                f"Непідтримуваний формат файлу: {extension or '(без розширення)'}. "
                f"Підтримуються: {', '.join(sorted(cls.SUPPORTED_EXTENSIONS))}",
                field="config"
            )

        cls._validate_file_size(path)

        try:
            raw = path.read_bytes()
        except OSError as e:
            raise ConfigurationError(f"не вдалося прочитати файл: {e}", field="config") from e

        try:
            text = raw.decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise ConfigurationError(
                f"файл має бути в UTF-8 (байт {e.start})", field="config"
            ) from e

        logger.info(f"Read config file {path.name} ({len(raw) / 1024:.1f} KB)")
        return ConfigReadResult(text=text, filename=path.name, size_bytes=len(raw))

    @classmethod
    def _validate_file_size(cls, path: Path) -> None:
        """Валідація наявності та розміру файлу."""
        try:
            file_size = path.stat().st_size
        except OSError as e:
            raise ConfigurationError(f"файл не знайдено: {path}", field="config") from e

        if file_size > cls.MAX_FILE_SIZE_BYTES:
            raise ConfigurationError(
                f"Файл завеликий: {file_size / 1024:.1f} KB. "
                f"Максимум: {config.MAX_CONFIG_SIZE_KB} KB",
                field="config"
            )

    @classmethod
    def load_experiment(cls, file_path: Union[str, Path]) -> ExperimentConfig:
        """Читає та розбирає конфігурацію експерименту."""
        return parse_experiment_text(cls.read_config(file_path).text)
