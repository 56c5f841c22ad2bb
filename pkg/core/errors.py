"""
Ієрархія винятків тулкіта.

Архітектурний принцип: винятки успадковують вбудовані ValueError/RuntimeError,
тому код, що ловить стандартні типи, продовжує працювати. CLI відображає
кожен клас на власний exit code.
"""

from typing import Optional


class DomainError(ValueError):
    """Аргумент поза областю визначення формули (ймовірність, кореляція, час)."""


class ConfigurationError(ValueError):
    """
    Некоректна конфігурація експерименту або сітки.

    Args:
        message: Опис проблеми
        field: Шлях до поля у конфігурації (наприклад, "model.rho")
    """

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")


class ConsistencyError(RuntimeError):
    """Порушення внутрішнього числового інваріанту (ряд поза [0, 1], ліміт перемикань)."""
