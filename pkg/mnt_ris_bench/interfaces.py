"""Интерфейсы MNT RIS Bench: модели канала и логгер"""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np


class ChannelModelInterface(ABC):
    """
    Интерфейс модели канала: конфигурация RIS -> матрица H

    Реализации хранят свой счетчик вычислений в атрибуте counter.
    """

    counter: Any

    @property
    @abstractmethod
    def fidelity(self) -> str:
        """Имя модели (mnt, casc, rr)"""
        pass

    @property
    @abstractmethod
    def n_ris(self) -> int:
        """Длина вектора конфигурации N_S"""
        pass

    @abstractmethod
    def evaluate(self, c: np.ndarray) -> np.ndarray:
        """Вычисляет H(c) и увеличивает счетчик вычислений на 1"""
        pass


class LoggerInterface(ABC):
    """Интерфейс логгера"""

    @abstractmethod
    def info(self, message: str, **kwargs) -> None:
        """Логирует информационное сообщение"""
        pass

    @abstractmethod
    def warning(self, message: str, **kwargs) -> None:
        """Логирует предупреждение"""
        pass

    @abstractmethod
    def error(self, message: str, **kwargs) -> None:
        """Логирует ошибку"""
        pass

    @abstractmethod
    def debug(self, message: str, **kwargs) -> None:
        """Логирует отладочное сообщение"""
        pass
