"""Логирование MNT RIS Bench"""

import logging

from .interfaces import LoggerInterface


class DefaultLogger(LoggerInterface):
    """Дефолтная реализация логгера"""

    def __init__(self, name: str = "mnt_ris_bench"):
        self.logger = logging.getLogger(name)

    def info(self, message: str, **kwargs) -> None:
        self.logger.info(message, extra=kwargs)

    def warning(self, message: str, **kwargs) -> None:
        self.logger.warning(message, extra=kwargs)

    def error(self, message: str, **kwargs) -> None:
        self.logger.error(message, extra=kwargs)

    def debug(self, message: str, **kwargs) -> None:
        self.logger.debug(message, extra=kwargs)


class ContextFormatter(logging.Formatter):
    """Форматтер, дописывающий переданный через extra контекст в конец строки"""

    _reserved = set(vars(logging.makeLogRecord({})))

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        context = {
            key: value for key, value in vars(record).items()
            if key not in self._reserved and key not in ("message", "asctime")
        }
        if context:
            line += " " + " ".join(f"{key}={value}" for key, value in sorted(context.items()))
        return line


def configure_logging(debug: bool = False) -> None:
    """Подключает вывод логов пакета в stderr (используется CLI)"""
    handler = logging.StreamHandler()
    handler.setFormatter(ContextFormatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    package_logger = logging.getLogger("mnt_ris_bench")
    package_logger.handlers[:] = [handler]
    package_logger.setLevel(logging.DEBUG if debug else logging.INFO)
    package_logger.propagate = False
