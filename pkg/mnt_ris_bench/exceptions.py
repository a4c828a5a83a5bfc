"""Исключения для MNT RIS Bench"""

from typing import Optional, Any, Dict


class MntRisError(Exception):
    """Базовое исключение для MNT RIS Bench"""

    def __init__(
        self,
        message: str = "MNT RIS error",
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


# Численное ядро

class MntDimensionMismatchError(MntRisError):
    """Несовместимые размеры матриц"""

    def __init__(
        self,
        message: str = "Matrix dimensions do not match",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntSingularMatrixError(MntRisError):
    """Матрица численно вырождена"""

    def __init__(
        self,
        message: str = "Matrix is numerically singular",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntConvergenceError(MntRisError):
    """Итерационный метод не сошелся"""

    def __init__(
        self,
        message: str = "Iteration did not converge",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntNonFiniteError(MntRisError):
    """Во входных данных есть NaN или Inf"""

    def __init__(
        self,
        message: str = "Matrix contains non-finite entries",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


# Ансамбль матриц рассеяния

class MntPassivityViolationError(MntRisError):
    """Реализация матрицы рассеяния не пассивна"""

    def __init__(
        self,
        message: str = "Scattering matrix violates passivity",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntReciprocityViolationError(MntRisError):
    """Матрица рассеяния не симметрична"""

    def __init__(
        self,
        message: str = "Scattering matrix must satisfy S == S.T exactly",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntInfeasibleTargetError(MntRisError):
    """Целевое значение mu_n недостижимо при сохранении пассивности"""

    def __init__(
        self,
        message: str = "Target coupling strength is infeasible",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntFileFormatError(MntRisError):
    """Поврежденный или несовместимый файл MNTS"""

    def __init__(
        self,
        message: str = "Invalid MNTS file",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


# Модели канала

class MntCacheInvalidError(MntRisError):
    """У вычислителя нет актуального кеша"""

    def __init__(
        self,
        message: str = "Evaluator has no valid cache",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntStaleCacheError(MntRisError):
    """FlipCache устарел: после него был вызван другой flip_delta"""

    def __init__(
        self,
        message: str = "Flip cache is stale",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntNumericBreakdownError(MntRisError):
    """Знаменатель формулы Шермана-Моррисона близок к нулю"""

    def __init__(
        self,
        message: str = "Rank-one update breakdown",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntDegenerateDesignError(MntRisError):
    """Вырожденная матрица плана ridge-регрессии"""

    def __init__(
        self,
        message: str = "Ridge regression design is degenerate",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntNotFittedError(MntRisError):
    """Суррогатная модель еще не обучена"""

    def __init__(
        self,
        message: str = "Surrogate is not fitted",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntShapeError(MntRisError):
    """Метрика определена только для SISO канала"""

    def __init__(
        self,
        message: str = "Channel gain requires a 1x1 (SISO) channel",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


# Оптимизаторы

class MntNonFiniteGradientError(MntRisError):
    """Градиент TABP содержит NaN или Inf"""

    def __init__(
        self,
        message: str = "Gradient contains non-finite entries",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntEmptyDictionaryError(MntRisError):
    """Поиск по пустому словарю"""

    def __init__(
        self,
        message: str = "Dictionary is empty",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntInvalidPopulationError(MntRisError):
    """Недопустимый размер популяции генетического алгоритма"""

    def __init__(
        self,
        message: str = "Population size must be even and at least 2",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)


class MntConfigError(MntRisError):
    """Ошибка конфигурации эксперимента"""

    def __init__(
        self,
        message: str = "Configuration error",
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message, details)
