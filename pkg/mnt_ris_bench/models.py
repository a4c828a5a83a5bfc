"""Модели канала: точная MNT, аффинная CASC, ряд Неймана и ridge-суррогат"""

from contextlib import contextmanager
from typing import Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .config import NumericTolerances, default_tolerances
from .ensemble import ScatteringMatrix
from .exceptions import (
    MntCacheInvalidError,
    MntDegenerateDesignError,
    MntDimensionMismatchError,
    MntNotFittedError,
    MntNumericBreakdownError,
    MntShapeError,
    MntSingularMatrixError,
    MntStaleCacheError,
)
from .interfaces import ChannelModelInterface
from .numeric import ComplexMatrix, factorize, solve_linear, spectral_radius


class EvaluationCounter:
    """Точный счетчик вычислений модели (один на запуск оптимизатора)"""

    def __init__(self, evaluations: int = 0):
        self.evaluations = evaluations
        self._paused = False

    def increment(self, count: int = 1) -> None:
        if not self._paused:
            self.evaluations += count

    @contextmanager
    def paused(self) -> Iterator["EvaluationCounter"]:
        """Вычисления внутри блока не учитываются"""
        previous = self._paused
        self._paused = True
        try:
            yield self
        finally:
            self._paused = previous

    def __repr__(self) -> str:
        return f"EvaluationCounter(evaluations={self.evaluations})"


def _count(counter: Optional[EvaluationCounter], amount: int = 1) -> None:
    if counter is not None:
        counter.increment(amount)


def as_configuration(c: ArrayLike, n_ris: int, binary: bool = False) -> np.ndarray:
    """
    Проверяет вектор конфигурации RIS

    Args:
        c: Вектор длины N_S
        n_ris: Ожидаемая длина
        binary: Требовать c_i ∈ {-1, +1}
    """
    config = np.asarray(c, dtype=np.float64).reshape(-1)
    if config.size != n_ris:
        raise MntDimensionMismatchError(
            "Configuration length must equal N_S",
            details={"length": config.size, "n_ris": n_ris}
        )
    if binary and not np.all(np.abs(config) == 1.0):
        raise ValueError("binary configuration entries must be exactly -1 or +1")
    return config


def random_configuration(rng: np.random.Generator, n_ris: int) -> np.ndarray:
    """Равномерно случайная бинарная конфигурация"""
    return 2.0 * rng.integers(0, 2, size=n_ris) - 1.0


# MNT

def mnt_channel(
    s: ScatteringMatrix,
    c: ArrayLike,
    counter: Optional[EvaluationCounter] = None
) -> ComplexMatrix:
    """
    Точный канал MNT в форме без особенностей

    H = S_RT + S_RS (I - Φ S_SS)⁻¹ Φ S_ST, что совпадает с
    S_RT + S_RS (Φ⁻¹ - S_SS)⁻¹ S_ST, но определено и при c_i = 0.

    Raises:
        MntSingularMatrixError: (I - Φ S_SS) численно вырождена
    """
    config = as_configuration(c, s.n_ris)
    system = np.eye(s.n_ris) - config[:, np.newaxis] * s.S_SS
    x = solve_linear(system, config[:, np.newaxis] * s.S_ST)
    _count(counter)
    return s.S_RT + s.S_RS @ x


def mnt_channel_batch(
    s: ScatteringMatrix,
    configs: ArrayLike,
    counter: Optional[EvaluationCounter] = None
) -> np.ndarray:
    """
    Каналы MNT для M конфигураций одним векторизованным решением

    Returns:
        np.ndarray: Массив формы (M, N_R, N_T); счетчик увеличивается на M
    """
    stacked = np.asarray(configs, dtype=np.float64)
    if stacked.ndim != 2 or stacked.shape[1] != s.n_ris:
        raise MntDimensionMismatchError(
            "Configurations must form an (M, N_S) array",
            details={"shape": stacked.shape, "n_ris": s.n_ris}
        )
    m = stacked.shape[0]
    if m == 0:
        return np.zeros((0,) + s.S_RT.shape, dtype=np.complex128)
    systems = np.eye(s.n_ris)[np.newaxis] - stacked[:, :, np.newaxis] * s.S_SS[np.newaxis]
    rhs = stacked[:, :, np.newaxis] * s.S_ST[np.newaxis]
    try:
        x = np.linalg.solve(systems, rhs)
    except np.linalg.LinAlgError as e:
        raise MntSingularMatrixError(f"Batch solve failed: {str(e)}")
    _count(counter, m)
    return s.S_RT[np.newaxis] + s.S_RS[np.newaxis] @ x


def rank_one_channel_update(
    h: ComplexMatrix,
    p_col: np.ndarray,
    q_row: np.ndarray,
    delta: float,
    denominator: complex,
) -> ComplexMatrix:
    """ΔH = -δ (S_RS W eᵢ)(eᵢᵀ W S_ST) / (1 + δ Wᵢᵢ)"""
    return h - (delta / denominator) * np.outer(p_col, q_row)


class FlipCache:
    """Данные одного пробного переключения для commit_flip"""

    __slots__ = ("index", "delta", "denominator", "w_col", "w_row", "channel", "version")

    def __init__(
        self,
        index: int,
        delta: float,
        denominator: complex,
        w_col: np.ndarray,
        w_row: np.ndarray,
        channel: ComplexMatrix,
        version: int,
    ):
        self.index = index
        self.delta = delta
        self.denominator = denominator
        self.w_col = w_col
        self.w_row = w_row
        self.channel = channel
        self.version = version


class MntEvaluator:
    """
    Вычислитель MNT с кешем W = (Φ⁻¹ - S_SS)⁻¹ для бинарной конфигурации

    Кроме W хранятся P = S_RS W и Q = W S_ST, так что пробное переключение
    стоит O(N_R N_T), а подтверждение - O(N_S²). Один владелец на запуск.
    """

    def __init__(
        self,
        s: ScatteringMatrix,
        c: ArrayLike,
        counter: Optional[EvaluationCounter] = None,
        tolerances: Optional[NumericTolerances] = None,
    ):
        self.s = s
        self.counter = counter if counter is not None else EvaluationCounter()
        self.tolerances = tolerances or default_tolerances
        self._config: Optional[np.ndarray] = None
        self._w: Optional[np.ndarray] = None
        self._p: Optional[np.ndarray] = None
        self._q: Optional[np.ndarray] = None
        self._h: Optional[ComplexMatrix] = None
        self._version = 0
        self.reset(c)

    def _inverse_from_scratch(self, config: np.ndarray) -> np.ndarray:
        # для c_i = ±1 Φ⁻¹ = Φ
        system = np.diag(config).astype(np.complex128) - self.s.S_SS
        return solve_linear(system, np.eye(self.s.n_ris))

    def reset(self, c: ArrayLike) -> ComplexMatrix:
        """Полный пересчет кеша для новой конфигурации (1 вычисление модели)"""
        config = as_configuration(c, self.s.n_ris, binary=True).copy()
        w = self._inverse_from_scratch(config)
        self._config = config
        self._w = w
        self._p = self.s.S_RS @ w
        self._q = w @ self.s.S_ST
        self._h = self.s.S_RT + self._p @ self.s.S_ST
        self._version += 1
        self.counter.increment()
        return self._h

    def invalidate(self) -> None:
        self._w = None
        self._version += 1

    @property
    def config(self) -> np.ndarray:
        if self._config is None:
            raise MntCacheInvalidError()
        return self._config.copy()

    @property
    def channel(self) -> ComplexMatrix:
        if self._h is None:
            raise MntCacheInvalidError()
        return self._h

    @property
    def inverse(self) -> np.ndarray:
        if self._w is None:
            raise MntCacheInvalidError()
        return self._w

    def scratch_inverse(self) -> np.ndarray:
        """W, пересчитанный с нуля (для проверки дрейфа, не для рабочего цикла)"""
        return self._inverse_from_scratch(self.config)

    def flip_delta(self, i: int) -> Tuple[ComplexMatrix, FlipCache]:
        """
        Канал после переключения элемента i без O(N_S³) работы

        Raises:
            MntCacheInvalidError: Нет актуального кеша
            MntNumericBreakdownError: |1 + δ Wᵢᵢ| < 1e-12
        """
        if self._w is None or self._config is None:
            raise MntCacheInvalidError()
        if not 0 <= i < self.s.n_ris:
            raise IndexError(f"element index {i} out of range for N_S={self.s.n_ris}")
        delta = -2.0 * self._config[i]
        denominator = 1.0 + delta * self._w[i, i]
        if abs(denominator) < self.tolerances.flip_breakdown:
            raise MntNumericBreakdownError(details={"index": i, "denominator": abs(denominator)})
        channel = rank_one_channel_update(self._h, self._p[:, i], self._q[i, :], delta, denominator)
        self._version += 1
        self.counter.increment()
        cache = FlipCache(
            index=i,
            delta=delta,
            denominator=denominator,
            w_col=self._w[:, i].copy(),
            w_row=self._w[i, :].copy(),
            channel=channel,
            version=self._version,
        )
        return channel, cache

    def commit_flip(self, cache: FlipCache) -> None:
        """
        Применяет пробное переключение к кешу за O(N_S²)

        Raises:
            MntStaleCacheError: После cache был другой flip_delta или commit
        """
        if self._w is None:
            raise MntCacheInvalidError()
        if cache.version != self._version:
            raise MntStaleCacheError(details={"cache_version": cache.version, "current_version": self._version})
        i = cache.index
        scale = cache.delta / cache.denominator
        p_col = self._p[:, i].copy()
        q_row = self._q[i, :].copy()
        self._w -= scale * np.outer(cache.w_col, cache.w_row)
        self._p -= scale * np.outer(p_col, cache.w_row)
        self._q -= scale * np.outer(cache.w_col, q_row)
        self._config[i] = -self._config[i]
        self._h = cache.channel
        self._version += 1


def mnt_channel_flip_delta(ev: MntEvaluator, i: int) -> Tuple[ComplexMatrix, FlipCache]:
    """Функциональная форма MntEvaluator.flip_delta"""
    return ev.flip_delta(i)


def commit_flip(ev: MntEvaluator, cache: FlipCache) -> None:
    """Функциональная форма MntEvaluator.commit_flip"""
    ev.commit_flip(cache)


# CASC и ряд Неймана

def casc_channel(
    s: ScatteringMatrix,
    c: ArrayLike,
    counter: Optional[EvaluationCounter] = None
) -> ComplexMatrix:
    """Аффинная модель CASC: H = S_RT + S_RS Φ S_ST"""
    config = as_configuration(c, s.n_ris)
    _count(counter)
    return s.S_RT + s.S_RS @ (config[:, np.newaxis] * s.S_ST)


# Ниже этого порога квадраты внутри нормы Фробениуса выходят из нормализованного диапазона
_NORM_FLOOR = float(np.sqrt(np.finfo(np.float64).tiny))


class NeumannResult:
    """Частичная сумма ряда Неймана и диагностика сходимости"""

    def __init__(self, channel: ComplexMatrix, increments: List[float], spectral_radius: float):
        self.channel = channel
        self.increments = increments
        self.spectral_radius = spectral_radius

    @property
    def n_terms(self) -> int:
        return len(self.increments)

    def convergence_rate(self, window: int = 20) -> float:
        """Средний геометрический коэффициент убывания по последним window ненулевым членам"""
        positive = [value for value in self.increments if value > 0.0]
        window = min(window, len(positive) - 1)
        if window < 1:
            raise ValueError("need at least two non-zero terms to estimate the rate")
        return float((positive[-1] / positive[-1 - window]) ** (1.0 / window))


def neumann_channel(
    s: ScatteringMatrix,
    c: ArrayLike,
    k_max: int,
    tol: Optional[float] = None,
    counter: Optional[EvaluationCounter] = None,
) -> NeumannResult:
    """
    Частичная сумма S_RT + S_RS [Σ_{k=0}^{k_max} (Φ S_SS)^k] Φ S_ST

    Args:
        s: Матрица рассеяния
        c: Конфигурация (бинарная или ослабленная)
        k_max: Наибольшая степень
        tol: Остановиться раньше, когда норма члена меньше tol

    Returns:
        NeumannResult: Канал, нормы Фробениуса членов и R = ρ(Φ S_SS)
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    config = as_configuration(c, s.n_ris)
    bounce = config[:, np.newaxis] * s.S_SS
    term = config[:, np.newaxis] * s.S_ST
    accumulated = term.copy()
    increments = [float(np.linalg.norm(s.S_RS @ term))]
    for _ in range(k_max):
        term = bounce @ term
        increment = float(np.linalg.norm(s.S_RS @ term))
        if increment < _NORM_FLOOR:
            break
        accumulated += term
        increments.append(increment)
        if tol is not None and increments[-1] < tol:
            break
    _count(counter)
    return NeumannResult(
        channel=s.S_RT + s.S_RS @ accumulated,
        increments=increments,
        spectral_radius=spectral_radius(bounce),
    )


# Ridge-регрессия

class RrSurrogate:
    """Неструктурированная аффинная модель H(c) = b + Σ_i c_i w_i"""

    def __init__(self, ridge_lambda: float = 1e-3):
        if ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        self.ridge_lambda = ridge_lambda
        self.intercept: Optional[np.ndarray] = None
        self.weights: Optional[np.ndarray] = None
        self.n_samples = 0

    @property
    def fitted(self) -> bool:
        return self.weights is not None

    @property
    def n_ris(self) -> int:
        if self.weights is None:
            raise MntNotFittedError()
        return self.weights.shape[0]

    def fit(self, configs: ArrayLike, channels: ArrayLike) -> "RrSurrogate":
        """
        Решает min Σ_m |c_mᵀ w + b - H_m|² + λ||w||² для каждого (rx, tx)

        Свободный член не штрафуется: признаки и отклики центрируются, а
        гребневая задача решается как расширенная задача наименьших квадратов.

        Raises:
            MntDegenerateDesignError: λ = 0 и план неполного ранга
        """
        design = np.asarray(configs, dtype=np.float64)
        responses = np.asarray(channels, dtype=np.complex128)
        if design.ndim != 2 or design.shape[0] < 1:
            raise MntDimensionMismatchError("Need at least one (M, N_S) configuration row")
        m, n_ris = design.shape
        if responses.shape[0] != m:
            raise MntDimensionMismatchError(
                "Number of channels must equal number of configurations",
                details={"configs": m, "channels": responses.shape[0]}
            )
        channel_shape = responses.shape[1:]
        targets = responses.reshape(m, -1)

        mean_c = design.mean(axis=0)
        mean_y = targets.mean(axis=0)
        augmented = np.vstack([design - mean_c, np.sqrt(self.ridge_lambda) * np.eye(n_ris)])
        rhs = np.vstack([targets - mean_y, np.zeros((n_ris, targets.shape[1]), dtype=np.complex128)])
        try:
            weights, _, rank, _ = scipy.linalg.lstsq(augmented, rhs)
        except scipy.linalg.LinAlgError as e:
            raise MntDegenerateDesignError(f"Least-squares solve failed: {str(e)}")
        if rank < n_ris:
            raise MntDegenerateDesignError(details={"rank": int(rank), "n_ris": n_ris})

        self.weights = weights.reshape((n_ris,) + channel_shape)
        self.intercept = (mean_y - mean_c @ weights).reshape(channel_shape)
        self.n_samples = m
        return self

    def predict(self, c: ArrayLike, counter: Optional[EvaluationCounter] = None) -> ComplexMatrix:
        """
        Raises:
            MntNotFittedError: fit еще не вызывался
        """
        if self.weights is None or self.intercept is None:
            raise MntNotFittedError()
        config = as_configuration(c, self.weights.shape[0])
        _count(counter)
        return self.intercept + np.tensordot(config, self.weights, axes=1)


def fit_rr(configs: ArrayLike, channels: ArrayLike, ridge_lambda: float = 1e-3) -> RrSurrogate:
    """Обучает ridge-суррогат на M парах (конфигурация, канал MNT)"""
    return RrSurrogate(ridge_lambda).fit(configs, channels)


def rr_predict(
    sur: RrSurrogate,
    c: ArrayLike,
    counter: Optional[EvaluationCounter] = None
) -> ComplexMatrix:
    """Предсказание суррогата; 1 вычисление модели"""
    return sur.predict(c, counter)


# Метрика

def channel_gain(h: ArrayLike) -> float:
    """
    SISO усиление |H₁₁|²

    Raises:
        MntShapeError: Канал не 1×1
    """
    matrix = np.asarray(h)
    if matrix.shape != (1, 1):
        raise MntShapeError(details={"shape": matrix.shape})
    return float(abs(matrix[0, 0]) ** 2)


def cost(h: ArrayLike) -> float:
    """Стоимость C(H) = -|H₁₁|²"""
    return -channel_gain(h)


# Градиенты для TABP

def _require_siso(s: ScatteringMatrix) -> None:
    if s.partition.n_tx != 1 or s.partition.n_rx != 1:
        raise MntShapeError(
            "Gradients are defined for the SISO cost only",
            details={"n_tx": s.partition.n_tx, "n_rx": s.partition.n_rx}
        )


def mnt_gradient(s: ScatteringMatrix, c: ArrayLike) -> Tuple[ComplexMatrix, np.ndarray]:
    """
    Канал MNT и ∂H/∂c̃ᵢ = uᵢ vᵢ для ослабленной конфигурации

    M̄ = (I - Φ̃ S_SS)⁻¹, u = (S_RS M̄)ᵀ, v = (S_SS M̄ Φ̃ + I) S_ST.
    Одно LU разложение обслуживает и прямое, и транспонированное решение.
    """
    _require_siso(s)
    config = as_configuration(c, s.n_ris)
    lu = factorize(np.eye(s.n_ris) - config[:, np.newaxis] * s.S_SS)
    x = lu.solve(config[:, np.newaxis] * s.S_ST)
    h = s.S_RT + s.S_RS @ x
    u = lu.solve(s.S_RS.T, transpose=True)[:, 0]
    v = (s.S_SS @ x + s.S_ST)[:, 0]
    return h, u * v


def casc_gradient(s: ScatteringMatrix, c: ArrayLike) -> Tuple[ComplexMatrix, np.ndarray]:
    """Канал CASC и ∂H/∂c̃ᵢ = (S_RS)ᵢ (S_ST)ᵢ"""
    _require_siso(s)
    config = as_configuration(c, s.n_ris)
    h = s.S_RT + s.S_RS @ (config[:, np.newaxis] * s.S_ST)
    return h, s.S_RS[0, :] * s.S_ST[:, 0]


def cost_gradient(h: ComplexMatrix, dh: np.ndarray) -> np.ndarray:
    """∂C/∂c̃ᵢ = -2 Re(conj(H) ∂H/∂c̃ᵢ)"""
    return -2.0 * np.real(np.conj(h[0, 0]) * dh)


# Реализации ChannelModelInterface

class MntChannelModel(ChannelModelInterface):
    """Точная модель MNT; для CD используется вычислитель с кешем"""

    def __init__(self, s: ScatteringMatrix, counter: Optional[EvaluationCounter] = None):
        self.s = s
        self.counter = counter if counter is not None else EvaluationCounter()

    @property
    def fidelity(self) -> str:
        return "mnt"

    @property
    def n_ris(self) -> int:
        return self.s.n_ris

    def evaluate(self, c: np.ndarray) -> np.ndarray:
        return mnt_channel(self.s, c, self.counter)

    def evaluator(self, c: np.ndarray) -> MntEvaluator:
        return MntEvaluator(self.s, c, self.counter)


class CascChannelModel(ChannelModelInterface):
    """Аффинная модель CASC"""

    def __init__(self, s: ScatteringMatrix, counter: Optional[EvaluationCounter] = None):
        self.s = s
        self.counter = counter if counter is not None else EvaluationCounter()

    @property
    def fidelity(self) -> str:
        return "casc"

    @property
    def n_ris(self) -> int:
        return self.s.n_ris

    def evaluate(self, c: np.ndarray) -> np.ndarray:
        return casc_channel(self.s, c, self.counter)


class RrChannelModel(ChannelModelInterface):
    """Модель на основе обученного ridge-суррогата"""

    def __init__(self, surrogate: RrSurrogate, counter: Optional[EvaluationCounter] = None):
        if not surrogate.fitted:
            raise MntNotFittedError()
        self.surrogate = surrogate
        self.counter = counter if counter is not None else EvaluationCounter()

    @property
    def fidelity(self) -> str:
        return "rr"

    @property
    def n_ris(self) -> int:
        return self.surrogate.n_ris

    def evaluate(self, c: np.ndarray) -> np.ndarray:
        return rr_predict(self.surrogate, c, self.counter)
