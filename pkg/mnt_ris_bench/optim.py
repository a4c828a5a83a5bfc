"""Оптимизаторы бинарной конфигурации RIS: DS, CD, TABP (Adam) и GA"""

import time
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike

from .config import ExperimentConfig, default_config
from .ensemble import ScatteringMatrix, derive_seed, make_rng
from .exceptions import (
    MntConfigError,
    MntEmptyDictionaryError,
    MntInvalidPopulationError,
    MntNonFiniteGradientError,
)
from .interfaces import ChannelModelInterface, LoggerInterface
from .log import DefaultLogger
from .models import (
    CascChannelModel,
    EvaluationCounter,
    MntChannelModel,
    RrChannelModel,
    RrSurrogate,
    as_configuration,
    casc_gradient,
    channel_gain,
    cost,
    cost_gradient,
    fit_rr,
    mnt_channel,
    mnt_channel_batch,
    mnt_gradient,
    random_configuration,
)
from .schemas import (
    AdamSettings,
    Fidelity,
    InitKind,
    MethodSpec,
    OptimizationReport,
    OptimizerKind,
    TabpSchedule,
)

# Наибольшее N_S для полного перебора 2^N_S конфигураций
MAX_ENUMERATION_BITS = 20

Trace = List[Tuple[int, float]]


def ground_truth_gain(s: ScatteringMatrix, c: ArrayLike) -> float:
    """Усиление по точной MNT модели; в счетчик не входит"""
    return channel_gain(mnt_channel(s, c))


# Словарь

class Dictionary:
    """M пар (бинарная конфигурация, канал MNT)"""

    def __init__(self, configs: np.ndarray, channels: np.ndarray, rng_seed: Optional[int] = None):
        if configs.shape[0] != channels.shape[0]:
            raise ValueError("configs and channels must have the same length")
        self.configs = configs
        self.channels = channels
        self.rng_seed = rng_seed

    def __len__(self) -> int:
        return self.configs.shape[0]

    @property
    def costs(self) -> np.ndarray:
        return np.array([cost(h) for h in self.channels])

    @classmethod
    def from_configurations(
        cls,
        s: ScatteringMatrix,
        configs: ArrayLike,
        counter: Optional[EvaluationCounter] = None
    ) -> "Dictionary":
        """Словарь по заданным конфигурациям (например, полный перебор)"""
        stacked = np.asarray(configs, dtype=np.float64)
        if stacked.ndim != 2:
            stacked = stacked.reshape(-1, s.n_ris)
        return cls(stacked, mnt_channel_batch(s, stacked, counter))


def build_dictionary(
    s: ScatteringMatrix,
    m: int,
    rng_seed: int,
    counter: Optional[EvaluationCounter] = None
) -> Dictionary:
    """
    M независимых равномерных конфигураций (с повторами) и их каналы MNT

    Raises:
        ValueError: M < 0
    """
    if m < 0:
        raise ValueError("M must be non-negative")
    rng = make_rng(rng_seed)
    configs = 2.0 * rng.integers(0, 2, size=(m, s.n_ris)) - 1.0
    dictionary = Dictionary.from_configurations(s, configs, counter)
    dictionary.rng_seed = rng_seed
    return dictionary


def enumerate_configurations(n_ris: int) -> np.ndarray:
    """Все 2^N_S бинарных конфигураций (для оракула полного перебора)"""
    if not 1 <= n_ris <= MAX_ENUMERATION_BITS:
        raise ValueError(f"exhaustive enumeration supports 1 <= N_S <= {MAX_ENUMERATION_BITS}")
    codes = np.arange(2 ** n_ris)[:, np.newaxis]
    bits = (codes >> np.arange(n_ris - 1, -1, -1)) & 1
    return 2.0 * bits - 1.0


def dictionary_search(dictionary: Dictionary) -> Tuple[np.ndarray, float]:
    """
    Конфигурация словаря с наименьшей стоимостью

    При равенстве выигрывает наименьший индекс.

    Raises:
        MntEmptyDictionaryError: M = 0
    """
    if len(dictionary) == 0:
        raise MntEmptyDictionaryError()
    costs = dictionary.costs
    best = int(np.argmin(costs))
    return dictionary.configs[best].copy(), float(costs[best])


# Coordinate descent

def coordinate_descent(
    model: ChannelModelInterface,
    c_init: ArrayLike,
    reference: Optional[ScatteringMatrix] = None,
    method: str = "CD",
) -> OptimizationReport:
    """
    Бинарный покоординатный спуск

    Элементы обходятся циклически 0..N_S-1, переключение принимается только
    при строгом уменьшении стоимости, остановка после N_S отказов подряд.
    Для MNT модели кандидаты считаются через flip_delta, а принятые
    переключения применяются commit_flip.

    Args:
        model: Модель, по которой идет спуск (ее счетчик увеличивается)
        c_init: Начальная бинарная конфигурация
        reference: Матрица для итогового усиления по MNT; по умолчанию
            берется из модели, для RR - собственное усиление суррогата
        method: Метка метода в отчете

    Returns:
        OptimizationReport: В счет входят только вычисления кандидатов; старт
            с локального оптимума стоит ровно N_S вычислений
    """
    started = time.perf_counter()
    n = model.n_ris
    config = as_configuration(c_init, n, binary=True).copy()
    evaluations_before = model.counter.evaluations

    with model.counter.paused():
        # стоимость стартовой конфигурации в счет CD не входит
        evaluator = model.evaluator(config) if isinstance(model, MntChannelModel) else None
        current = cost(evaluator.channel if evaluator is not None else model.evaluate(config))
    trace: Trace = []

    j = 0
    stall = 0
    while stall < n:
        if evaluator is not None:
            channel, cache = evaluator.flip_delta(j)
        else:
            config[j] = -config[j]
            channel = model.evaluate(config)
        candidate = cost(channel)
        if candidate < current:
            current = candidate
            stall = 0
            if evaluator is not None:
                evaluator.commit_flip(cache)
        else:
            stall += 1
            if evaluator is None:
                config[j] = -config[j]
        trace.append((len(trace) + 1, current))
        j = (j + 1) % n

    final = evaluator.config if evaluator is not None else config
    reference = reference if reference is not None else getattr(model, "s", None)
    final_gain = ground_truth_gain(reference, final) if reference is not None else -current
    return OptimizationReport(
        method=method,
        final_config=[int(v) for v in final],
        final_gain_mnt=final_gain,
        model_evaluations=model.counter.evaluations - evaluations_before,
        peak_stored_configs=2,
        trace=trace,
        wall_time=time.perf_counter() - started,
        converged=True,
    )


# TABP

class AdamState:
    """Состояние Adam с коррекцией смещения моментов"""

    def __init__(
        self,
        n: int,
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon_adam: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon_adam = epsilon_adam
        self.first_moment = np.zeros(n)
        self.second_moment = np.zeros(n)
        self.step_count = 0

    @classmethod
    def from_settings(cls, n: int, settings: AdamSettings) -> "AdamState":
        return cls(n, **settings.model_dump())

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Один шаг Adam; возвращает новые параметры"""
        self.step_count += 1
        self.first_moment = self.beta1 * self.first_moment + (1.0 - self.beta1) * grad
        self.second_moment = self.beta2 * self.second_moment + (1.0 - self.beta2) * (grad * grad)
        m_hat = self.first_moment / (1.0 - self.beta1 ** self.step_count)
        v_hat = self.second_moment / (1.0 - self.beta2 ** self.step_count)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon_adam)


def relaxed_configuration(z: np.ndarray, t: float, schedule: TabpSchedule) -> np.ndarray:
    """c̃(z, t) = c' + (1 + tanh(z/t))(c'' - c')/2"""
    return schedule.c_lo + 0.5 * (1.0 + np.tanh(z / t)) * (schedule.c_hi - schedule.c_lo)


def relaxed_cost_gradient(
    s: ScatteringMatrix,
    fidelity: Fidelity,
    z: np.ndarray,
    t: float,
    schedule: TabpSchedule,
) -> Tuple[float, np.ndarray]:
    """Стоимость в c̃(z, t) и ее градиент по z"""
    gradient_fn = mnt_gradient if fidelity == Fidelity.MNT else casc_gradient
    h, dh = gradient_fn(s, relaxed_configuration(z, t, schedule))
    sech_squared = 1.0 - np.tanh(z / t) ** 2
    chain = (schedule.c_hi - schedule.c_lo) / (2.0 * t) * sech_squared
    return cost(h), cost_gradient(h, dh) * chain


def tabp(
    s: ScatteringMatrix,
    fidelity: Fidelity,
    c_init: ArrayLike,
    schedule: Optional[TabpSchedule] = None,
    adam: Optional[AdamState] = None,
    counter: Optional[EvaluationCounter] = None,
    method: str = "TABP",
) -> OptimizationReport:
    """
    Обратное распространение с отжигом температуры

    Одно вычисление модели до цикла и по одному на эпоху e = 1..e_max-1;
    работа по вычислению градиента в счетчик не входит. Эпоха считается
    установившейся, если |C_new - C_curr| <= epsilon * |C_curr| (или
    <= epsilon при relative_stop = False); остановка после patience
    установившихся эпох подряд. Старт z = t_start * atanh((1 - init_clip) * u).
    Итог бинаризуется по знаку z (z = 0 -> c'').

    Raises:
        MntNonFiniteGradientError: Градиент содержит NaN/Inf
    """
    if fidelity not in (Fidelity.MNT, Fidelity.CASC):
        raise MntConfigError(f"TABP needs the mnt or casc model, got '{fidelity}'")
    started = time.perf_counter()
    schedule = schedule or TabpSchedule()
    counter = counter if counter is not None else EvaluationCounter()
    evaluations_before = counter.evaluations
    config = as_configuration(c_init, s.n_ris)
    adam = adam or AdamState.from_settings(s.n_ris, AdamSettings())
    patience = schedule.patience or s.n_ris

    span = schedule.c_hi - schedule.c_lo
    unit = 2.0 * (config - schedule.c_lo) / span - 1.0
    z = schedule.t_start * np.arctanh((1.0 - schedule.init_clip) * unit)

    current, _ = relaxed_cost_gradient(s, fidelity, z, schedule.t_start, schedule)
    counter.increment()
    trace: Trace = [(1, current)]
    best = current

    converged = False
    settled = 0
    for epoch in range(1, schedule.e_max):
        t = schedule.t_start * (schedule.t_end / schedule.t_start) ** (epoch / schedule.e_max)
        new, grad = relaxed_cost_gradient(s, fidelity, z, t, schedule)
        counter.increment()
        best = min(best, new)
        trace.append((len(trace) + 1, best))
        threshold = schedule.epsilon * abs(current) if schedule.relative_stop else schedule.epsilon
        settled = settled + 1 if abs(new - current) <= threshold else 0
        if settled >= patience:
            converged = True
            break
        if not np.all(np.isfinite(grad)):
            raise MntNonFiniteGradientError(details={"epoch": epoch})
        z = adam.step(z, grad)
        current = new

    final = np.where(z >= 0.0, schedule.c_hi, schedule.c_lo)
    return OptimizationReport(
        method=method,
        final_config=[int(v) for v in final],
        final_gain_mnt=ground_truth_gain(s, final),
        model_evaluations=counter.evaluations - evaluations_before,
        peak_stored_configs=2,
        trace=trace,
        wall_time=time.perf_counter() - started,
        converged=converged,
    )


# GA

def genetic_algorithm(
    s: ScatteringMatrix,
    m: int,
    generations: int = 10,
    mutation_prob: float = 1e-4,
    rng_seed: int = 0,
    counter: Optional[EvaluationCounter] = None,
    initial_population: Optional[ArrayLike] = None,
    method: str = "GA",
) -> OptimizationReport:
    """
    Генетический алгоритм по модели MNT

    Каждое поколение оценивается целиком (M вычислений), лучшие M/2 образуют
    родительский пул, родители выбираются равномерно с возвращением,
    потомки получаются одноточечным скрещиванием и мутацией генов и
    полностью заменяют популяцию. В отчет идет лучшая особь за все время.

    Raises:
        MntInvalidPopulationError: M < 2 или M нечетное
    """
    if m < 2 or m % 2:
        raise MntInvalidPopulationError(details={"m": m})
    started = time.perf_counter()
    counter = counter if counter is not None else EvaluationCounter()
    evaluations_before = counter.evaluations
    rng = make_rng(rng_seed)
    n = s.n_ris

    if initial_population is None:
        population = 2.0 * rng.integers(0, 2, size=(m, n)) - 1.0
    else:
        population = np.array(initial_population, dtype=np.float64)
        if population.shape != (m, n) or not np.all(np.abs(population) == 1.0):
            raise MntInvalidPopulationError(
                "Initial population must be an (M, N_S) array of +-1",
                details={"shape": population.shape}
            )

    best_cost = np.inf
    best_config = population[0].copy()
    trace: Trace = []
    pool_size = m // 2
    for generation in range(generations):
        channels = mnt_channel_batch(s, population, counter)
        costs = np.array([cost(h) for h in channels])
        running = np.minimum.accumulate(np.concatenate([[best_cost], costs]))[1:]
        offset = len(trace)
        trace.extend((offset + k + 1, float(value)) for k, value in enumerate(running))
        leader = int(np.argmin(costs))
        if costs[leader] < best_cost:
            best_cost = float(costs[leader])
            best_config = population[leader].copy()
        if generation == generations - 1:
            break

        pool = population[np.argsort(costs, kind="stable")[:pool_size]]
        parents = rng.integers(0, pool_size, size=(m, 2))
        if n > 1:
            cuts = rng.integers(1, n, size=m)
            head = np.arange(n)[np.newaxis, :] < cuts[:, np.newaxis]
            children = np.where(head, pool[parents[:, 0]], pool[parents[:, 1]])
        else:
            children = pool[parents[:, 0]].copy()
        mutations = rng.random((m, n)) < mutation_prob
        population = np.where(mutations, -children, children)

    return OptimizationReport(
        method=method,
        final_config=[int(v) for v in best_config],
        final_gain_mnt=ground_truth_gain(s, best_config),
        model_evaluations=counter.evaluations - evaluations_before,
        peak_stored_configs=2 * m,
        trace=trace,
        wall_time=time.perf_counter() - started,
        converged=True,
    )


# Инициализация

class Initializer:
    """Стратегия начальной конфигурации для CD и TABP; пустой словарь означает случайный старт"""

    def __init__(self, kind: InitKind, n_ris: int, dictionary: Optional[Dictionary] = None):
        if dictionary is None or len(dictionary) == 0:
            kind = InitKind.RANDOM
        self.kind = kind
        self.n_ris = n_ris
        self.dictionary = dictionary


def make_initial_config(
    init: Initializer,
    rng_seed: int,
    model_for_rrcd: Optional[RrSurrogate] = None,
    ridge_lambda: float = 1e-3,
) -> Tuple[np.ndarray, int]:
    """
    Начальная конфигурация и число вычислений модели, потраченных на нее

    Random - равномерная конфигурация; DictionaryBest - победитель DS;
    RrCdResult - итог CD по ridge-суррогату, обученному на словаре, из
    случайного старта. Вычисления словаря (M) входят в возвращаемое число.
    """
    rng = make_rng(rng_seed)
    if init.kind == InitKind.RANDOM:
        return random_configuration(rng, init.n_ris), 0

    dictionary = init.dictionary
    if init.kind == InitKind.DICTIONARY_BEST:
        config, _ = dictionary_search(dictionary)
        return config, len(dictionary)

    surrogate = model_for_rrcd or fit_rr(dictionary.configs, dictionary.channels, ridge_lambda)
    counter = EvaluationCounter()
    report = coordinate_descent(RrChannelModel(surrogate, counter), random_configuration(rng, init.n_ris))
    return np.asarray(report.final_config, dtype=np.float64), len(dictionary) + counter.evaluations


# Запуск одного метода

def _shift_trace(trace: Trace, offset: int) -> Trace:
    return [(index + offset, value) for index, value in trace]


def run_method(
    s: ScatteringMatrix,
    method: MethodSpec,
    m: int,
    dictionary: Optional[Dictionary] = None,
    rng_seed: int = 0,
    config: Optional[ExperimentConfig] = None,
    logger: Optional[LoggerInterface] = None,
) -> OptimizationReport:
    """
    Один запуск метода на одной реализации S̃ с инициализацией и переоценкой по MNT

    Args:
        s: Матрица рассеяния
        method: Описание метода
        m: Размер словаря / популяции
        dictionary: Готовый словарь из M пар (иначе строится здесь)
        rng_seed: Зерно ячейки; случайный старт выводится из него
        config: Гиперпараметры (rr_lambda, tabp, adam, ga)

    Returns:
        OptimizationReport: model_evaluations включает init_evaluations

    Raises:
        MntConfigError: Метод не определен при данном M
    """
    config = config or default_config
    logger = logger or DefaultLogger()
    if not method.applicable(m):
        raise MntConfigError(f"{method.name} is not defined for M={m}", details={"m": m})
    started = time.perf_counter()

    if method.needs_dictionary(m) and dictionary is None:
        dictionary = build_dictionary(s, m, derive_seed(rng_seed, "dictionary", m))
    if dictionary is not None and method.needs_dictionary(m) and len(dictionary) != m:
        raise MntConfigError(
            "Dictionary size does not match M",
            details={"m": m, "dictionary": len(dictionary)}
        )

    init_evaluations = 0
    if method.optimizer == OptimizerKind.DS:
        best, _ = dictionary_search(dictionary)
        report = OptimizationReport(
            method=method.name,
            final_config=[int(v) for v in best],
            final_gain_mnt=ground_truth_gain(s, best),
            model_evaluations=m,
            peak_stored_configs=m,
            trace=[(k + 1, float(v)) for k, v in enumerate(np.minimum.accumulate(dictionary.costs))],
        )
    elif method.optimizer == OptimizerKind.GA:
        report = genetic_algorithm(
            s, m,
            generations=config.ga.generations,
            mutation_prob=config.ga.mutation_prob,
            rng_seed=derive_seed(rng_seed, "ga"),
            method=method.name,
        )
    elif method.fidelity == Fidelity.RR:
        surrogate = fit_rr(dictionary.configs, dictionary.channels, config.rr_lambda)
        start = random_configuration(make_rng(derive_seed(rng_seed, "start")), s.n_ris)
        report = coordinate_descent(RrChannelModel(surrogate), start, reference=s, method=method.name)
        init_evaluations = m
        report = report.model_copy(update={
            "model_evaluations": report.model_evaluations + m,
            "peak_stored_configs": max(m, report.peak_stored_configs),
            "trace": _shift_trace(report.trace, m),
        })
    else:
        initializer = Initializer(method.init, s.n_ris, dictionary if method.needs_dictionary(m) else None)
        start, init_evaluations = make_initial_config(
            initializer, derive_seed(rng_seed, "start"), ridge_lambda=config.rr_lambda
        )
        if method.optimizer == OptimizerKind.CD:
            model = MntChannelModel(s) if method.fidelity == Fidelity.MNT else CascChannelModel(s)
            report = coordinate_descent(model, start, reference=s, method=method.name)
        else:
            report = tabp(
                s, method.fidelity, start,
                schedule=config.tabp,
                adam=AdamState.from_settings(s.n_ris, config.adam),
                method=method.name,
            )
        report = report.model_copy(update={
            "model_evaluations": report.model_evaluations + init_evaluations,
            "trace": _shift_trace(report.trace, init_evaluations),
        })

    report = report.model_copy(update={
        "init_evaluations": init_evaluations,
        "wall_time": time.perf_counter() - started,
    })
    logger.debug(
        "Метод выполнен",
        method=method.name,
        m=m,
        gain=report.final_gain_mnt,
        evaluations=report.model_evaluations,
    )
    return report
