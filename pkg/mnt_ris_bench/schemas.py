"""Pydantic схемы для MNT RIS Bench"""

from enum import Enum
from typing import Optional, List, Tuple, Dict, Any

from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Self

from .exceptions import MntConfigError


class PortPartition(BaseModel):
    """Разбиение портов сети на группы [T | R | S]"""
    model_config = ConfigDict(frozen=True)

    n_tx: int = Field(default=1, ge=1, description="Число передающих антенн N_T")
    n_rx: int = Field(default=1, ge=1, description="Число приемных антенн N_R")
    n_ris: int = Field(default=100, ge=1, description="Число элементов RIS N_S")

    @property
    def total(self) -> int:
        """Полное число портов N"""
        return self.n_tx + self.n_rx + self.n_ris

    @property
    def tx_slice(self) -> slice:
        return slice(0, self.n_tx)

    @property
    def rx_slice(self) -> slice:
        return slice(self.n_tx, self.n_tx + self.n_rx)

    @property
    def ris_slice(self) -> slice:
        return slice(self.n_tx + self.n_rx, self.total)


class EnsembleSpec(BaseModel):
    """Параметры генерации одной реализации S̃"""
    model_config = ConfigDict(frozen=True)

    partition: PortPartition = Field(..., description="Разбиение портов")
    kappa: float = Field(default=1.0, ge=0.0, description="Множитель внедиагональных элементов S_SS")
    global_scale: float = Field(default=1.0 / 15.0, gt=0.0, description="Общий масштаб всех элементов")
    offdiag_variance: float = Field(default=1.0, gt=0.0, description="Дисперсия внедиагональных элементов до масштабирования")
    rng_seed: int = Field(default=0, ge=0, lt=2**64, description="Зерно генератора Philox")
    enforce_passivity: bool = Field(default=True, description="Бросать исключение при sigma_max >= 1")

    def with_kappa(self, kappa: float) -> "EnsembleSpec":
        return self.model_copy(update={"kappa": kappa})

    def with_seed(self, rng_seed: int) -> "EnsembleSpec":
        return self.model_copy(update={"rng_seed": rng_seed})


class KappaVerdict(BaseModel):
    """Результат проверки пассивности для заданного kappa"""
    kappa: float = Field(..., description="Проверенное значение kappa")
    n_trials: int = Field(..., description="Число проверенных реализаций")
    feasible_fraction: float = Field(..., description="Доля пассивных реализаций")
    worst_sigma_max: float = Field(..., description="Наибольшее наблюдаемое sigma_max")

    @property
    def feasible(self) -> bool:
        return self.feasible_fraction == 1.0


class TabpSchedule(BaseModel):
    """Расписание температуры TABP"""
    t_start: float = Field(default=1.0, gt=0.0, description="Начальная температура")
    t_end: float = Field(default=0.1, gt=0.0, description="Конечная температура")
    e_max: int = Field(default=400, ge=1, description="Максимальное число эпох")
    epsilon: float = Field(default=1e-4, gt=0.0, lt=1.0, description="Порог остановки")
    init_clip: float = Field(
        default=0.1,
        gt=0.0,
        lt=1.0,
        description="Клиппинг atanh при инициализации: z = t_start * atanh((1 - init_clip) * u)"
    )
    relative_stop: bool = Field(
        default=True,
        description="Сравнивать |C_new - C_curr| с epsilon * |C_curr| (иначе с epsilon)"
    )
    patience: Optional[int] = Field(
        default=None,
        ge=1,
        description="Эпох подряд с изменением стоимости не выше порога до остановки; по умолчанию N_S"
    )
    c_lo: float = Field(default=-1.0, description="Допустимое значение c'")
    c_hi: float = Field(default=1.0, description="Допустимое значение c''")

    @model_validator(mode="after")
    def _check_order(self) -> Self:
        if not 0.0 < self.t_end < self.t_start:
            raise ValueError("require 0 < t_end < t_start")
        if not self.c_lo < self.c_hi:
            raise ValueError("require c_lo < c_hi")
        return self


class AdamSettings(BaseModel):
    """Гиперпараметры Adam"""
    learning_rate: float = Field(default=0.1, gt=0.0, description="Шаг обучения")
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0, description="Затухание первого момента")
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0, description="Затухание второго момента")
    epsilon_adam: float = Field(default=1e-8, gt=0.0, description="Стабилизатор знаменателя")


class GaSettings(BaseModel):
    """Параметры генетического алгоритма"""
    generations: int = Field(default=10, ge=1, description="Число поколений")
    mutation_prob: float = Field(default=1e-4, ge=0.0, le=1.0, description="Вероятность мутации гена")


class Fidelity(str, Enum):
    """Точность модели канала"""
    MNT = "mnt"
    CASC = "casc"
    RR = "rr"


class OptimizerKind(str, Enum):
    """Алгоритм оптимизации"""
    DS = "ds"
    CD = "cd"
    TABP = "tabp"
    GA = "ga"


class InitKind(str, Enum):
    """Стратегия инициализации CD/TABP"""
    RANDOM = "random"
    DICTIONARY_BEST = "ds"
    RR_CD = "rr-cd"


class MethodSpec(BaseModel):
    """Описание метода: алгоритм, модель и инициализация"""
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Уникальная метка метода в результатах")
    optimizer: OptimizerKind = Field(..., description="Алгоритм")
    fidelity: Fidelity = Field(default=Fidelity.MNT, description="Модель, используемая алгоритмом")
    init: InitKind = Field(default=InitKind.RANDOM, description="Инициализация")

    @model_validator(mode="after")
    def _check_combination(self) -> Self:
        if self.optimizer in (OptimizerKind.DS, OptimizerKind.GA) and self.fidelity != Fidelity.MNT:
            raise ValueError(f"{self.optimizer.value} runs on the MNT model only")
        if self.optimizer == OptimizerKind.TABP and self.fidelity == Fidelity.RR:
            raise ValueError("TABP needs a differentiable physical model (mnt or casc)")
        if self.fidelity == Fidelity.RR and self.init != InitKind.RANDOM:
            raise ValueError("RR-CD uses random initialization")
        return self

    def needs_dictionary(self, m: int) -> bool:
        """Нужен ли методу словарь из M пар при данном M"""
        if m <= 0:
            return False
        if self.optimizer == OptimizerKind.DS or self.fidelity == Fidelity.RR:
            return True
        return self.optimizer in (OptimizerKind.CD, OptimizerKind.TABP) and self.init != InitKind.RANDOM

    def applicable(self, m: int) -> bool:
        """Определен ли метод при данном размере словаря/популяции"""
        if self.optimizer == OptimizerKind.GA:
            return m >= 2 and m % 2 == 0
        if self.optimizer == OptimizerKind.DS or self.fidelity == Fidelity.RR:
            return m >= 1
        return m >= 0


METHOD_PRESETS: Dict[str, MethodSpec] = {
    "ds": MethodSpec(name="DS", optimizer=OptimizerKind.DS),
    "rr-cd": MethodSpec(name="RR-CD", optimizer=OptimizerKind.CD, fidelity=Fidelity.RR),
    "casc-cd": MethodSpec(name="CASC-CD", optimizer=OptimizerKind.CD, fidelity=Fidelity.CASC, init=InitKind.DICTIONARY_BEST),
    "mnt-cd": MethodSpec(name="MNT-CD", optimizer=OptimizerKind.CD, fidelity=Fidelity.MNT, init=InitKind.DICTIONARY_BEST),
    "casc-tabp": MethodSpec(name="CASC-TABP", optimizer=OptimizerKind.TABP, fidelity=Fidelity.CASC, init=InitKind.DICTIONARY_BEST),
    "mnt-tabp": MethodSpec(name="MNT-TABP", optimizer=OptimizerKind.TABP, fidelity=Fidelity.MNT, init=InitKind.DICTIONARY_BEST),
    "ga": MethodSpec(name="GA", optimizer=OptimizerKind.GA),
}


def method_from_name(name: str, init: Optional[str] = None) -> MethodSpec:
    """
    Возвращает пресет метода по имени CLI

    Args:
        name: Имя метода (ds, rr-cd, casc-cd, mnt-cd, casc-tabp, mnt-tabp, ga)
        init: Переопределение инициализации (random, ds, rr-cd)

    Raises:
        MntConfigError: Неизвестный метод или недопустимая комбинация
    """
    key = name.lower()
    if key not in METHOD_PRESETS:
        raise MntConfigError(
            f"Unknown method '{name}'",
            details={"known": sorted(METHOD_PRESETS)}
        )
    preset = METHOD_PRESETS[key]
    if init is None:
        return preset
    try:
        return MethodSpec(
            name=preset.name,
            optimizer=preset.optimizer,
            fidelity=preset.fidelity,
            init=InitKind(init),
        )
    except ValueError as e:
        raise MntConfigError(f"Invalid initialization '{init}' for {preset.name}: {str(e)}")


class OptimizationReport(BaseModel):
    """Итог одного запуска оптимизатора"""
    method: str = Field(..., description="Метка метода")
    final_config: List[int] = Field(..., description="Итоговая бинарная конфигурация")
    final_gain_mnt: float = Field(..., ge=0.0, description="Коэффициент усиления по точной MNT модели")
    model_evaluations: int = Field(..., ge=0, description="Вычисления модели, включая инициализацию")
    init_evaluations: int = Field(default=0, ge=0, description="Вычисления модели на этапе инициализации")
    peak_stored_configs: int = Field(..., ge=0, description="Пиковое число хранимых конфигураций")
    trace: List[Tuple[int, float]] = Field(default_factory=list, description="(номер вычисления, лучшая стоимость)")
    wall_time: float = Field(default=0.0, ge=0.0, description="Время выполнения в секундах")
    converged: bool = Field(default=True, description="Остановка по критерию сходимости")

    @property
    def optimizer_evaluations(self) -> int:
        return self.model_evaluations - self.init_evaluations


RESULT_COLUMNS = [
    "mu_target", "realized_mu", "m", "method", "realization", "final_gain",
    "model_evals", "init_evals", "peak_configs", "wall_time_us", "converged", "error",
]


class CellResult(BaseModel):
    """Результат одной ячейки эксперимента (реализация x метод x M)"""
    mu_target: float = Field(..., description="Целевое mu_n")
    realized_mu: float = Field(..., description="Фактическое mu_n реализации")
    m: int = Field(..., ge=0, description="Размер словаря / популяции")
    method: str = Field(..., description="Метка метода")
    realization_index: int = Field(..., ge=0, description="Номер реализации S̃")
    final_gain: float = Field(default=0.0, ge=0.0, description="Итоговое усиление по MNT")
    model_evaluations: int = Field(default=0, ge=0, description="Все вычисления модели")
    init_evaluations: int = Field(default=0, ge=0, description="Вычисления модели при инициализации")
    peak_stored_configs: int = Field(default=0, ge=0, description="Пиковое число хранимых конфигураций")
    wall_time: float = Field(default=0.0, ge=0.0, description="Время в секундах")
    converged: bool = Field(default=False, description="Флаг сходимости")
    error: Optional[str] = Field(default=None, description="Текст ошибки, если ячейка упала")

    @property
    def sort_key(self) -> Tuple[float, int, str, int]:
        return (self.mu_target, self.realization_index, self.method, self.m)

    def to_csv_row(self, record_wall_time: bool = True) -> Dict[str, Any]:
        wall_us = int(round(self.wall_time * 1e6)) if record_wall_time else 0
        return {
            "mu_target": repr(self.mu_target),
            "realized_mu": repr(self.realized_mu),
            "m": self.m,
            "method": self.method,
            "realization": self.realization_index,
            "final_gain": repr(self.final_gain),
            "model_evals": self.model_evaluations,
            "init_evals": self.init_evaluations,
            "peak_configs": self.peak_stored_configs,
            "wall_time_us": wall_us,
            "converged": int(self.converged),
            "error": self.error or "",
        }

    @classmethod
    def from_csv_row(cls, row: Dict[str, str]) -> "CellResult":
        return cls(
            mu_target=float(row["mu_target"]),
            realized_mu=float(row["realized_mu"]),
            m=int(row["m"]),
            method=row["method"],
            realization_index=int(row["realization"]),
            final_gain=float(row["final_gain"]),
            model_evaluations=int(row["model_evals"]),
            init_evaluations=int(row["init_evals"]),
            peak_stored_configs=int(row["peak_configs"]),
            wall_time=int(row["wall_time_us"]) / 1e6,
            converged=bool(int(row["converged"])),
            error=row["error"] or None,
        )


SUMMARY_COLUMNS = [
    "mu_target", "method", "m", "n_cells", "n_errors", "realized_mu_mean",
    "gain_mean", "gain_stderr", "model_evals_mean", "optimizer_evals_mean",
    "init_evals_mean", "peak_configs_mean",
]


class SummaryRow(BaseModel):
    """Агрегированная строка по (mu_target, method, m)"""
    mu_target: float
    method: str
    m: int
    n_cells: int = Field(..., description="Число успешных ячеек")
    n_errors: int = Field(default=0, description="Число исключенных ячеек с ошибкой")
    realized_mu_mean: float
    gain_mean: float
    gain_stderr: float
    model_evals_mean: float
    optimizer_evals_mean: float
    init_evals_mean: float
    peak_configs_mean: float

    def to_csv_row(self) -> Dict[str, Any]:
        row = self.model_dump()
        return {key: row[key] for key in SUMMARY_COLUMNS}


class RealizationRecord(BaseModel):
    """Строка отчета команды generate"""
    index: int
    file: str
    kappa: float
    realized_mu: float
    sigma_max: float


class CheckResult(BaseModel):
    """Результат одной проверки validate"""
    name: str = Field(..., description="Имя проверки")
    tolerance: float = Field(..., description="Допуск")
    observed: float = Field(..., description="Наблюдаемая ошибка или статистика")
    passed: bool = Field(..., description="Пройдена ли проверка")
    detail: str = Field(default="", description="Пояснение")


class RunManifest(BaseModel):
    """Манифест запуска, достаточный для воспроизведения"""
    command: str
    version: str
    config: Dict[str, Any] = Field(default_factory=dict)
    kappas: Dict[str, float] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    extra: Dict[str, Any] = Field(default_factory=dict)
