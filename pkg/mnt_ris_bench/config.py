"""Конфигурация для MNT RIS Bench"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import MntConfigError
from .schemas import (
    AdamSettings,
    EnsembleSpec,
    GaSettings,
    METHOD_PRESETS,
    MethodSpec,
    PortPartition,
    TabpSchedule,
)


class NumericTolerances(BaseModel):
    """Единая запись допусков, общая для кода и тестов"""
    model_config = ConfigDict(frozen=True)

    solve_rtol: float = 1e-10
    pivot_floor: float = 1e-300
    singular_value_rtol: float = 1e-8
    spectral_radius_rtol: float = 1e-6
    max_iterations: int = 10_000
    flip_breakdown: float = 1e-12
    flip_rtol: float = 1e-10
    drift_rtol: float = 1e-8
    neumann_increment: float = 1e-12
    gradient_fd_step: float = 1e-6
    gradient_rtol: float = 1e-5
    mu_linearity_rtol: float = 1e-12


default_tolerances = NumericTolerances()

# Desk-scale preset: N_S = 32, 200 realizations, M grid [0, 8, 32, 128]
DESK_PRESET: Dict[str, Any] = {
    "n_ris": 32,
    "n_realizations": 200,
    "m_values": [0, 8, 32, 128],
    # mu_n = 0.99 при N_S = 32 недостижим пассивными реализациями
    "enforce_passivity": False,
}


def _default_methods() -> List[MethodSpec]:
    return [METHOD_PRESETS[key] for key in ("ds", "rr-cd", "casc-cd", "mnt-cd", "casc-tabp", "mnt-tabp", "ga")]


class ExperimentConfig(BaseSettings):
    """Настройки эксперимента Монте-Карло"""

    # Port layout
    n_tx: int = Field(default=1, ge=1, description="Число передающих антенн")
    n_rx: int = Field(default=1, ge=1, description="Число приемных антенн")
    n_ris: int = Field(default=100, ge=1, description="Число элементов RIS")

    # Sweep
    mu_targets: List[float] = Field(
        default_factory=lambda: [0.01, 0.5, 0.99],
        description="Целевые значения mu_n (по одной панели на значение)"
    )
    m_values: List[int] = Field(
        default_factory=lambda: [0, 10, 25, 50, 100, 200, 400, 800],
        description="Размеры словаря M"
    )
    n_realizations: int = Field(default=1500, ge=1, description="Число реализаций S̃ на каждое mu_n")
    methods: List[MethodSpec] = Field(default_factory=_default_methods, description="Сравниваемые методы")
    master_seed: int = Field(default=2024, ge=0, description="Главное зерно эксперимента")

    # Ensemble generator
    global_scale: float = Field(default=1.0 / 15.0, gt=0.0, description="Общий масштаб S̃")
    offdiag_variance: float = Field(default=1.0, gt=0.0, description="Базовая дисперсия внедиагональных элементов")
    enforce_passivity: bool = Field(default=True, description="Требовать sigma_max < 1 для каждой реализации")
    n_probe_configs: int = Field(default=100, ge=1, description="Число случайных конфигураций для mu_n")
    n_calib: int = Field(default=200, ge=1, description="Число реализаций для калибровки kappa")
    kappa_trials: int = Field(default=50, ge=1, description="Число реализаций для проверки пассивности kappa")

    # Models and optimizers
    rr_lambda: float = Field(default=1e-3, ge=0.0, description="Параметр регуляризации ridge-регрессии")
    tabp: TabpSchedule = Field(default_factory=TabpSchedule, description="Расписание TABP")
    adam: AdamSettings = Field(default_factory=AdamSettings, description="Гиперпараметры Adam")
    ga: GaSettings = Field(default_factory=GaSettings, description="Параметры GA")

    # Execution and outputs
    workers: int = Field(default=1, ge=1, description="Размер пула процессов")
    output_dir: Path = Field(default=Path("results"), description="Каталог результатов")
    results_file: str = Field(default="results.csv", description="Имя CSV с ячейками")
    summary_file: str = Field(default="summary.csv", description="Имя CSV со сводкой")
    manifest_file: str = Field(default="manifest.json", description="Имя JSON манифеста")
    record_wall_time: bool = Field(default=True, description="Записывать время выполнения ячеек")

    # Logging
    enable_debug_logging: bool = Field(
        default=False,
        description="Включить отладочное логирование"
    )

    model_config = SettingsConfigDict(
        env_prefix="MNT_RIS_",
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("mu_targets")
    @classmethod
    def _check_mu_targets(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("mu_targets must not be empty")
        if any(not 0.0 < mu < 1.0 for mu in value):
            raise ValueError("every mu target must lie in (0, 1)")
        return value

    @field_validator("m_values")
    @classmethod
    def _check_m_values(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("m_values must not be empty")
        if any(m < 0 for m in value):
            raise ValueError("m_values must be non-negative")
        return value

    @field_validator("methods")
    @classmethod
    def _check_methods(cls, value: List[MethodSpec]) -> List[MethodSpec]:
        names = [method.name for method in value]
        if len(set(names)) != len(names):
            raise ValueError("method names must be unique")
        return value

    @property
    def partition(self) -> PortPartition:
        return PortPartition(n_tx=self.n_tx, n_rx=self.n_rx, n_ris=self.n_ris)

    def ensemble_spec(self, kappa: float = 1.0, rng_seed: int = 0) -> EnsembleSpec:
        """Собирает EnsembleSpec из настроек генератора"""
        return EnsembleSpec(
            partition=self.partition,
            kappa=kappa,
            global_scale=self.global_scale,
            offdiag_variance=self.offdiag_variance,
            rng_seed=rng_seed,
            enforce_passivity=self.enforce_passivity,
        )

    @classmethod
    def desk_scale(cls, **overrides: Any) -> "ExperimentConfig":
        """Уменьшенный эксперимент, который считается за минуты на ноутбуке"""
        values: Dict[str, Any] = dict(DESK_PRESET)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def load(
        cls,
        path: Optional[Path] = None,
        overrides: Sequence[str] = (),
        preset: str = "full",
    ) -> "ExperimentConfig":
        """
        Загружает конфигурацию из TOML файла с переопределениями

        Args:
            path: Путь к TOML документу (опционально)
            overrides: Строки вида "tabp.e_max=200"
            preset: "full" или "desk" - база, если файл не задан

        Returns:
            ExperimentConfig: Проверенная конфигурация

        Raises:
            MntConfigError: Ошибка чтения или валидации
        """
        data: Dict[str, Any] = {}
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            except (OSError, tomllib.TOMLDecodeError) as e:
                raise MntConfigError(f"Cannot read config file {path}: {str(e)}")
        elif preset == "desk":
            data = dict(DESK_PRESET)
        elif preset != "full":
            raise MntConfigError(f"Unknown preset '{preset}'")

        for item in overrides:
            _apply_override(data, item)

        try:
            return cls(**data)
        except ValidationError as e:
            raise MntConfigError(
                "Invalid experiment configuration",
                details={"errors": json.loads(e.json())}
            )

    def resolved(self) -> Dict[str, Any]:
        """Полная конфигурация в JSON-совместимом виде (для манифеста)"""
        return json.loads(self.model_dump_json())


def _apply_override(data: Dict[str, Any], item: str) -> None:
    """Применяет переопределение "a.b.c=value" к вложенному словарю"""
    if "=" not in item:
        raise MntConfigError(f"Override '{item}' must have the form key=value")
    key, raw = item.split("=", 1)
    parts = [part.strip() for part in key.strip().split(".") if part.strip()]
    if not parts:
        raise MntConfigError(f"Override '{item}' has an empty key")
    try:
        value: Any = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = data
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise MntConfigError(f"Override '{item}' descends into a non-table key '{part}'")
        node = child
    node[parts[-1]] = value


# Глобальный экземпляр конфигурации
default_config = ExperimentConfig()
