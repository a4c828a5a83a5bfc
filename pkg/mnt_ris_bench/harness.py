"""Эксперимент Монте-Карло: перебор mu_n, M и реализаций S̃, агрегирование результатов"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .config import ExperimentConfig, default_config
from .ensemble import calibrate_kappa_verdict, derive_seed, draw_scattering_matrix, mutual_coupling_strength
from .exceptions import MntRisError
from .interfaces import LoggerInterface
from .log import DefaultLogger
from .optim import build_dictionary, run_method
from .schemas import (
    RESULT_COLUMNS,
    SUMMARY_COLUMNS,
    CellResult,
    MethodSpec,
    RunManifest,
    SummaryRow,
)


class ExperimentPlan:
    """Состав эксперимента: применимые пары (метод, M) и число ячеек"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.pairs: List[Tuple[MethodSpec, int]] = []
        self.skipped: List[Tuple[str, int]] = []
        for m in config.m_values:
            for method in config.methods:
                if method.applicable(m):
                    self.pairs.append((method, m))
                else:
                    self.skipped.append((method.name, m))

    @property
    def n_cells(self) -> int:
        return len(self.config.mu_targets) * self.config.n_realizations * len(self.pairs)

    @property
    def n_tasks(self) -> int:
        return len(self.config.mu_targets) * self.config.n_realizations

    def describe(self) -> Dict[str, object]:
        return {
            "mu_targets": list(self.config.mu_targets),
            "m_values": list(self.config.m_values),
            "methods": [method.name for method in self.config.methods],
            "n_ris": self.config.n_ris,
            "n_realizations": self.config.n_realizations,
            "n_cells": self.n_cells,
            "skipped_pairs": [f"{name}@M={m}" for name, m in self.skipped],
        }


def _error_cell(mu_target: float, realized_mu: float, method: str, m: int, index: int, error: str) -> CellResult:
    return CellResult(
        mu_target=mu_target,
        realized_mu=realized_mu,
        m=m,
        method=method,
        realization_index=index,
        error=error,
    )


def _describe_error(e: Exception) -> str:
    return f"{type(e).__name__}: {e}"


def run_realization(
    config: ExperimentConfig,
    mu_index: int,
    kappa: float,
    realization: int,
    logger: Optional[LoggerInterface] = None,
) -> List[CellResult]:
    """
    Все ячейки одной реализации S̃: словарь строится один раз на M и общий для методов

    Ошибка ячейки не прерывает остальные, а попадает в поле error.
    """
    logger = logger or DefaultLogger()
    mu_target = config.mu_targets[mu_index]
    plan = ExperimentPlan(config)
    seed = derive_seed(config.master_seed, "realization", mu_index, realization)

    try:
        s = draw_scattering_matrix(config.ensemble_spec(kappa, seed), logger)
        realized_mu = mutual_coupling_strength(s, config.n_probe_configs, seed)
    except MntRisError as e:
        return [
            _error_cell(mu_target, math.nan, method.name, m, realization, _describe_error(e))
            for method, m in plan.pairs
        ]

    cells: List[CellResult] = []
    for m in config.m_values:
        pairs = [method for method, pair_m in plan.pairs if pair_m == m]
        dictionary = None
        dictionary_error: Optional[str] = None
        if any(method.needs_dictionary(m) for method in pairs):
            try:
                dictionary = build_dictionary(s, m, derive_seed(seed, "dictionary", m))
            except MntRisError as e:
                dictionary_error = _describe_error(e)

        for method in pairs:
            if dictionary_error is not None and method.needs_dictionary(m):
                cells.append(_error_cell(mu_target, realized_mu, method.name, m, realization, dictionary_error))
                continue
            try:
                report = run_method(
                    s, method, m,
                    dictionary=dictionary if method.needs_dictionary(m) else None,
                    rng_seed=derive_seed(seed, "cell", m),
                    config=config,
                    logger=logger,
                )
            except (MntRisError, ValueError) as e:
                logger.warning(
                    "Ячейка завершилась ошибкой",
                    method=method.name,
                    m=m,
                    realization=realization,
                    error=_describe_error(e),
                )
                cells.append(_error_cell(mu_target, realized_mu, method.name, m, realization, _describe_error(e)))
                continue
            cells.append(CellResult(
                mu_target=mu_target,
                realized_mu=realized_mu,
                m=m,
                method=method.name,
                realization_index=realization,
                final_gain=report.final_gain_mnt,
                model_evaluations=report.model_evaluations,
                init_evaluations=report.init_evaluations,
                peak_stored_configs=report.peak_stored_configs,
                wall_time=report.wall_time,
                converged=report.converged,
            ))
    return cells


def _run_realization_task(
    config: ExperimentConfig,
    mu_index: int,
    kappa: float,
    realization: int,
) -> List[CellResult]:
    return run_realization(config, mu_index, kappa, realization)


class ExperimentRunner:
    """Запуск полного эксперимента по конфигурации"""

    def __init__(
        self,
        config: Optional[ExperimentConfig] = None,
        logger: Optional[LoggerInterface] = None
    ):
        self.config = config or default_config
        self.logger = logger or DefaultLogger()
        self.plan = ExperimentPlan(self.config)
        self.kappas: Dict[int, float] = {}
        self.calibration_errors: Dict[int, str] = {}
        self.worst_sigma_max: Dict[int, float] = {}

    def calibrate(self) -> Dict[int, float]:
        """
        Калибрует kappa* для каждого целевого mu_n

        Недостижимые цели запоминаются в calibration_errors; их ячейки
        становятся ячейками с ошибкой.
        """
        self.kappas = {}
        self.calibration_errors = {}
        self.worst_sigma_max = {}
        for mu_index, target in enumerate(self.config.mu_targets):
            try:
                verdict = calibrate_kappa_verdict(
                    self.config.partition,
                    target,
                    rng_seed=derive_seed(self.config.master_seed, "calibration", mu_index),
                    n_calib=self.config.n_calib,
                    n_trials=self.config.kappa_trials,
                    n_probe_configs=self.config.n_probe_configs,
                    base_spec=self.config.ensemble_spec(),
                    logger=self.logger,
                )
            except MntRisError as e:
                self.calibration_errors[mu_index] = _describe_error(e)
                self.logger.error(
                    "Калибровка kappa не удалась",
                    mu_target=target,
                    error=self.calibration_errors[mu_index],
                )
                continue
            self.kappas[mu_index] = verdict.kappa
            self.worst_sigma_max[mu_index] = verdict.worst_sigma_max
            self.logger.info(
                "kappa откалиброван",
                mu_target=target,
                kappa=verdict.kappa,
                worst_sigma_max=verdict.worst_sigma_max,
            )
        return self.kappas

    def _calibration_error_cells(self, mu_index: int) -> List[CellResult]:
        mu_target = self.config.mu_targets[mu_index]
        error = self.calibration_errors[mu_index]
        return [
            _error_cell(mu_target, math.nan, method.name, m, realization, error)
            for realization in range(self.config.n_realizations)
            for method, m in self.plan.pairs
        ]

    def run(self) -> List[CellResult]:
        """
        Выполняет все ячейки; при workers > 1 реализации распределяются по пулу процессов

        Returns:
            List[CellResult]: Результаты, отсортированные по (mu, реализация, метод, M)
        """
        if not self.kappas and not self.calibration_errors:
            self.calibrate()

        results: List[CellResult] = []
        tasks: List[Tuple[int, float, int]] = []
        for mu_index in range(len(self.config.mu_targets)):
            if mu_index in self.calibration_errors:
                results.extend(self._calibration_error_cells(mu_index))
                continue
            for realization in range(self.config.n_realizations):
                tasks.append((mu_index, self.kappas[mu_index], realization))

        self.logger.info(
            "Запуск эксперимента",
            tasks=len(tasks),
            cells=self.plan.n_cells,
            workers=self.config.workers,
        )
        if self.config.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers) as pool:
                futures = [pool.submit(_run_realization_task, self.config, *task) for task in tasks]
                for done, future in enumerate(as_completed(futures), start=1):
                    results.extend(future.result())
                    self._report_progress(done, len(tasks))
        else:
            for done, task in enumerate(tasks, start=1):
                results.extend(run_realization(self.config, *task, logger=self.logger))
                self._report_progress(done, len(tasks))

        results.sort(key=lambda cell: cell.sort_key)
        return results

    def _report_progress(self, done: int, total: int) -> None:
        step = max(1, total // 20)
        if done % step == 0 or done == total:
            self.logger.info("Прогресс", done=done, total=total)

    def manifest(self, command: str, outputs: Dict[str, str], results: List[CellResult]) -> RunManifest:
        from . import __version__

        return RunManifest(
            command=command,
            version=__version__,
            config=self.config.resolved(),
            kappas={repr(self.config.mu_targets[i]): kappa for i, kappa in sorted(self.kappas.items())},
            outputs=outputs,
            extra={
                "plan": self.plan.describe(),
                "n_results": len(results),
                "n_errors": sum(1 for cell in results if cell.error),
                "calibration_errors": {
                    repr(self.config.mu_targets[i]): error for i, error in sorted(self.calibration_errors.items())
                },
                "worst_sigma_max": {
                    repr(self.config.mu_targets[i]): sigma for i, sigma in sorted(self.worst_sigma_max.items())
                },
            },
        )


def run_experiment(
    config: Optional[ExperimentConfig] = None,
    logger: Optional[LoggerInterface] = None
) -> List[CellResult]:
    """Калибровка и все ячейки эксперимента"""
    runner = ExperimentRunner(config, logger)
    runner.calibrate()
    return runner.run()


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def aggregate(results: Iterable[CellResult]) -> List[SummaryRow]:
    """
    Сводка по (mu_target, method, M): среднее и стандартная ошибка усиления,
    средние счетчики; ячейки с ошибкой исключаются и подсчитываются
    """
    groups: Dict[Tuple[float, str, int], List[CellResult]] = {}
    for cell in results:
        groups.setdefault((cell.mu_target, cell.method, cell.m), []).append(cell)
    if not groups:
        raise ValueError("cannot aggregate an empty result stream")

    rows: List[SummaryRow] = []
    for (mu_target, method, m), cells in sorted(groups.items()):
        ok = [cell for cell in cells if not cell.error]
        gains = [cell.final_gain for cell in ok]
        stderr = float(np.std(gains, ddof=1) / math.sqrt(len(gains))) if len(gains) > 1 else 0.0
        rows.append(SummaryRow(
            mu_target=mu_target,
            method=method,
            m=m,
            n_cells=len(ok),
            n_errors=len(cells) - len(ok),
            realized_mu_mean=_mean([cell.realized_mu for cell in ok]),
            gain_mean=_mean(gains),
            gain_stderr=stderr,
            model_evals_mean=_mean([cell.model_evaluations for cell in ok]),
            optimizer_evals_mean=_mean([cell.model_evaluations - cell.init_evaluations for cell in ok]),
            init_evals_mean=_mean([cell.init_evaluations for cell in ok]),
            peak_configs_mean=_mean([cell.peak_stored_configs for cell in ok]),
        ))
    return rows


def write_results_csv(path: Path, results: Iterable[CellResult], record_wall_time: bool = True) -> None:
    ordered = sorted(results, key=lambda cell: cell.sort_key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for cell in ordered:
            writer.writerow(cell.to_csv_row(record_wall_time))


def read_results_csv(path: Path) -> List[CellResult]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [CellResult.from_csv_row(row) for row in csv.DictReader(fh)]


def write_summary_csv(path: Path, rows: Iterable[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.to_csv_row())


def write_manifest(path: Path, manifest: RunManifest) -> None:
    Path(path).write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")


class SweepOutcome:
    """Итог команды sweep"""

    def __init__(self, results: List[CellResult], summary: List[SummaryRow], manifest: RunManifest):
        self.results = results
        self.summary = summary
        self.manifest = manifest

    @property
    def n_errors(self) -> int:
        return sum(1 for cell in self.results if cell.error)


def run_sweep(
    config: Optional[ExperimentConfig] = None,
    logger: Optional[LoggerInterface] = None,
    command: str = "sweep",
) -> SweepOutcome:
    """Эксперимент целиком: результаты, сводка и манифест в config.output_dir"""
    config = config or default_config
    runner = ExperimentRunner(config, logger)
    runner.calibrate()
    results = runner.run()
    summary = aggregate(results) if results else []

    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        "results": str(output_dir / config.results_file),
        "summary": str(output_dir / config.summary_file),
        "manifest": str(output_dir / config.manifest_file),
    }
    write_results_csv(Path(outputs["results"]), results, config.record_wall_time)
    write_summary_csv(Path(outputs["summary"]), summary)
    manifest = runner.manifest(command, outputs, results)
    write_manifest(Path(outputs["manifest"]), manifest)
    runner.logger.info("Результаты записаны", **outputs)
    return SweepOutcome(results, summary, manifest)
