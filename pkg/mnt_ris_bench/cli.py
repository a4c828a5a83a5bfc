"""Командная строка mnt-ris: generate, optimize, sweep, validate"""

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .config import ExperimentConfig
from .ensemble import (
    calibrate_kappa,
    derive_seed,
    draw_scattering_matrix,
    mutual_coupling_strength,
    read_scattering_matrix,
    write_scattering_matrix,
)
from .exceptions import (
    MntConfigError,
    MntFileFormatError,
    MntInfeasibleTargetError,
    MntPassivityViolationError,
    MntReciprocityViolationError,
    MntRisError,
)
from .harness import ExperimentPlan, run_sweep, write_manifest
from .log import DefaultLogger, configure_logging
from .optim import run_method
from .schemas import RealizationRecord, RunManifest, method_from_name
from .validation import CHECKS, run_checks

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_GENERATION_FAILED = 3
EXIT_CELLS_FAILED = 4

_GENERATION_ERRORS = (
    MntPassivityViolationError,
    MntInfeasibleTargetError,
    MntReciprocityViolationError,
    MntFileFormatError,
)

REALIZATION_COLUMNS = ["index", "file", "kappa", "realized_mu", "sigma_max"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mnt-ris",
        description="Ансамбли матриц рассеяния и оптимизация 1-битных RIS с взаимной связью",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="TOML файл конфигурации")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="Переопределение параметра (например tabp.e_max=200), можно повторять",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Отладочное логирование")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Сгенерировать реализации S̃ в файлы MNTS")
    _add_partition_flags(gen)
    strength = gen.add_mutually_exclusive_group(required=True)
    strength.add_argument("--kappa", type=float, help="Множитель внедиагональных элементов S_SS")
    strength.add_argument("--target-mu", type=float, help="Целевое среднее mu_n (kappa калибруется)")
    gen.add_argument("--count", type=int, default=1, help="Число реализаций")
    gen.add_argument("--seed", type=int, help="Главное зерно")
    gen.add_argument("--output-dir", type=Path, help="Каталог для файлов")

    opt = sub.add_parser("optimize", help="Один запуск метода на одной реализации")
    _add_partition_flags(opt)
    opt.add_argument("--method", required=True, help="ds, rr-cd, casc-cd, mnt-cd, casc-tabp, mnt-tabp, ga")
    opt.add_argument("--init", choices=["random", "ds", "rr-cd"], help="Инициализация CD/TABP")
    opt.add_argument("--m", type=int, default=0, help="Размер словаря / популяции")
    opt.add_argument("--matrix", type=Path, help="Файл MNTS (иначе генерируется)")
    strength = opt.add_mutually_exclusive_group()
    strength.add_argument("--kappa", type=float, help="kappa для генерации")
    strength.add_argument("--target-mu", type=float, help="Целевое mu_n для генерации")
    opt.add_argument("--seed", type=int, help="Главное зерно")

    sweep = sub.add_parser("sweep", help="Полный эксперимент Монте-Карло")
    sweep.add_argument("--preset", choices=["desk", "full"], default="desk", help="База без файла конфигурации")
    sweep.add_argument("--workers", type=int, help="Размер пула процессов")
    sweep.add_argument("--output-dir", type=Path, help="Каталог результатов")
    sweep.add_argument("--seed", type=int, help="Главное зерно")
    sweep.add_argument("--dry-run", action="store_true", help="Показать план и число ячеек без вычислений")

    val = sub.add_parser("validate", help="Проверки инвариантов")
    val.add_argument(
        "--only", action="append", default=[], choices=sorted(CHECKS),
        help="Выполнить только указанную проверку (можно повторять)",
    )
    val.add_argument("--seed", type=int, default=0, help="Зерно проверок")
    return parser


def _add_partition_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-tx", type=int, help="Число передающих антенн")
    parser.add_argument("--n-rx", type=int, help="Число приемных антенн")
    parser.add_argument("--n-ris", type=int, help="Число элементов RIS")


def _flag_overrides(args: argparse.Namespace) -> List[str]:
    """Флаги командной строки как переопределения; применяются последними"""
    mapping = {
        "n_tx": "n_tx",
        "n_rx": "n_rx",
        "n_ris": "n_ris",
        "seed": "master_seed",
        "workers": "workers",
        "output_dir": "output_dir",
    }
    overrides = []
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={json.dumps(str(value)) if isinstance(value, Path) else value}")
    return overrides


def load_config(args: argparse.Namespace, preset: str = "full") -> ExperimentConfig:
    return ExperimentConfig.load(args.config, list(args.overrides) + _flag_overrides(args), preset=preset)


def _resolve_kappa(config: ExperimentConfig, kappa: Optional[float], target_mu: Optional[float]) -> float:
    if kappa is not None:
        if kappa < 0:
            raise MntConfigError("kappa must be non-negative")
        return kappa
    if target_mu is None:
        return 1.0
    if not target_mu > 0:
        raise MntConfigError("target mu must be positive")
    return calibrate_kappa(
        config.partition,
        target_mu,
        rng_seed=derive_seed(config.master_seed, "calibration"),
        n_calib=config.n_calib,
        n_trials=config.kappa_trials,
        n_probe_configs=config.n_probe_configs,
        base_spec=config.ensemble_spec(),
    )


def cmd_generate(args: argparse.Namespace) -> int:
    """Файлы MNTS и CSV отчет с mu_n и sigma_max каждой реализации"""
    if args.count < 1:
        raise MntConfigError("--count must be at least 1")
    config = load_config(args)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    kappa = _resolve_kappa(config, args.kappa, args.target_mu)

    records: List[RealizationRecord] = []
    for index in range(args.count):
        seed = derive_seed(config.master_seed, "generate", index)
        s = draw_scattering_matrix(config.ensemble_spec(kappa, seed))
        path = output_dir / f"realization_{index:05d}.mnts"
        write_scattering_matrix(path, s)
        records.append(RealizationRecord(
            index=index,
            file=path.name,
            kappa=kappa,
            realized_mu=mutual_coupling_strength(s, config.n_probe_configs, seed),
            sigma_max=s.sigma_max,
        ))

    report_path = output_dir / "realizations.csv"
    with open(report_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=REALIZATION_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow({key: repr(value) if isinstance(value, float) else value
                             for key, value in record.model_dump().items()})
    write_manifest(output_dir / config.manifest_file, RunManifest(
        command="generate",
        version=__version__,
        config=config.resolved(),
        kappas={"generate": kappa},
        outputs={"report": str(report_path), "matrices": str(output_dir)},
        extra={"count": args.count, "target_mu": args.target_mu},
    ))
    DefaultLogger().info("Реализации записаны", count=args.count, kappa=kappa, report=str(report_path))
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    """Отчет одного запуска в JSON на stdout"""
    config = load_config(args)
    method = method_from_name(args.method, args.init)
    if args.m < 0:
        raise MntConfigError("--m must be non-negative")
    if not method.applicable(args.m):
        raise MntConfigError(f"{method.name} is not defined for M={args.m}")

    if args.matrix is not None:
        s = read_scattering_matrix(args.matrix, check_passivity=config.enforce_passivity)
        seed = derive_seed(config.master_seed, "optimize", str(args.matrix.name))
    else:
        kappa = _resolve_kappa(config, args.kappa, args.target_mu)
        seed = derive_seed(config.master_seed, "optimize")
        s = draw_scattering_matrix(config.ensemble_spec(kappa, seed))

    report = run_method(s, method, args.m, rng_seed=seed, config=config)
    payload = report.model_dump()
    payload["optimizer_evaluations"] = report.optimizer_evaluations
    payload["realized_mu"] = mutual_coupling_strength(s, config.n_probe_configs, seed)
    payload["kappa"] = s.kappa
    payload["seed"] = seed
    payload["version"] = __version__
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """CSV с ячейками и сводкой плюс манифест; код 4, если были ячейки с ошибкой"""
    config = load_config(args, preset=args.preset)
    if args.dry_run:
        plan = ExperimentPlan(config)
        sys.stdout.write(json.dumps({"plan": plan.describe(), "config": config.resolved()}, indent=2) + "\n")
        return EXIT_OK
    outcome = run_sweep(config)
    if outcome.n_errors:
        DefaultLogger().warning("Часть ячеек завершилась ошибкой", errors=outcome.n_errors)
        return EXIT_CELLS_FAILED
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    """Таблица проверок: имя, допуск, наблюдаемая ошибка, результат"""
    results = run_checks(args.only or None, rng_seed=args.seed)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        sys.stdout.write(
            f"{status} {result.name:<13} tolerance={result.tolerance:.1e} "
            f"observed={result.observed:.3e} {result.detail}\n"
        )
    return EXIT_OK if all(result.passed for result in results) else EXIT_VALIDATION_FAILED


COMMANDS = {
    "generate": cmd_generate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    logger = DefaultLogger()
    try:
        return COMMANDS[args.command](args)
    except MntConfigError as e:
        logger.error(e.message, details=e.details)
        return EXIT_CONFIG_ERROR
    except _GENERATION_ERRORS as e:
        logger.error(e.message, details=e.details)
        return EXIT_GENERATION_FAILED
    except MntRisError as e:
        # прочие численные сбои одного запуска
        logger.error(e.message, details=e.details)
        return EXIT_GENERATION_FAILED


if __name__ == "__main__":
    sys.exit(main())
