"""Статистический генератор матриц рассеяния S̃ и метрика связи mu_n"""

import hashlib
import struct
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from numpy.random import Generator, Philox

from .exceptions import (
    MntDimensionMismatchError,
    MntFileFormatError,
    MntInfeasibleTargetError,
    MntPassivityViolationError,
    MntReciprocityViolationError,
)
from .interfaces import LoggerInterface
from .log import DefaultLogger
from .numeric import ComplexMatrix, as_complex_matrix, largest_singular_value
from .schemas import EnsembleSpec, KappaVerdict, PortPartition

MNTS_MAGIC = b"MNTS"
MNTS_VERSION = 1
_MNTS_HEADER = struct.Struct("<4sIIIId")


def derive_seed(master_seed: int, *keys: Union[int, str, float]) -> int:
    """
    Детерминированно выводит 64-битное зерно дочернего потока

    Хеш BLAKE2b от текстового представления (master_seed, *keys), поэтому
    результат не зависит от порядка выполнения и платформы.
    """
    token = repr((int(master_seed),) + tuple(keys)).encode("utf-8")
    digest = hashlib.blake2b(token, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> Generator:
    """Генератор Philox (счетчиковый, переносимый между машинами)"""
    return Generator(Philox(seed))


class ScatteringMatrix:
    """
    Статическая матрица рассеяния S̃ с разбиением портов [T | R | S]

    Взаимность (S = Sᵀ) проверяется побитово, пассивность (sigma_max < 1) -
    при check_passivity=True. Блоки возвращаются как представления только
    для чтения.
    """

    def __init__(
        self,
        partition: PortPartition,
        s: np.ndarray,
        kappa: float = 1.0,
        check_passivity: bool = True,
    ):
        matrix = as_complex_matrix(np.array(s, dtype=np.complex128), "S")
        if matrix.shape != (partition.total, partition.total):
            raise MntDimensionMismatchError(
                "S shape does not match the port partition",
                details={"shape": matrix.shape, "n_ports": partition.total}
            )
        if not np.array_equal(matrix, matrix.T):
            raise MntReciprocityViolationError(
                details={"max_asymmetry": float(np.max(np.abs(matrix - matrix.T)))}
            )
        self.partition = partition
        self.kappa = float(kappa)
        self.sigma_max = largest_singular_value(matrix)
        if check_passivity and not self.sigma_max < 1.0:
            raise MntPassivityViolationError(
                details={"sigma_max": self.sigma_max, "kappa": self.kappa}
            )
        matrix.flags.writeable = False
        self._s = matrix

    @property
    def s(self) -> ComplexMatrix:
        return self._s

    @property
    def is_passive(self) -> bool:
        return self.sigma_max < 1.0

    @property
    def n_ris(self) -> int:
        return self.partition.n_ris

    def _block(self, rows: slice, cols: slice) -> ComplexMatrix:
        return self._s[rows, cols]

    @property
    def S_RT(self) -> ComplexMatrix:
        return self._block(self.partition.rx_slice, self.partition.tx_slice)

    @property
    def S_RS(self) -> ComplexMatrix:
        return self._block(self.partition.rx_slice, self.partition.ris_slice)

    @property
    def S_ST(self) -> ComplexMatrix:
        return self._block(self.partition.ris_slice, self.partition.tx_slice)

    @property
    def S_SS(self) -> ComplexMatrix:
        return self._block(self.partition.ris_slice, self.partition.ris_slice)

    @property
    def S_TT(self) -> ComplexMatrix:
        return self._block(self.partition.tx_slice, self.partition.tx_slice)

    @property
    def S_RR(self) -> ComplexMatrix:
        return self._block(self.partition.rx_slice, self.partition.rx_slice)

    def with_ris_block(self, s_ss: np.ndarray, check_passivity: bool = True) -> "ScatteringMatrix":
        """Копия с замененным блоком S_SS (блок должен быть симметричным)"""
        matrix = np.array(self._s)
        ris = self.partition.ris_slice
        matrix[ris, ris] = s_ss
        return ScatteringMatrix(self.partition, matrix, self.kappa, check_passivity)

    def with_ris_coupling_scaled(self, factor: float, check_passivity: bool = True) -> "ScatteringMatrix":
        """Копия, где внедиагональные элементы S_SS умножены на factor"""
        block = np.array(self.S_SS)
        block[~np.eye(self.n_ris, dtype=bool)] *= factor
        scaled = self.with_ris_block(block, check_passivity)
        scaled.kappa = self.kappa * factor
        return scaled


def _complex_normal(rng: Generator, count: int, variance: float) -> np.ndarray:
    """CN(0, v): вещественная и мнимая части независимы и имеют дисперсию v/2"""
    parts = rng.standard_normal((count, 2))
    return np.sqrt(variance / 2.0) * (parts[:, 0] + 1j * parts[:, 1])


def _draw_entries(spec: EnsembleSpec) -> np.ndarray:
    """Порядок выборки фиксирован: верхний треугольник построчно, затем диагональ"""
    n = spec.partition.total
    rng = make_rng(spec.rng_seed)
    upper_rows, upper_cols = np.triu_indices(n, k=1)
    offdiag = _complex_normal(rng, upper_rows.size, spec.offdiag_variance)
    diagonal = _complex_normal(rng, n, 2.0 * spec.offdiag_variance)

    s = np.zeros((n, n), dtype=np.complex128)
    s[upper_rows, upper_cols] = offdiag
    # копия, а не (A + Aᵀ)/2: дисперсия внедиагональных элементов сохраняется
    s[upper_cols, upper_rows] = offdiag
    s[np.diag_indices(n)] = diagonal
    s *= spec.global_scale

    ris = spec.partition.ris_slice
    ris_block = s[ris, ris]
    ris_block[~np.eye(spec.partition.n_ris, dtype=bool)] *= spec.kappa
    return s


def draw_scattering_matrix(
    spec: EnsembleSpec,
    logger: Optional[LoggerInterface] = None
) -> ScatteringMatrix:
    """
    Генерирует одну реализацию S̃ по спецификации ансамбля

    Args:
        spec: Параметры ансамбля и зерно
        logger: Логгер (для предупреждения о непассивной реализации)

    Returns:
        ScatteringMatrix: Взаимная матрица; пассивная при enforce_passivity

    Raises:
        MntPassivityViolationError: sigma_max >= 1 и enforce_passivity=True
    """
    s = _draw_entries(spec)
    matrix = ScatteringMatrix(spec.partition, s, spec.kappa, check_passivity=spec.enforce_passivity)
    if not matrix.is_passive:
        (logger or DefaultLogger()).warning(
            "Реализация S̃ не пассивна",
            sigma_max=matrix.sigma_max,
            kappa=spec.kappa,
            seed=spec.rng_seed,
        )
    return matrix


def ris_coupling_norm(s: ScatteringMatrix) -> float:
    """||S_SS - diag(S_SS)||_2 (числитель mu_n, не зависит от конфигурации)"""
    block = np.array(s.S_SS)
    np.fill_diagonal(block, 0.0)
    return largest_singular_value(block)


def mutual_coupling_strength(
    s: ScatteringMatrix,
    n_probe_configs: int = 100,
    rng_seed: int = 0,
) -> float:
    """
    Метрика связи mu_n, усредненная по случайным бинарным конфигурациям

    Знаменатель ||Φ⁻¹ - diag(S_SS)||_2 - норма диагональной матрицы, т.е.
    max_i |c_i - s_ii| (для c_i = ±1 Φ⁻¹ = Φ).

    Args:
        s: Матрица рассеяния
        n_probe_configs: Число пробных конфигураций
        rng_seed: Зерно отдельного потока пробных конфигураций
    """
    if n_probe_configs < 1:
        raise ValueError("n_probe_configs must be >= 1")
    numerator = ris_coupling_norm(s)
    rng = make_rng(derive_seed(rng_seed, "mu-probes"))
    samples = 2.0 * rng.integers(0, 2, size=(n_probe_configs, s.n_ris)) - 1.0
    self_terms = np.diag(s.S_SS)
    denominators = np.max(np.abs(samples - self_terms[np.newaxis, :]), axis=1)
    return float(np.mean(numerator / denominators))


def validate_kappa(
    spec_without_kappa: EnsembleSpec,
    kappa: float,
    n_trials: int = 50,
) -> KappaVerdict:
    """
    Проверяет пассивность n_trials реализаций при данном kappa

    Зерна реализаций выводятся из spec.rng_seed, поэтому разные kappa
    сравниваются на одних и тех же исходных выборках.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    sigma_values: List[float] = []
    for trial in range(n_trials):
        trial_spec = spec_without_kappa.model_copy(update={
            "kappa": kappa,
            "rng_seed": derive_seed(spec_without_kappa.rng_seed, "kappa-trial", trial),
        })
        sigma_values.append(largest_singular_value(_draw_entries(trial_spec)))
    sigma = np.asarray(sigma_values)
    return KappaVerdict(
        kappa=kappa,
        n_trials=n_trials,
        feasible_fraction=float(np.mean(sigma < 1.0)),
        worst_sigma_max=float(np.max(sigma)),
    )


def mean_unit_coupling(
    spec: EnsembleSpec,
    n_calib: int = 200,
    n_probe_configs: int = 100,
) -> float:
    """Среднее mu_n по n_calib реализациям при kappa = 1 (пассивность не требуется)"""
    unit_spec = spec.model_copy(update={"kappa": 1.0, "enforce_passivity": False})
    values = []
    for index in range(n_calib):
        realization = ScatteringMatrix(
            spec.partition,
            _draw_entries(unit_spec.with_seed(derive_seed(spec.rng_seed, "calibration", index))),
            kappa=1.0,
            check_passivity=False,
        )
        values.append(mutual_coupling_strength(
            realization, n_probe_configs, derive_seed(spec.rng_seed, "calibration-probes", index)
        ))
    return float(np.mean(values))


def calibrate_kappa_verdict(
    partition: PortPartition,
    target_mu: float,
    rng_seed: int = 0,
    n_calib: int = 200,
    n_trials: int = 50,
    n_probe_configs: int = 100,
    base_spec: Optional[EnsembleSpec] = None,
    logger: Optional[LoggerInterface] = None,
) -> KappaVerdict:
    """
    Подбирает kappa* для целевого среднего mu_n по линейности mu_n(kappa)

    Args:
        partition: Разбиение портов
        target_mu: Целевое значение mu_n > 0
        rng_seed: Зерно калибровки
        n_calib: Число реализаций при kappa = 1
        n_trials: Число реализаций для проверки пассивности kappa*
        base_spec: Остальные параметры генератора (масштаб, дисперсия)

    Returns:
        KappaVerdict: kappa* = target_mu / mean(mu_n(1)) и пассивность n_trials реализаций при нем

    Raises:
        MntInfeasibleTargetError: kappa* нарушает пассивность, а
            base_spec.enforce_passivity включен
    """
    if not target_mu > 0:
        raise ValueError("target_mu must be positive")
    logger = logger or DefaultLogger()
    spec = (base_spec or EnsembleSpec(partition=partition)).model_copy(
        update={"partition": partition, "rng_seed": rng_seed}
    )
    unit_mu = mean_unit_coupling(spec, n_calib, n_probe_configs)
    kappa = target_mu / unit_mu
    verdict = validate_kappa(spec, kappa, n_trials)
    logger.debug(
        "Калибровка kappa",
        target_mu=target_mu,
        unit_mu=unit_mu,
        kappa=kappa,
        worst_sigma_max=verdict.worst_sigma_max,
    )
    if not verdict.feasible and not spec.enforce_passivity:
        logger.warning(
            "kappa* нарушает пассивность, реализации будут непассивными",
            target_mu=target_mu,
            kappa=kappa,
            feasible_fraction=verdict.feasible_fraction,
        )
    elif not verdict.feasible:
        raise MntInfeasibleTargetError(
            f"Target mu_n={target_mu} needs kappa={kappa:.4g}, which violates passivity",
            details={
                "kappa": kappa,
                "unit_mu": unit_mu,
                "feasible_fraction": verdict.feasible_fraction,
                "worst_sigma_max": verdict.worst_sigma_max,
            }
        )
    return verdict


def calibrate_kappa(
    partition: PortPartition,
    target_mu: float,
    rng_seed: int = 0,
    n_calib: int = 200,
    n_trials: int = 50,
    n_probe_configs: int = 100,
    base_spec: Optional[EnsembleSpec] = None,
    logger: Optional[LoggerInterface] = None,
) -> float:
    """kappa* для целевого mu_n; см. calibrate_kappa_verdict"""
    return calibrate_kappa_verdict(
        partition, target_mu, rng_seed, n_calib, n_trials, n_probe_configs, base_spec, logger
    ).kappa


def write_scattering_matrix(path: Union[str, Path], s: ScatteringMatrix) -> None:
    """Записывает S̃ в контейнер MNTS (little-endian, построчно)"""
    p = s.partition
    header = _MNTS_HEADER.pack(MNTS_MAGIC, MNTS_VERSION, p.n_tx, p.n_rx, p.n_ris, s.kappa)
    payload = np.ascontiguousarray(s.s, dtype="<c16").tobytes()
    Path(path).write_bytes(header + payload)


def read_scattering_matrix(path: Union[str, Path], check_passivity: bool = True) -> ScatteringMatrix:
    """
    Читает S̃ из контейнера MNTS

    Raises:
        MntFileFormatError: Неверная сигнатура, версия или размер
    """
    raw = Path(path).read_bytes()
    if len(raw) < _MNTS_HEADER.size:
        raise MntFileFormatError("File is shorter than the MNTS header", details={"path": str(path)})
    magic, version, n_tx, n_rx, n_ris, kappa = _MNTS_HEADER.unpack_from(raw)
    if magic != MNTS_MAGIC:
        raise MntFileFormatError("Bad magic bytes", details={"path": str(path), "magic": magic.hex()})
    if version != MNTS_VERSION:
        raise MntFileFormatError("Unsupported MNTS version", details={"version": version})
    if min(n_tx, n_rx, n_ris) < 1:
        raise MntFileFormatError("Port counts must be positive", details={"n_tx": n_tx, "n_rx": n_rx, "n_ris": n_ris})
    partition = PortPartition(n_tx=n_tx, n_rx=n_rx, n_ris=n_ris)
    n = partition.total
    expected = _MNTS_HEADER.size + 16 * n * n
    if len(raw) != expected:
        raise MntFileFormatError(
            "Payload size does not match the header",
            details={"expected_bytes": expected, "actual_bytes": len(raw)}
        )
    entries = np.frombuffer(raw, dtype="<c16", offset=_MNTS_HEADER.size).reshape(n, n)
    return ScatteringMatrix(partition, entries.astype(np.complex128), kappa, check_passivity)
