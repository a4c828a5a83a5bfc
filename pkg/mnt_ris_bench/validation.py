"""Проверки инвариантов на малых размерах (команда validate)"""

from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import NumericTolerances, default_tolerances
from .ensemble import (
    ScatteringMatrix,
    derive_seed,
    draw_scattering_matrix,
    make_rng,
    mutual_coupling_strength,
    validate_kappa,
)
from .exceptions import MntConfigError
from .models import EvaluationCounter, MntEvaluator, casc_channel, mnt_channel, neumann_channel, random_configuration
from .numeric import solve_linear
from .optim import relaxed_cost_gradient
from .schemas import CheckResult, EnsembleSpec, Fidelity, PortPartition, TabpSchedule


def _siso_matrix(n_ris: int, seed: int, kappa: float = 1.0) -> ScatteringMatrix:
    spec = EnsembleSpec(
        partition=PortPartition(n_tx=1, n_rx=1, n_ris=n_ris),
        kappa=kappa,
        rng_seed=seed,
        enforce_passivity=False,
    )
    return draw_scattering_matrix(spec)


def _relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    scale = np.linalg.norm(expected)
    return float(np.linalg.norm(actual - expected) / (scale if scale > 0 else 1.0))


def check_solve(rng_seed: int = 0, tolerances: NumericTolerances = default_tolerances) -> CheckResult:
    """Обратная ошибка LU решения на случайных хорошо обусловленных системах"""
    rng = make_rng(derive_seed(rng_seed, "check-solve"))
    worst = 0.0
    for n in (1, 4, 16, 64):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 2.0 * np.sqrt(n) * np.eye(n)
        b = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
        x = solve_linear(a, b, tolerances)
        residual = np.linalg.norm(a @ x - b) / (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
        worst = max(worst, float(residual))
    return CheckResult(
        name="solve",
        tolerance=tolerances.solve_rtol,
        observed=worst,
        passed=worst <= tolerances.solve_rtol,
        detail="max backward error over n in {1, 4, 16, 64}",
    )


def check_woodbury(
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
    n_realizations: int = 10,
    flips_per_realization: int = 100,
    n_ris: int = 16,
) -> CheckResult:
    """Канал после переключения через ранг-1 обновление против полного пересчета"""
    worst_channel = 0.0
    worst_inverse = 0.0
    for index in range(n_realizations):
        seed = derive_seed(rng_seed, "check-woodbury", index)
        s = _siso_matrix(n_ris, seed, kappa=2.0)
        rng = make_rng(derive_seed(seed, "flips"))
        evaluator = MntEvaluator(s, random_configuration(rng, n_ris), EvaluationCounter(), tolerances)
        for _ in range(flips_per_realization):
            i = int(rng.integers(0, n_ris))
            channel, cache = evaluator.flip_delta(i)
            flipped = evaluator.config
            flipped[i] = -flipped[i]
            worst_channel = max(worst_channel, _relative_error(channel, mnt_channel(s, flipped)))
            if rng.random() < 0.5:
                evaluator.commit_flip(cache)
        worst_inverse = max(worst_inverse, _relative_error(evaluator.inverse, evaluator.scratch_inverse()))
    observed = max(worst_channel, worst_inverse)
    return CheckResult(
        name="woodbury",
        tolerance=tolerances.drift_rtol,
        observed=observed,
        passed=observed <= tolerances.drift_rtol,
        detail=f"channel error {worst_channel:.3e}, cached inverse drift {worst_inverse:.3e}",
    )


def _finite_difference(
    s: ScatteringMatrix,
    fidelity: Fidelity,
    z: np.ndarray,
    t: float,
    schedule: TabpSchedule,
    step: float,
) -> np.ndarray:
    grad = np.zeros_like(z)
    for i in range(z.size):
        forward = z.copy()
        backward = z.copy()
        forward[i] += step
        backward[i] -= step
        c_plus, _ = relaxed_cost_gradient(s, fidelity, forward, t, schedule)
        c_minus, _ = relaxed_cost_gradient(s, fidelity, backward, t, schedule)
        grad[i] = (c_plus - c_minus) / (2.0 * step)
    return grad


def gradient_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Покоординатная относительная ошибка с полом 1e-2 * max|numeric|"""
    floor = max(1e-2 * float(np.max(np.abs(numeric))), 1e-300)
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.abs(numeric), floor)))


def check_gradient(
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
    n_points: int = 100,
    n_ris: int = 8,
) -> CheckResult:
    """Аналитический градиент TABP против центральных конечных разностей"""
    schedule = TabpSchedule()
    worst: Dict[str, float] = {}
    for fidelity in (Fidelity.MNT, Fidelity.CASC):
        worst[fidelity.value] = 0.0
        for point in range(n_points):
            seed = derive_seed(rng_seed, "check-gradient", fidelity.value, point)
            s = _siso_matrix(n_ris, seed, kappa=2.0)
            rng = make_rng(derive_seed(seed, "point"))
            z = rng.uniform(-1.0, 1.0, size=n_ris)
            t = float(rng.uniform(0.5, 1.0))
            _, analytic = relaxed_cost_gradient(s, fidelity, z, t, schedule)
            numeric = _finite_difference(s, fidelity, z, t, schedule, tolerances.gradient_fd_step)
            worst[fidelity.value] = max(worst[fidelity.value], gradient_relative_error(analytic, numeric))
    observed = max(worst.values())
    return CheckResult(
        name="gradient",
        tolerance=tolerances.gradient_rtol,
        observed=observed,
        passed=observed < tolerances.gradient_rtol,
        detail=", ".join(f"{name} {value:.3e}" for name, value in worst.items()),
    )


def check_neumann(
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
    n_realizations: int = 10,
    n_ris: int = 16,
    k_max: int = 150,
    window: int = 20,
) -> CheckResult:
    """Частичные суммы ряда сходятся к точному каналу, убывание членов ~ R"""
    rate_tolerance = 0.2
    worst_channel = 0.0
    worst_rate = 0.0
    for index in range(n_realizations):
        seed = derive_seed(rng_seed, "check-neumann", index)
        s = _siso_matrix(n_ris, seed)
        if not s.is_passive:
            continue
        c = random_configuration(make_rng(derive_seed(seed, "config")), n_ris)
        result = neumann_channel(s, c, k_max)
        worst_channel = max(worst_channel, _relative_error(result.channel, mnt_channel(s, c)))
        rate = result.convergence_rate(window)
        worst_rate = max(worst_rate, abs(rate - result.spectral_radius) / result.spectral_radius)
    passed = worst_channel <= tolerances.drift_rtol and worst_rate <= rate_tolerance
    return CheckResult(
        name="neumann",
        tolerance=rate_tolerance,
        observed=worst_rate,
        passed=passed,
        detail=f"partial-sum channel error {worst_channel:.3e} (tolerance {tolerances.drift_rtol:g})",
    )


def check_variance(
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
    n_realizations: int = 2000,
    n_ris: int = 8,
    kappas: Sequence[float] = (0.0, 0.5, 1.0),
) -> CheckResult:
    """Дисперсия диагонали вдвое больше внедиагональной; S = Sᵀ; пассивность при kappa из сетки"""
    diagonal: List[np.ndarray] = []
    offdiagonal: List[np.ndarray] = []
    symmetric = True
    for index in range(n_realizations):
        s = _siso_matrix(n_ris, derive_seed(rng_seed, "check-variance", index))
        symmetric = symmetric and bool(np.array_equal(s.s, s.s.T))
        upper = np.triu_indices(s.partition.total, k=1)
        diagonal.append(np.diag(s.s))
        offdiagonal.append(s.s[upper])
    ratio = float(np.mean(np.abs(np.concatenate(diagonal)) ** 2) / np.mean(np.abs(np.concatenate(offdiagonal)) ** 2))

    spec = EnsembleSpec(partition=PortPartition(n_tx=1, n_rx=1, n_ris=n_ris), rng_seed=rng_seed)
    verdicts = [validate_kappa(spec, kappa, n_trials=50) for kappa in kappas]
    passive = all(verdict.feasible for verdict in verdicts)

    observed = abs(ratio - 2.0)
    return CheckResult(
        name="variance",
        tolerance=0.1,
        observed=observed,
        passed=observed <= 0.1 and symmetric and passive,
        detail=f"diag/offdiag variance ratio {ratio:.4f}, symmetric={symmetric}, passive={passive}",
    )


def check_mu_linearity(
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
    n_realizations: int = 20,
    n_ris: int = 16,
) -> CheckResult:
    """Удвоение внедиагональных элементов S_SS ровно удваивает mu_n"""
    worst = 0.0
    for index in range(n_realizations):
        seed = derive_seed(rng_seed, "check-mu", index)
        s = _siso_matrix(n_ris, seed)
        doubled = s.with_ris_coupling_scaled(2.0, check_passivity=False)
        mu = mutual_coupling_strength(s, 100, seed)
        mu_doubled = mutual_coupling_strength(doubled, 100, seed)
        worst = max(worst, abs(mu_doubled - 2.0 * mu) / (2.0 * mu))
    return CheckResult(
        name="mu-linearity",
        tolerance=tolerances.mu_linearity_rtol,
        observed=worst,
        passed=worst <= tolerances.mu_linearity_rtol,
        detail="fixed diagonal and sample configurations",
    )


def check_decoupling(
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
    n_realizations: int = 10,
    n_ris: int = 12,
) -> CheckResult:
    """При kappa = 0 и нулевой диагонали S_SS модели MNT и CASC совпадают, а mu_n = 0"""
    worst = 0.0
    worst_mu = 0.0
    for index in range(n_realizations):
        seed = derive_seed(rng_seed, "check-decoupling", index)
        s = _siso_matrix(n_ris, seed, kappa=0.0)
        s = s.with_ris_block(np.zeros((n_ris, n_ris), dtype=np.complex128), check_passivity=False)
        worst_mu = max(worst_mu, mutual_coupling_strength(s, 10, seed))
        rng = make_rng(derive_seed(seed, "configs"))
        for _ in range(20):
            c = random_configuration(rng, n_ris)
            worst = max(worst, _relative_error(mnt_channel(s, c), casc_channel(s, c)))
    observed = max(worst, worst_mu)
    return CheckResult(
        name="decoupling",
        tolerance=tolerances.solve_rtol,
        observed=observed,
        passed=observed <= tolerances.solve_rtol,
        detail=f"MNT vs CASC channel error {worst:.3e}, mu_n {worst_mu:.3e}",
    )


CHECKS: Dict[str, Callable[..., CheckResult]] = {
    "solve": check_solve,
    "woodbury": check_woodbury,
    "gradient": check_gradient,
    "neumann": check_neumann,
    "variance": check_variance,
    "mu-linearity": check_mu_linearity,
    "decoupling": check_decoupling,
}


def run_checks(
    only: Optional[Sequence[str]] = None,
    rng_seed: int = 0,
    tolerances: NumericTolerances = default_tolerances,
) -> List[CheckResult]:
    """
    Выполняет выбранные проверки (по умолчанию все)

    Raises:
        MntConfigError: Неизвестное имя проверки
    """
    names = list(only) if only else list(CHECKS)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise MntConfigError(
            f"Unknown check(s): {', '.join(unknown)}",
            details={"known": list(CHECKS)}
        )
    return [CHECKS[name](rng_seed=rng_seed, tolerances=tolerances) for name in names]
