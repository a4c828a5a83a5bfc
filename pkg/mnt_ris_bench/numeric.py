"""Плотная комплексная линейная алгебра с явными контрактами точности"""

import warnings
from typing import Optional

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .config import NumericTolerances, default_tolerances
from .exceptions import (
    MntConvergenceError,
    MntDimensionMismatchError,
    MntNonFiniteError,
    MntSingularMatrixError,
)

# Все матрицы пакета: двумерные complex128 массивы
ComplexMatrix = np.ndarray


def as_complex_matrix(a: ArrayLike, name: str = "matrix") -> ComplexMatrix:
    """
    Приводит вход к ComplexMatrix и проверяет инварианты

    Raises:
        MntDimensionMismatchError: Не двумерный или пустой массив
        MntNonFiniteError: Есть NaN/Inf
    """
    matrix = np.asarray(a, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise MntDimensionMismatchError(
            f"{name} must be a non-empty 2-D matrix",
            details={"shape": matrix.shape}
        )
    if not np.all(np.isfinite(matrix)):
        raise MntNonFiniteError(f"{name} contains non-finite entries")
    return matrix


class LuFactorization:
    """LU разложение с частичным выбором ведущего элемента для повторных решений"""

    def __init__(self, a: ArrayLike, tolerances: Optional[NumericTolerances] = None):
        self.tolerances = tolerances or default_tolerances
        matrix = as_complex_matrix(a, "A")
        if matrix.shape[0] != matrix.shape[1]:
            raise MntDimensionMismatchError(
                "A must be square",
                details={"shape": matrix.shape}
            )
        with warnings.catch_warnings():
            # точный нулевой пивот проверяем сами ниже
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self._lu, self._piv = scipy.linalg.lu_factor(matrix, check_finite=False)
        smallest_pivot = float(np.min(np.abs(np.diag(self._lu))))
        if smallest_pivot < self.tolerances.pivot_floor:
            raise MntSingularMatrixError(details={"smallest_pivot": smallest_pivot})
        self.n = matrix.shape[0]

    def solve(self, b: ArrayLike, transpose: bool = False) -> np.ndarray:
        """
        Решает A X = B (или Aᵀ X = B при transpose=True)

        Args:
            b: Правая часть n×k или вектор длины n
            transpose: Решать систему с транспонированной (не сопряженной) матрицей
        """
        rhs = np.asarray(b, dtype=np.complex128)
        if rhs.shape[0] != self.n:
            raise MntDimensionMismatchError(
                "Right-hand side row count must equal n",
                details={"n": self.n, "rhs_shape": rhs.shape}
            )
        return scipy.linalg.lu_solve(
            (self._lu, self._piv), rhs, trans=1 if transpose else 0, check_finite=False
        )


def factorize(a: ArrayLike, tolerances: Optional[NumericTolerances] = None) -> LuFactorization:
    """Возвращает LU разложение квадратной матрицы"""
    return LuFactorization(a, tolerances)


def solve_linear(
    a: ArrayLike,
    b: ArrayLike,
    tolerances: Optional[NumericTolerances] = None
) -> np.ndarray:
    """
    Решает A X = B через LU с частичным выбором ведущего элемента

    Args:
        a: Квадратная матрица n×n
        b: Матрица n×k (или вектор длины n)

    Returns:
        np.ndarray: X той же формы, что и B

    Raises:
        MntSingularMatrixError: Модуль ведущего элемента ниже 1e-300
        MntDimensionMismatchError: Несовместимые размеры
    """
    return factorize(a, tolerances).solve(b)


def largest_singular_value(a: ArrayLike) -> float:
    """
    Наибольшее сингулярное число sigma_max(A)

    Raises:
        MntConvergenceError: LAPACK не сошелся
    """
    matrix = as_complex_matrix(a, "A")
    try:
        singular_values = scipy.linalg.svdvals(matrix, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise MntConvergenceError(f"SVD did not converge: {str(e)}")
    return float(singular_values[0])


def spectral_radius(a: ArrayLike) -> float:
    """
    Спектральный радиус max |lambda_i(A)| через QR алгоритм (Шур)

    Кратные по модулю собственные значения QR обрабатывает без перезапусков.

    Raises:
        MntDimensionMismatchError: Матрица не квадратная
        MntConvergenceError: QR итерации не сошлись
    """
    matrix = as_complex_matrix(a, "A")
    if matrix.shape[0] != matrix.shape[1]:
        raise MntDimensionMismatchError("A must be square", details={"shape": matrix.shape})
    try:
        eigenvalues = scipy.linalg.eigvals(matrix, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise MntConvergenceError(f"Eigenvalue iteration did not converge: {str(e)}")
    return float(np.max(np.abs(eigenvalues)))
