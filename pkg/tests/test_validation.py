"""Тесты встроенных проверок validate"""

import numpy as np
import pytest

from mnt_ris_bench import models
from mnt_ris_bench.exceptions import MntConfigError
from mnt_ris_bench.validation import (
    CHECKS,
    check_decoupling,
    check_gradient,
    check_mu_linearity,
    check_neumann,
    check_solve,
    check_variance,
    check_woodbury,
    gradient_relative_error,
    run_checks,
)


class TestChecks:

    def test_solve(self):
        result = check_solve()
        assert result.passed, result.detail

    def test_woodbury(self):
        result = check_woodbury(n_realizations=3, flips_per_realization=50)
        assert result.passed, result.detail
        assert result.observed <= 1e-8

    def test_woodbury_detects_wrong_update(self, mocker):
        original = models.rank_one_channel_update

        def wrong_sign(h, p_col, q_row, delta, denominator):
            return original(h, p_col, q_row, -delta, denominator)

        mocker.patch("mnt_ris_bench.models.rank_one_channel_update", side_effect=wrong_sign)
        result = check_woodbury(n_realizations=2, flips_per_realization=10)
        assert not result.passed

    def test_gradient(self):
        result = check_gradient(n_points=10)
        assert result.passed, result.detail

    def test_neumann(self):
        result = check_neumann(n_realizations=4)
        assert result.passed, result.detail

    def test_variance(self):
        result = check_variance(n_realizations=500)
        assert result.passed, result.detail

    def test_mu_linearity(self):
        result = check_mu_linearity(n_realizations=5)
        assert result.passed, result.detail

    def test_decoupling(self):
        result = check_decoupling(n_realizations=3)
        assert result.passed, result.detail
        assert result.observed <= 1e-10


class TestGradientError:

    def test_relative_to_largest_component(self):
        numeric = np.array([1.0, 1e-9])
        analytic = np.array([1.0 + 1e-7, 2e-9])
        # второй компонент меряется относительно пола 1e-2
        assert gradient_relative_error(analytic, numeric) == pytest.approx(1e-7, rel=1e-3)


class TestRunChecks:

    def test_only_selected(self):
        results = run_checks(only=["solve", "mu-linearity"])
        assert [result.name for result in results] == ["solve", "mu-linearity"]

    def test_all_checks_pass(self):
        results = run_checks()
        assert [result.name for result in results] == list(CHECKS)
        failed = [result for result in results if not result.passed]
        assert not failed, [(result.name, result.detail) for result in failed]

    def test_unknown_check(self):
        with pytest.raises(MntConfigError):
            run_checks(only=["solve", "nonsense"])
