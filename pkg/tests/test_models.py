"""Тесты моделей канала"""

import time

import numpy as np
import pytest

from mnt_ris_bench.config import NumericTolerances
from mnt_ris_bench.ensemble import mutual_coupling_strength
from mnt_ris_bench.exceptions import (
    MntCacheInvalidError,
    MntDegenerateDesignError,
    MntDimensionMismatchError,
    MntNotFittedError,
    MntNumericBreakdownError,
    MntShapeError,
    MntStaleCacheError,
)
from mnt_ris_bench.models import (
    CascChannelModel,
    EvaluationCounter,
    MntChannelModel,
    MntEvaluator,
    NeumannResult,
    RrChannelModel,
    RrSurrogate,
    casc_channel,
    casc_gradient,
    channel_gain,
    cost,
    fit_rr,
    mnt_channel,
    mnt_channel_batch,
    mnt_gradient,
    neumann_channel,
    random_configuration,
    rr_predict,
)
from mnt_ris_bench.optim import enumerate_configurations

from .conftest import decoupled, make_matrix


def _direct_mnt(s, c):
    """S_RT + S_RS (Φ⁻¹ - S_SS)⁻¹ S_ST через явное обращение"""
    phi_inv = np.diag(1.0 / np.asarray(c, dtype=np.complex128))
    return s.S_RT + s.S_RS @ np.linalg.inv(phi_inv - s.S_SS) @ s.S_ST


class TestMntChannel:

    def test_matches_inverse_form(self, coupled_matrix):
        c = random_configuration(np.random.default_rng(0), coupled_matrix.n_ris)
        np.testing.assert_allclose(mnt_channel(coupled_matrix, c), _direct_mnt(coupled_matrix, c), rtol=1e-10)

    def test_zero_configuration_gives_direct_path(self, siso_matrix):
        h = mnt_channel(siso_matrix, np.zeros(siso_matrix.n_ris))
        np.testing.assert_array_equal(h, siso_matrix.S_RT)

    def test_counter(self, siso_matrix):
        counter = EvaluationCounter()
        mnt_channel(siso_matrix, np.ones(siso_matrix.n_ris), counter)
        mnt_channel(siso_matrix, -np.ones(siso_matrix.n_ris), counter)
        assert counter.evaluations == 2

    def test_wrong_length(self, siso_matrix):
        with pytest.raises(MntDimensionMismatchError):
            mnt_channel(siso_matrix, np.ones(siso_matrix.n_ris + 1))

    def test_mimo_shape(self):
        s = make_matrix(n_ris=5, n_tx=2, n_rx=3, seed=2)
        assert mnt_channel(s, np.ones(5)).shape == (3, 2)

    def test_batch_matches_single(self, coupled_matrix):
        configs = enumerate_configurations(coupled_matrix.n_ris)[::301]
        counter = EvaluationCounter()
        batch = mnt_channel_batch(coupled_matrix, configs, counter)
        assert counter.evaluations == len(configs)
        for c, h in zip(configs, batch):
            np.testing.assert_allclose(h, mnt_channel(coupled_matrix, c), rtol=1e-10)

    def test_batch_empty(self, siso_matrix):
        assert mnt_channel_batch(siso_matrix, np.zeros((0, siso_matrix.n_ris))).shape == (0, 1, 1)

    def test_no_coupling_collapses_to_casc(self, siso_matrix):
        s = decoupled(siso_matrix)
        rng = np.random.default_rng(1)
        for _ in range(10):
            c = random_configuration(rng, s.n_ris)
            np.testing.assert_allclose(mnt_channel(s, c), casc_channel(s, c), rtol=1e-12)


class TestMntEvaluator:

    def test_flip_matches_recompute(self, coupled_matrix):
        rng = np.random.default_rng(2)
        evaluator = MntEvaluator(coupled_matrix, random_configuration(rng, coupled_matrix.n_ris))
        for _ in range(200):
            i = int(rng.integers(0, coupled_matrix.n_ris))
            channel, cache = evaluator.flip_delta(i)
            flipped = evaluator.config
            flipped[i] = -flipped[i]
            expected = mnt_channel(coupled_matrix, flipped)
            assert np.linalg.norm(channel - expected) <= 1e-10 * np.linalg.norm(expected)
            if rng.random() < 0.5:
                evaluator.commit_flip(cache)
                np.testing.assert_array_equal(evaluator.config, flipped)

    def test_cache_drift_after_many_commits(self, coupled_matrix):
        rng = np.random.default_rng(3)
        evaluator = MntEvaluator(coupled_matrix, random_configuration(rng, coupled_matrix.n_ris))
        for _ in range(100):
            _, cache = evaluator.flip_delta(int(rng.integers(0, coupled_matrix.n_ris)))
            evaluator.commit_flip(cache)
        scratch = evaluator.scratch_inverse()
        assert np.linalg.norm(evaluator.inverse - scratch) <= 1e-8 * np.linalg.norm(scratch)
        np.testing.assert_allclose(evaluator.channel, mnt_channel(coupled_matrix, evaluator.config), rtol=1e-8)

    def test_counter_counts_reset_and_flips(self, siso_matrix):
        counter = EvaluationCounter()
        evaluator = MntEvaluator(siso_matrix, np.ones(siso_matrix.n_ris), counter)
        evaluator.flip_delta(0)
        evaluator.flip_delta(1)
        assert counter.evaluations == 3

    def test_stale_cache_after_another_flip(self, siso_matrix):
        evaluator = MntEvaluator(siso_matrix, np.ones(siso_matrix.n_ris))
        _, first = evaluator.flip_delta(0)
        evaluator.flip_delta(1)
        with pytest.raises(MntStaleCacheError):
            evaluator.commit_flip(first)

    def test_cache_cannot_be_committed_twice(self, siso_matrix):
        evaluator = MntEvaluator(siso_matrix, np.ones(siso_matrix.n_ris))
        _, cache = evaluator.flip_delta(2)
        evaluator.commit_flip(cache)
        with pytest.raises(MntStaleCacheError):
            evaluator.commit_flip(cache)

    def test_invalidated_cache(self, siso_matrix):
        evaluator = MntEvaluator(siso_matrix, np.ones(siso_matrix.n_ris))
        evaluator.invalidate()
        with pytest.raises(MntCacheInvalidError):
            evaluator.flip_delta(0)

    def test_breakdown_threshold(self, siso_matrix):
        evaluator = MntEvaluator(siso_matrix, np.ones(siso_matrix.n_ris), tolerances=NumericTolerances(flip_breakdown=1e6))
        with pytest.raises(MntNumericBreakdownError):
            evaluator.flip_delta(0)

    def test_requires_binary_configuration(self, siso_matrix):
        with pytest.raises(ValueError):
            MntEvaluator(siso_matrix, 0.5 * np.ones(siso_matrix.n_ris))

    def test_flip_back_restores_channel(self, siso_matrix):
        evaluator = MntEvaluator(siso_matrix, np.ones(siso_matrix.n_ris))
        original = evaluator.channel.copy()
        _, cache = evaluator.flip_delta(4)
        evaluator.commit_flip(cache)
        restored, _ = evaluator.flip_delta(4)
        np.testing.assert_allclose(restored, original, rtol=1e-12)

    def test_flip_effect_is_context_free_without_coupling(self, matrix_factory):
        s = matrix_factory(n_ris=8, kappa=0.0, seed=9)
        assert np.all(np.abs(np.diag(s.S_SS)) > 0)
        rng = np.random.default_rng(12)
        for i in range(s.n_ris):
            deltas = []
            for _ in range(50):
                c = random_configuration(rng, s.n_ris)
                c[i] = 1.0
                evaluator = MntEvaluator(s, c)
                channel, _ = evaluator.flip_delta(i)
                deltas.append(channel - evaluator.channel)
            for delta in deltas[1:]:
                np.testing.assert_allclose(delta, deltas[0], rtol=1e-10, atol=1e-15)

    def test_flip_is_an_order_faster_than_recompute(self, matrix_factory):
        s = matrix_factory(n_ris=100, kappa=0.5, seed=4)
        c = random_configuration(np.random.default_rng(0), s.n_ris)
        evaluator = MntEvaluator(s, c)

        def best_of(run, repeats=5):
            timings = []
            for _ in range(repeats):
                started = time.perf_counter()
                run()
                timings.append(time.perf_counter() - started)
            return min(timings)

        def recompute_all():
            for i in range(s.n_ris):
                flipped = c.copy()
                flipped[i] = -flipped[i]
                mnt_channel(s, flipped)

        def flip_all():
            for i in range(s.n_ris):
                evaluator.flip_delta(i)

        assert best_of(recompute_all) >= 10.0 * best_of(flip_all)


class TestCascAndNeumann:

    def test_casc_is_affine(self, siso_matrix):
        rng = np.random.default_rng(4)
        a = rng.uniform(-1, 1, siso_matrix.n_ris)
        b = rng.uniform(-1, 1, siso_matrix.n_ris)
        lhs = casc_channel(siso_matrix, a) + casc_channel(siso_matrix, b)
        rhs = casc_channel(siso_matrix, a + b) + siso_matrix.S_RT
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)

    def test_zeroth_order_is_casc(self, siso_matrix):
        c = random_configuration(np.random.default_rng(5), siso_matrix.n_ris)
        result = neumann_channel(siso_matrix, c, 0)
        np.testing.assert_array_equal(result.channel, casc_channel(siso_matrix, c))
        assert result.n_terms == 1

    def test_partial_sums_converge_to_mnt(self, siso_matrix):
        c = random_configuration(np.random.default_rng(6), siso_matrix.n_ris)
        result = neumann_channel(siso_matrix, c, 250)
        np.testing.assert_allclose(result.channel, mnt_channel(siso_matrix, c), rtol=1e-10)
        assert result.spectral_radius < 1.0
        assert result.convergence_rate(20) == pytest.approx(result.spectral_radius, rel=0.2)

    def test_early_stop(self, siso_matrix):
        result = neumann_channel(siso_matrix, np.ones(siso_matrix.n_ris), 500, tol=1e-12)
        assert result.n_terms < 501
        assert result.increments[-1] < 1e-12

    def test_radius_positive_without_coupling(self, matrix_factory):
        s = matrix_factory(n_ris=6, kappa=0.0, seed=3)
        result = neumann_channel(s, np.ones(6), 1)
        assert result.spectral_radius == pytest.approx(np.max(np.abs(np.diag(s.S_SS))), rel=1e-10)

    def test_tail_below_float_range_is_not_accumulated(self, siso_matrix):
        c = random_configuration(np.random.default_rng(6), siso_matrix.n_ris)
        result = neumann_channel(siso_matrix, c, 5000)
        assert result.n_terms < 5001
        assert all(value > 0.0 for value in result.increments)
        assert result.convergence_rate(20) == pytest.approx(result.spectral_radius, rel=0.2)

    def test_rate_skips_zero_increments(self):
        result = NeumannResult(np.zeros((1, 1)), [1.0, 0.5, 0.25, 0.125, 0.0, 0.0], 0.5)
        assert result.convergence_rate(3) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            NeumannResult(np.zeros((1, 1)), [1.0, 0.0], 0.5).convergence_rate()

    def test_casc_error_grows_with_coupling(self, matrix_factory):
        kappas = (0.1, 0.5, 2.0)
        errors = np.zeros(len(kappas))
        strengths = np.zeros(len(kappas))
        for seed in range(5):
            configs = 2.0 * np.random.default_rng(seed).integers(0, 2, size=(50, 8)) - 1.0
            for k, kappa in enumerate(kappas):
                s = matrix_factory(n_ris=8, kappa=kappa, seed=seed)
                strengths[k] += mutual_coupling_strength(s)
                exact = mnt_channel_batch(s, configs)
                approx = np.array([casc_channel(s, c) for c in configs])
                errors[k] += np.mean(np.abs(exact - approx) ** 2) / np.mean(np.abs(exact) ** 2)
        assert np.all(np.diff(strengths) > 0)
        assert np.all(np.diff(errors) > 0)


class TestRidgeSurrogate:

    def test_recovers_affine_model(self, matrix_factory):
        s = matrix_factory(n_ris=4, seed=7)
        configs = enumerate_configurations(4)
        channels = np.array([casc_channel(s, c) for c in configs])
        surrogate = fit_rr(configs, channels, ridge_lambda=1e-12)
        c = np.array([1.0, -1.0, -1.0, 1.0])
        np.testing.assert_allclose(rr_predict(surrogate, c), casc_channel(s, c), rtol=1e-8)
        np.testing.assert_allclose(surrogate.intercept, s.S_RT, rtol=1e-8)

    def test_single_sample_is_reproduced(self, siso_matrix):
        c = np.ones(siso_matrix.n_ris)
        h = mnt_channel(siso_matrix, c)
        surrogate = fit_rr(c[np.newaxis], h[np.newaxis], ridge_lambda=1e-12)
        np.testing.assert_allclose(surrogate.predict(c), h, rtol=1e-12)

    def test_degenerate_design_without_ridge(self, siso_matrix):
        c = np.ones(siso_matrix.n_ris)
        with pytest.raises(MntDegenerateDesignError):
            fit_rr(c[np.newaxis], mnt_channel(siso_matrix, c)[np.newaxis], ridge_lambda=0.0)

    def test_not_fitted(self):
        with pytest.raises(MntNotFittedError):
            RrSurrogate().predict(np.ones(3))
        with pytest.raises(MntNotFittedError):
            RrChannelModel(RrSurrogate())

    def test_prediction_counts(self, siso_matrix):
        configs = enumerate_configurations(siso_matrix.n_ris)[:40]
        surrogate = fit_rr(configs, mnt_channel_batch(siso_matrix, configs))
        model = RrChannelModel(surrogate)
        model.evaluate(configs[0])
        assert model.counter.evaluations == 1
        assert model.fidelity == "rr"
        assert model.n_ris == siso_matrix.n_ris

    def test_held_out_error_falls_with_training_size(self, matrix_factory):
        s = matrix_factory(n_ris=10, kappa=1.0, seed=13)
        held_out = 2.0 * np.random.default_rng(99).integers(0, 2, size=(300, s.n_ris)) - 1.0
        truth = mnt_channel_batch(s, held_out)
        errors = []
        for m in (12, 48, 400):
            total = 0.0
            for seed in range(10):
                configs = 2.0 * np.random.default_rng(seed).integers(0, 2, size=(m, s.n_ris)) - 1.0
                surrogate = fit_rr(configs, mnt_channel_batch(s, configs))
                predicted = np.array([surrogate.predict(c) for c in held_out])
                total += np.mean(np.abs(predicted - truth) ** 2) / np.mean(np.abs(truth) ** 2)
            errors.append(total)
        assert errors[0] > errors[1] > errors[2]


class TestGainAndGradients:

    def test_gain_and_cost(self):
        assert channel_gain(np.array([[3.0 + 4.0j]])) == pytest.approx(25.0)
        assert cost(np.array([[3.0 + 4.0j]])) == pytest.approx(-25.0)

    def test_gain_requires_siso(self):
        with pytest.raises(MntShapeError):
            channel_gain(np.ones((2, 1)))

    def test_mnt_gradient_matches_finite_differences(self, siso_matrix):
        rng = np.random.default_rng(8)
        c = rng.uniform(-0.9, 0.9, siso_matrix.n_ris)
        h, dh = mnt_gradient(siso_matrix, c)
        np.testing.assert_allclose(h, mnt_channel(siso_matrix, c), rtol=1e-12)
        step = 1e-6
        for i in range(siso_matrix.n_ris):
            forward, backward = c.copy(), c.copy()
            forward[i] += step
            backward[i] -= step
            numeric = (mnt_channel(siso_matrix, forward) - mnt_channel(siso_matrix, backward))[0, 0] / (2 * step)
            assert abs(dh[i] - numeric) <= 1e-5 * max(abs(numeric), 1e-2 * np.max(np.abs(dh)))

    def test_casc_gradient_is_exact(self, siso_matrix):
        _, dh = casc_gradient(siso_matrix, np.zeros(siso_matrix.n_ris))
        np.testing.assert_array_equal(dh, siso_matrix.S_RS[0, :] * siso_matrix.S_ST[:, 0])

    def test_gradient_requires_siso(self):
        s = make_matrix(n_ris=3, n_tx=2, seed=1)
        with pytest.raises(MntShapeError):
            mnt_gradient(s, np.ones(3))


class TestChannelModels:

    def test_fidelity_names_and_counters(self, siso_matrix):
        c = np.ones(siso_matrix.n_ris)
        for model, name in ((MntChannelModel(siso_matrix), "mnt"), (CascChannelModel(siso_matrix), "casc")):
            model.evaluate(c)
            assert model.fidelity == name
            assert model.n_ris == siso_matrix.n_ris
            assert model.counter.evaluations == 1

    def test_mnt_model_evaluator_shares_counter(self, siso_matrix):
        model = MntChannelModel(siso_matrix)
        evaluator = model.evaluator(np.ones(siso_matrix.n_ris))
        evaluator.flip_delta(0)
        assert model.counter.evaluations == 2
