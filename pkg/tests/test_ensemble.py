"""Тесты генератора ансамбля и метрики mu_n"""

import numpy as np
import pytest

from mnt_ris_bench.ensemble import (
    MNTS_MAGIC,
    ScatteringMatrix,
    calibrate_kappa,
    derive_seed,
    draw_scattering_matrix,
    mutual_coupling_strength,
    read_scattering_matrix,
    ris_coupling_norm,
    validate_kappa,
    write_scattering_matrix,
)
from mnt_ris_bench.exceptions import (
    MntDimensionMismatchError,
    MntFileFormatError,
    MntInfeasibleTargetError,
    MntPassivityViolationError,
    MntReciprocityViolationError,
)
from mnt_ris_bench.schemas import EnsembleSpec, PortPartition

from .conftest import make_matrix


def _spec(n_ris: int = 8, kappa: float = 1.0, seed: int = 0, **kwargs) -> EnsembleSpec:
    return EnsembleSpec(partition=PortPartition(n_ris=n_ris), kappa=kappa, rng_seed=seed, **kwargs)


class TestDeriveSeed:

    def test_deterministic(self):
        assert derive_seed(2024, "realization", 0, 3) == derive_seed(2024, "realization", 0, 3)

    def test_keys_change_the_stream(self):
        seeds = {derive_seed(2024, "realization", 0, r) for r in range(100)}
        assert len(seeds) == 100
        assert derive_seed(1, "a") != derive_seed(2, "a")

    def test_range(self):
        seed = derive_seed(7, "x")
        assert 0 <= seed < 2 ** 64


class TestDrawScatteringMatrix:

    def test_reciprocal_and_passive(self):
        s = draw_scattering_matrix(_spec(seed=3))
        assert s.s.shape == (10, 10)
        assert np.array_equal(s.s, s.s.T)
        assert s.sigma_max < 1.0
        assert s.is_passive

    def test_same_seed_same_matrix(self):
        assert np.array_equal(draw_scattering_matrix(_spec(seed=9)).s, draw_scattering_matrix(_spec(seed=9)).s)
        assert not np.array_equal(draw_scattering_matrix(_spec(seed=9)).s, draw_scattering_matrix(_spec(seed=10)).s)

    def test_blocks_follow_partition(self):
        spec = EnsembleSpec(partition=PortPartition(n_tx=2, n_rx=3, n_ris=4), rng_seed=1)
        s = draw_scattering_matrix(spec)
        assert s.S_RT.shape == (3, 2)
        assert s.S_RS.shape == (3, 4)
        assert s.S_ST.shape == (4, 2)
        assert s.S_SS.shape == (4, 4)
        np.testing.assert_array_equal(s.S_RS, s.s[2:5, 5:9])
        np.testing.assert_array_equal(s.S_ST, s.s[5:9, 0:2])

    def test_zero_kappa_decouples_elements(self):
        s = draw_scattering_matrix(_spec(kappa=0.0, seed=2))
        offdiag = s.S_SS[~np.eye(8, dtype=bool)]
        assert np.all(offdiag == 0)
        assert np.all(np.diag(s.S_SS) != 0)
        assert mutual_coupling_strength(s) == 0.0

    def test_kappa_scales_only_ris_coupling(self):
        base = draw_scattering_matrix(_spec(kappa=1.0, seed=4))
        doubled = draw_scattering_matrix(_spec(kappa=2.0, seed=4))
        mask = ~np.eye(8, dtype=bool)
        np.testing.assert_array_equal(doubled.S_SS[mask], 2.0 * base.S_SS[mask])
        np.testing.assert_array_equal(np.diag(doubled.S_SS), np.diag(base.S_SS))
        np.testing.assert_array_equal(doubled.S_RT, base.S_RT)
        np.testing.assert_array_equal(doubled.S_ST, base.S_ST)

    def test_strong_coupling_violates_passivity(self):
        with pytest.raises(MntPassivityViolationError):
            draw_scattering_matrix(_spec(kappa=50.0, seed=0))

    def test_non_passive_realization_is_logged_when_not_enforced(self, mocker):
        logger = mocker.Mock()
        s = draw_scattering_matrix(_spec(kappa=50.0, seed=0, enforce_passivity=False), logger)
        assert not s.is_passive
        logger.warning.assert_called_once()

    def test_variance_ratio(self):
        diagonal, offdiagonal = [], []
        for seed in range(1000):
            s = draw_scattering_matrix(_spec(n_ris=8, seed=seed))
            diagonal.append(np.diag(s.s))
            offdiagonal.append(s.s[np.triu_indices(10, k=1)])
        ratio = np.mean(np.abs(np.concatenate(diagonal)) ** 2) / np.mean(np.abs(np.concatenate(offdiagonal)) ** 2)
        assert 1.9 <= ratio <= 2.1

    def test_global_scale(self):
        variances = []
        for seed in range(500):
            s = draw_scattering_matrix(_spec(n_ris=8, seed=seed))
            variances.append(np.abs(s.s[np.triu_indices(10, k=1)]) ** 2)
        assert np.mean(np.concatenate(variances)) == pytest.approx(1.0 / 225.0, rel=0.05)


class TestScatteringMatrix:

    def test_rejects_non_reciprocal(self):
        s = np.zeros((4, 4), dtype=np.complex128)
        s[0, 1] = 0.1
        with pytest.raises(MntReciprocityViolationError):
            ScatteringMatrix(PortPartition(n_ris=2), s)

    def test_rejects_wrong_shape(self):
        with pytest.raises(MntDimensionMismatchError):
            ScatteringMatrix(PortPartition(n_ris=2), np.zeros((5, 5)))

    def test_rejects_non_passive(self):
        with pytest.raises(MntPassivityViolationError):
            ScatteringMatrix(PortPartition(n_ris=2), 1.5 * np.eye(4))
        assert not ScatteringMatrix(PortPartition(n_ris=2), 1.5 * np.eye(4), check_passivity=False).is_passive

    def test_read_only_without_freezing_input(self):
        raw = 0.1 * np.eye(4, dtype=np.complex128)
        s = ScatteringMatrix(PortPartition(n_ris=2), raw)
        assert not s.s.flags.writeable
        assert not s.S_SS.flags.writeable
        raw[0, 0] = 0.2
        assert s.s[0, 0] == 0.1

    def test_with_ris_coupling_scaled(self):
        s = make_matrix(n_ris=6, seed=8)
        scaled = s.with_ris_coupling_scaled(0.5)
        assert scaled.kappa == pytest.approx(0.5)
        np.testing.assert_array_equal(np.diag(scaled.S_SS), np.diag(s.S_SS))
        np.testing.assert_array_equal(scaled.S_RS, s.S_RS)


class TestMutualCouplingStrength:

    def test_doubling_coupling_doubles_mu(self):
        s = make_matrix(n_ris=16, seed=21)
        mu = mutual_coupling_strength(s, 100, rng_seed=3)
        mu_doubled = mutual_coupling_strength(s.with_ris_coupling_scaled(2.0, check_passivity=False), 100, rng_seed=3)
        assert abs(mu_doubled - 2.0 * mu) <= 1e-12 * 2.0 * mu

    def test_bounded_by_norm_ratio(self):
        s = make_matrix(n_ris=8, seed=5)
        lowest = ris_coupling_norm(s) / max(1.0 + np.max(np.abs(np.diag(s.S_SS))), 1.0)
        highest = ris_coupling_norm(s) / (1.0 - np.max(np.abs(np.diag(s.S_SS))))
        assert lowest <= mutual_coupling_strength(s) <= highest

    def test_requires_sample_configs(self):
        with pytest.raises(ValueError):
            mutual_coupling_strength(make_matrix(), n_probe_configs=0)


class TestKappaCalibration:

    def test_validate_kappa_zero_is_feasible(self):
        verdict = validate_kappa(_spec(), 0.0, n_trials=10)
        assert verdict.feasible
        assert verdict.n_trials == 10

    def test_validate_kappa_large_is_infeasible(self):
        verdict = validate_kappa(_spec(), 50.0, n_trials=10)
        assert not verdict.feasible
        assert verdict.worst_sigma_max > 1.0

    def test_calibrated_kappa_hits_target(self):
        partition = PortPartition(n_ris=6)
        kappa = calibrate_kappa(partition, 0.2, rng_seed=1, n_calib=200, n_trials=20)
        mus = [
            mutual_coupling_strength(
                draw_scattering_matrix(EnsembleSpec(partition=partition, kappa=kappa, rng_seed=derive_seed(99, r))),
                100,
                rng_seed=r,
            )
            for r in range(200)
        ]
        assert np.mean(mus) == pytest.approx(0.2, rel=0.1)

    def test_strong_target_is_infeasible(self):
        with pytest.raises(MntInfeasibleTargetError):
            calibrate_kappa(PortPartition(n_ris=8), 0.99, rng_seed=0, n_calib=30, n_trials=20)

    def test_strong_target_allowed_without_passivity(self):
        partition = PortPartition(n_ris=8)
        spec = EnsembleSpec(partition=partition, enforce_passivity=False)
        kappa = calibrate_kappa(partition, 0.99, rng_seed=0, n_calib=30, n_trials=20, base_spec=spec)
        assert kappa > 0


class TestMntsFiles:

    def test_write_then_read(self, tmp_path):
        s = make_matrix(n_ris=5, kappa=0.7, seed=12)
        path = tmp_path / "s.mnts"
        write_scattering_matrix(path, s)
        raw = path.read_bytes()
        assert raw[:4] == MNTS_MAGIC
        assert len(raw) == 28 + 16 * 7 * 7
        loaded = read_scattering_matrix(path)
        assert np.array_equal(loaded.s, s.s)
        assert loaded.kappa == 0.7
        assert loaded.partition == s.partition

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "s.mnts"
        write_scattering_matrix(path, make_matrix(n_ris=2))
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(MntFileFormatError):
            read_scattering_matrix(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "s.mnts"
        write_scattering_matrix(path, make_matrix(n_ris=2))
        path.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(MntFileFormatError):
            read_scattering_matrix(path)

    def test_short_file(self, tmp_path):
        path = tmp_path / "s.mnts"
        path.write_bytes(b"MNTS")
        with pytest.raises(MntFileFormatError):
            read_scattering_matrix(path)
