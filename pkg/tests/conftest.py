"""Общие фикстуры тестов"""

import numpy as np
import pytest

from mnt_ris_bench.config import ExperimentConfig
from mnt_ris_bench.ensemble import ScatteringMatrix, draw_scattering_matrix
from mnt_ris_bench.schemas import EnsembleSpec, PortPartition


def make_matrix(
    n_ris: int = 8,
    kappa: float = 1.0,
    seed: int = 0,
    n_tx: int = 1,
    n_rx: int = 1,
    enforce_passivity: bool = False,
) -> ScatteringMatrix:
    spec = EnsembleSpec(
        partition=PortPartition(n_tx=n_tx, n_rx=n_rx, n_ris=n_ris),
        kappa=kappa,
        rng_seed=seed,
        enforce_passivity=enforce_passivity,
    )
    return draw_scattering_matrix(spec)


def decoupled(s: ScatteringMatrix) -> ScatteringMatrix:
    """Копия с нулевым блоком S_SS (нет связи и самовоздействия элементов)"""
    return s.with_ris_block(np.zeros((s.n_ris, s.n_ris), dtype=np.complex128), check_passivity=False)


@pytest.fixture
def matrix_factory():
    return make_matrix


@pytest.fixture
def siso_matrix() -> ScatteringMatrix:
    return make_matrix(n_ris=8, kappa=1.0, seed=11)


@pytest.fixture
def coupled_matrix() -> ScatteringMatrix:
    return make_matrix(n_ris=12, kappa=3.0, seed=5)


@pytest.fixture
def small_config(tmp_path) -> ExperimentConfig:
    return ExperimentConfig(
        n_ris=6,
        mu_targets=[0.01, 0.3],
        m_values=[0, 4],
        n_realizations=2,
        n_calib=20,
        kappa_trials=10,
        n_probe_configs=10,
        output_dir=tmp_path / "results",
        record_wall_time=False,
        tabp={"e_max": 20},
    )
