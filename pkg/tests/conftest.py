from dataclasses import replace

import numpy as np
import pytest

from innersocp.beamformer import RobustParams, derive_params, factorize_presumed
from innersocp.scenario import ScenarioConfig, derive_seed, simulate_run


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(rng, n):
    A = crandn(rng, n, n)
    return 0.5 * (A + A.conj().T)


def random_psd(rng, n, rank=None):
    A = crandn(rng, n, rank or n)
    return A @ A.conj().T


def random_robust_instance(rng, n, m=None, eta_frac=None):
    """Sample covariance from 2n snapshots, rank-m presumed signal covariance,
    eta a fraction of sigma_max(Q) so the problem is feasible."""
    m = m or int(rng.integers(1, n + 1))
    Y = crandn(rng, n, 2 * n)
    Rhat = Y @ Y.conj().T / (2 * n)
    Rs = random_psd(rng, n, m)
    Q = factorize_presumed(Rs)
    smax = np.linalg.norm(Q, 2)
    frac = rng.uniform(0.0, 0.8) if eta_frac is None else eta_frac
    gamma = 0.1 * np.linalg.norm(Rhat)
    return Rhat, Q, RobustParams(gamma, frac * smax)


def scenario_instance(snr_db, run, seed=2024):
    cfg = replace(ScenarioConfig(seed=seed), snr_db=snr_db)
    R_s, R_ipn, Rhat, Rs_pre = simulate_run(cfg, derive_seed(seed, int(snr_db), run))
    return R_s, R_ipn, Rhat, factorize_presumed(Rs_pre), derive_params(Rhat, Rs_pre)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
