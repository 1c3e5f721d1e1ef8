import numpy as np
import pytest

from oossim.scenario import Geometry, SystemConfig


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def make_cfg(**overrides) -> SystemConfig:
    """Small synthetic config with unit noise floor (rho is an SNR directly)."""
    defaults = dict(
        L=3, N=4, K=3, K_I=2, tau_p=10, tau_c=40, rho=1.0, oos_snr=1.0,
        seed=7, trials=4, noise_floor_dbw=0.0,
    )
    defaults.update(overrides)
    return SystemConfig(**defaults)


def unit_geometry(cfg, beta: float = 1.0) -> Geometry:
    """Geometry with constant gains, for statistics and pipeline tests."""
    return Geometry(
        ap_positions=np.zeros((cfg.L, 3)),
        ue_positions=np.zeros((cfg.K, 3)),
        oos_positions=np.zeros((cfg.K_I, 3)),
        beta_ue=np.full((cfg.L, cfg.K), beta),
        beta_oos=np.full((cfg.L, cfg.K_I), beta),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
