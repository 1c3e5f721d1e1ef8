"""Pilot-phase synthesis, local LS channel estimation, projected residuals.

The projected residual removes everything the pilots explain, leaving per
AP a low-dimensional matrix that contains only OoS interference plus
noise; its column space in the complement basis is what the distributed
estimators operate on.
"""

from __future__ import annotations

import numpy as np

from .numerics import herm
from .scenario import BlockRealization, PilotBook, SystemConfig


def _pilot_scale(cfg: SystemConfig) -> float:
    return float(np.sqrt(cfg.rho * cfg.tau_p))


def simulate_pilot_rx(block: BlockRealization, pilots: PilotBook, cfg: SystemConfig) -> np.ndarray:
    """Received pilot matrix per AP: scaled pilots + interference + noise.

    Returns Y with shape (L, N, tau_p), Y_l = sqrt(snr*tau_p) H_l Phi^H
    + G_l S^H + N_l.
    """
    L, N, K = block.H.shape
    if pilots.Phi.shape != (cfg.tau_p, K) or block.S.shape[0] != cfg.tau_p:
        raise ValueError("pilot book / block dimensions are inconsistent")
    if block.pilot_noise.shape != (L, N, cfg.tau_p):
        raise ValueError("pilot noise has wrong shape")
    Y = _pilot_scale(cfg) * (block.H @ herm(pilots.Phi))
    if block.G.shape[2]:
        Y = Y + block.G @ herm(block.S)
    return Y + block.pilot_noise


def ls_channel_estimate(obs: np.ndarray, pilots: PilotBook, cfg: SystemConfig) -> np.ndarray:
    """Local least-squares channel estimate per AP: Hhat_l = Y_l Phi / scale."""
    return (obs @ pilots.Phi) / _pilot_scale(cfg)


def compute_projected_residual(
    obs: np.ndarray, est: np.ndarray, pilots: PilotBook, cfg: SystemConfig
) -> np.ndarray:
    """Residual after removing the estimated pilot contribution, expressed
    in the complement basis: (Y_l - scale * Hhat_l Phi^H) Psi, shape
    (L, N, tau_p - K). Algebraically equal to (G_l S^H + N_l) Psi.
    """
    return (obs - _pilot_scale(cfg) * (est @ herm(pilots.Phi))) @ pilots.Psi
