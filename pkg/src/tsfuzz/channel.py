"""Analytic urban-micro radio model: path loss, shadowing, SINR, Shannon rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_DISTANCE_M = 1.0


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class RadioParams:
    carrier_frequency: float = 3.5e9
    bandwidth: float = 13.68e6
    tx_power_dbm: float = 30.0
    noise_psd_dbm_hz: float = -174.0
    shadowing_sigma_db: float = 4.0
    interference_scale: float = 1.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.carrier_frequency > 0:
            raise ValueError("carrier_frequency must be positive")
        if self.interference_scale < 0:
            raise ValueError("interference_scale must be >= 0")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be >= 0")

    @property
    def tx_power_w(self) -> float:
        return float(dbm_to_watt(self.tx_power_dbm))

    @property
    def noise_power_w(self) -> float:
        """Thermal noise over the whole carrier, N0 * B, in watts."""
        return float(dbm_to_watt(self.noise_psd_dbm_hz)) * self.bandwidth


def path_loss_db(distance_3d, carrier_frequency):
    """UMi street-canyon LOS path loss in dB.

    ``distance_3d`` is clamped to 1 m. Works elementwise on arrays.
    """
    d = np.maximum(np.asarray(distance_3d, dtype=float), MIN_DISTANCE_M)
    return 32.4 + 21.0 * np.log10(d) + 20.0 * np.log10(carrier_frequency / 1e9)


def distances(positions, site_positions):
    """Pairwise UE-site distances; leading axes of ``positions`` broadcast."""
    p = np.asarray(positions, dtype=float)
    s = np.asarray(site_positions, dtype=float)
    return np.hypot(p[..., :, None, 0] - s[:, 0], p[..., :, None, 1] - s[:, 1])


def shadowing_db(shape, sigma_db, shadow_seed):
    """Log-normal shadowing samples in dB, reproducible per seed."""
    rng = np.random.default_rng(shadow_seed)
    return sigma_db * rng.standard_normal(shape)


def gains_from_loss(loss_db):
    """Linear gain from total loss; clipped so every gain lies in (0, 1]."""
    g = 10.0 ** (-np.asarray(loss_db) / 10.0)
    return np.clip(g, np.finfo(float).tiny, 1.0)


def compute_gain_matrix(positions, site_positions, params: RadioParams, shadow_seed):
    """N x M linear power gains including path loss and frozen shadowing."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    site_positions = np.atleast_2d(np.asarray(site_positions, dtype=float))
    pl = path_loss_db(distances(positions, site_positions), params.carrier_frequency)
    shadow = shadowing_db(pl.shape, params.shadowing_sigma_db, shadow_seed)
    return gains_from_loss(pl + shadow)


def sinr_matrix(gains, params: RadioParams, active_cells):
    """Linear SINR of every UE towards every cell, with all active cells transmitting.

    Entry (i, j) is the SINR UE ``i`` would see if served by cell ``j``;
    columns of inactive cells are zero. Leading axes of ``gains`` broadcast.
    """
    active = _active_mask(active_cells, np.shape(gains)[-1])
    rx = params.tx_power_w * np.asarray(gains) * active
    total = rx.sum(axis=-1, keepdims=True)
    interference = params.interference_scale * (total - rx)
    return rx / (interference + params.noise_power_w)


def compute_sinr(ue: int, cell: int, gains, params: RadioParams, active_cells) -> float:
    """Linear SINR of one UE served by ``cell``."""
    gains = np.asarray(gains)
    active = _active_mask(active_cells, gains.shape[-1])
    if not active[cell]:
        raise ValueError("serving cell is off")
    rx = params.tx_power_w * gains[ue] * active
    interference = params.interference_scale * (rx.sum() - rx[cell])
    return float(rx[cell] / (interference + params.noise_power_w))


def compute_throughput(sinr, bandwidth):
    """Shannon rate B * log2(1 + SINR) in bit/s."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("sinr must be non-negative")
    out = bandwidth * np.log2(1.0 + sinr)
    return float(out) if out.ndim == 0 else out


def _active_mask(active_cells, n_cells):
    """Accept either a boolean mask or an iterable of cell indices."""
    arr = np.asarray(active_cells)
    if arr.dtype == bool and arr.shape == (n_cells,):
        return arr
    mask = np.zeros(n_cells, dtype=bool)
    mask[list(active_cells)] = True
    return mask
