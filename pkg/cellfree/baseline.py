"""
baseline.py - Conjugate (matched-filter) beamforming

Every AP points w_km along conj(h_km) with power p_km, using nothing but its own
CSI. With an equal split p_km = P / (M K) the SINR of user k is

    SINR_k(P) = P S_k / (P I_k + sigma_k^2)

where S_k and I_k are the signal and interference gains at unit total power, so
it saturates at S_k / I_k once interference dominates the noise. The sweep walks
an ascending total-power grid and reports the best min-user SINR it finds next
to that analytic ceiling. The grid protocol (equal split, best point) is this
package's choice.
"""

from dataclasses import dataclass

import numpy as np

from . import config as defaults
from .errors import ZeroChannel
from .metrics import effective_gains
from .model import Precoder, db_to_linear, linear_to_db


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """p[k, m]: transmit power of AP m for user k."""
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2:
            raise ValueError('power allocation must be a (K, M) array')
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError('powers must be finite and nonnegative')
        p.setflags(write=False)
        object.__setattr__(self, 'p', p)

    @classmethod
    def equal(cls, config, total):
        return cls(np.full((config.num_users, config.num_aps),
                           float(total) / (config.num_users * config.num_aps)))

    @property
    def total(self):
        return float(self.p.sum())


def conjugate_precoder(H, alloc):
    """
    w_km = sqrt(p_km) conj(h_km) / ||h_km||

    Raises:
        ZeroChannel: p_km > 0 while h_km = 0
    """
    h = H.h
    if alloc.p.shape != h.shape[:2]:
        raise ValueError('allocation shape {} does not match channel {}'.format(
            alloc.p.shape, h.shape[:2]))
    norms = np.linalg.norm(h, axis=2)
    dead = (norms == 0) & (alloc.p > 0)
    if np.any(dead):
        k, m = np.argwhere(dead)[0]
        raise ZeroChannel(int(k), int(m))
    safe = np.where(norms > 0, norms, 1.0)
    w = np.sqrt(alloc.p)[:, :, None] * np.conj(h) / safe[:, :, None]
    return Precoder(w)


def power_grid_from_snr_db(grid_db=defaults.POWER_GRID_DB, noise_power=defaults.NOISE_POWER):
    """Total transmit powers giving the listed transmit SNRs."""
    return float(noise_power) * db_to_linear(np.asarray(grid_db, dtype=float))


@dataclass(frozen=True, eq=False)
class ConjugateSweep:
    power_grid: np.ndarray
    min_sinr: np.ndarray            # (G,) min-user SINR per grid point
    per_user_sinr: np.ndarray       # (G, K)
    saturation: np.ndarray          # (K,) S_k / I_k, reached as sigma^2 -> 0

    @property
    def best_index(self):
        return int(np.argmax(self.min_sinr))

    @property
    def best_power(self):
        return float(self.power_grid[self.best_index])

    @property
    def supremum(self):
        """Largest min-user SINR on the grid."""
        return float(self.min_sinr[self.best_index])

    @property
    def per_user_max(self):
        return self.per_user_sinr.max(axis=0)

    @property
    def saturation_min(self):
        return float(np.min(self.saturation))

    def to_dict(self):
        return {
            'power_grid_db': linear_to_db(self.power_grid).tolist(),
            'min_sinr_db': linear_to_db(self.min_sinr).tolist(),
            'per_user_max_db': linear_to_db(self.per_user_max).tolist(),
            'supremum_db': float(linear_to_db(self.supremum)),
            'saturation_db': linear_to_db(self.saturation).tolist(),
        }


def max_sinr_under_conjugate(H, config, power_grid=None):
    """
    Equal-power conjugate beamforming swept over total powers.

    Args:
        H: ChannelRealization
        config: SystemConfig
        power_grid: Ascending positive total powers (default: the transmit SNR
                    grid of cellfree.config over the mean noise power)

    Returns:
        ConjugateSweep
    """
    if power_grid is None:
        power_grid = power_grid_from_snr_db(defaults.POWER_GRID_DB, np.mean(config.noise_power))
    grid = np.asarray(power_grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError('power grid must be ascending and positive')

    unit = conjugate_precoder(H, PowerAllocation.equal(config, 1.0))
    gains = np.abs(effective_gains(H, unit)) ** 2
    signal = np.diag(gains).copy()
    interference = np.where(np.eye(gains.shape[0], dtype=bool), 0.0, gains).sum(axis=1)

    per_user = grid[:, None] * signal / (grid[:, None] * interference + config.noise_power)
    with np.errstate(divide='ignore'):
        saturation = np.where(interference > 0, signal / np.where(interference > 0, interference, 1.0),
                              np.inf)
    return ConjugateSweep(grid, per_user.min(axis=1), per_user, saturation)
