"""
model.py - Domain types shared by every module

SystemConfig carries the network dimensions, noise, large-scale fading, SINR
targets, ADMM hyperparameters and seeds. ChannelRealization and Precoder hold
complex (user, AP, antenna) arrays; the per-AP matrices H_m and W_m used by the
distributed solver are views of shape (N, K).

All three types are frozen and their arrays are marked read-only, so they can be
shared between worker threads or pickled to worker processes.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import config as defaults
from .errors import ConfigError


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    with np.errstate(divide='ignore'):
        return 10.0 * np.log10(np.asarray(value, dtype=float))


def beta_from_snr_db(snr_db, noise_power):
    """
    Large-scale fading coefficient giving beta / sigma^2 = snr_db.

    Args:
        snr_db: Ratio of average channel gain to noise variance (dB)
        noise_power: Noise variance sigma^2 (linear, > 0)

    Returns:
        beta (linear)
    """
    if noise_power <= 0:
        raise ConfigError('noise power must be positive', 'noise_power')
    return float(noise_power * 10.0 ** (snr_db / 10.0))


def _frozen(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """
    Network and algorithm parameters.

    Scalars given for noise_power, large_scale or sinr_target are broadcast to
    (K,), (K, M) and (K,) arrays respectively. relaxed_target is the cached
    gamma_hat = sqrt(c * gamma) per user.
    """
    num_aps: int = defaults.NUM_APS
    num_antennas: int = defaults.NUM_ANTENNAS
    num_users: int = defaults.NUM_USERS
    noise_power: np.ndarray = defaults.NOISE_POWER
    large_scale: np.ndarray = None
    sinr_target: np.ndarray = None
    relaxation_factor: float = defaults.RELAXATION_FACTOR
    penalty: float = defaults.PENALTY
    max_iters: int = defaults.MAX_ITERS
    primal_tol: float = defaults.PRIMAL_TOL
    dual_tol: float = defaults.DUAL_TOL
    rel_tol: float = defaults.REL_TOL
    solver_tol: float = defaults.SOLVER_TOL
    solver_max_iters: int = defaults.SOLVER_MAX_ITERS
    rng_seed: int = defaults.SEED
    relaxed_target: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ('num_aps', 'num_antennas', 'num_users', 'max_iters', 'solver_max_iters'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError('expected a positive integer, got {!r}'.format(value), name)
            object.__setattr__(self, name, int(value))

        K, M = self.num_users, self.num_aps

        noise = self._broadcast('noise_power', self.noise_power, (K,))
        if np.any(noise <= 0):
            raise ConfigError('all noise powers must be positive', 'noise_power')

        large_scale = self.large_scale
        if large_scale is None:
            large_scale = beta_from_snr_db(defaults.SNR_DB, defaults.NOISE_POWER)
        beta = self._broadcast('large_scale', large_scale, (K, M))
        if np.any(beta < 0):
            raise ConfigError('large-scale fading must be nonnegative', 'large_scale')

        target = self.sinr_target
        if target is None:
            target = float(db_to_linear(defaults.SINR_TARGET_DB))
        gamma = self._broadcast('sinr_target', target, (K,))
        if np.any(gamma <= 0):
            raise ConfigError('all SINR targets must be positive', 'sinr_target')

        if not np.isfinite(self.relaxation_factor) or self.relaxation_factor < 1:
            raise ConfigError('relaxation factor c must be >= 1', 'relaxation_factor')
        if not self.penalty > 0:
            raise ConfigError('penalty rho must be positive', 'penalty')
        for name in ('primal_tol', 'dual_tol', 'rel_tol', 'solver_tol'):
            if not getattr(self, name) > 0:
                raise ConfigError('expected a positive tolerance', name)
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise ConfigError('seed must be a 64-bit unsigned integer', 'rng_seed')

        object.__setattr__(self, 'noise_power', _frozen(noise))
        object.__setattr__(self, 'large_scale', _frozen(beta))
        object.__setattr__(self, 'sinr_target', _frozen(gamma))
        object.__setattr__(self, 'relaxation_factor', float(self.relaxation_factor))
        object.__setattr__(self, 'penalty', float(self.penalty))
        object.__setattr__(self, 'rng_seed', int(self.rng_seed))
        object.__setattr__(self, 'relaxed_target',
                           _frozen(np.sqrt(self.relaxation_factor * gamma)))

    @staticmethod
    def _broadcast(name, value, shape):
        try:
            array = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
        except ValueError:
            raise ConfigError('cannot broadcast to shape {}'.format(shape), name) from None
        if not np.all(np.isfinite(array)):
            raise ConfigError('values must be finite', name)
        return array

    @classmethod
    def uniform(cls, num_aps=defaults.NUM_APS, num_antennas=defaults.NUM_ANTENNAS,
                num_users=defaults.NUM_USERS, snr_db=defaults.SNR_DB,
                sinr_target_db=defaults.SINR_TARGET_DB, noise_power=defaults.NOISE_POWER,
                **kwargs):
        """Same beta / sigma^2 and the same SINR target (both in dB) for every user."""
        return cls(num_aps=num_aps, num_antennas=num_antennas, num_users=num_users,
                   noise_power=noise_power,
                   large_scale=beta_from_snr_db(snr_db, noise_power),
                   sinr_target=float(db_to_linear(sinr_target_db)),
                   **kwargs)

    def replace(self, **changes):
        return replace(self, **changes)

    @property
    def noise_std(self):
        return np.sqrt(self.noise_power)

    @property
    def shape(self):
        """(K, M, N) layout of channel and precoder arrays."""
        return (self.num_users, self.num_aps, self.num_antennas)

    def to_dict(self):
        """Plain-JSON view of every field, used to embed the resolved config in results."""
        return {
            'num_aps': self.num_aps,
            'num_antennas': self.num_antennas,
            'num_users': self.num_users,
            'noise_power': self.noise_power.tolist(),
            'large_scale': self.large_scale.tolist(),
            'sinr_target': self.sinr_target.tolist(),
            'sinr_target_db': linear_to_db(self.sinr_target).tolist(),
            'relaxed_target': self.relaxed_target.tolist(),
            'relaxation_factor': self.relaxation_factor,
            'penalty': self.penalty,
            'max_iters': self.max_iters,
            'primal_tol': self.primal_tol,
            'dual_tol': self.dual_tol,
            'rel_tol': self.rel_tol,
            'solver_tol': self.solver_tol,
            'solver_max_iters': self.solver_max_iters,
            'rng_seed': self.rng_seed,
        }


def _check_complex_array(name, array, shape=None):
    array = np.array(array, dtype=np.complex128)
    if array.ndim != 3:
        raise ValueError('{} must be a (K, M, N) array, got shape {}'.format(name, array.shape))
    if shape is not None and array.shape != tuple(shape):
        raise ValueError('{} has shape {}, expected {}'.format(name, array.shape, tuple(shape)))
    if not np.all(np.isfinite(array)):
        raise ValueError('{} contains NaN or Inf entries'.format(name))
    return _frozen(array)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Channel vectors h_km, stored as h[k, m, :]."""
    h: np.ndarray
    realization_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'h', _check_complex_array('h', self.h))

    @property
    def num_users(self):
        return self.h.shape[0]

    @property
    def num_aps(self):
        return self.h.shape[1]

    @property
    def num_antennas(self):
        return self.h.shape[2]

    def matches(self, config):
        return self.h.shape == config.shape

    def check(self, config):
        if not self.matches(config):
            raise ValueError('channel shape {} does not match config {}'.format(
                self.h.shape, config.shape))

    def ap_matrix(self, m):
        """H_m = [h_1m, ..., h_Km], shape (N, K)."""
        return self.h[:, m, :].T

    def stacked(self, k):
        """(h_k1, ..., h_kM) concatenated, length M*N."""
        return self.h[k].reshape(-1)

    def scaled(self, alpha):
        return ChannelRealization(self.h * alpha, self.realization_index)


@dataclass(frozen=True, eq=False)
class Precoder:
    """Precoding vectors w_km, stored as w[k, m, :]."""
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'w', _check_complex_array('w', self.w))

    @classmethod
    def zeros(cls, config):
        return cls(np.zeros(config.shape, dtype=np.complex128))

    @classmethod
    def from_ap_blocks(cls, blocks):
        """Concatenate per-AP (N, K) blocks W_m into one precoder."""
        return cls(np.stack([np.asarray(b).T for b in blocks], axis=1))

    @property
    def num_users(self):
        return self.w.shape[0]

    @property
    def num_aps(self):
        return self.w.shape[1]

    def ap_block(self, m):
        """W_m = [w_1m, ..., w_Km], shape (N, K)."""
        return self.w[:, m, :].T

    def per_ap_power(self):
        """f_m(W_m) = tr(W_m^H W_m) for every AP."""
        return np.sum(np.abs(self.w) ** 2, axis=(0, 2))

    def rotated(self, phases):
        """Multiply every w_km of user k by exp(j * phases[k])."""
        factors = np.exp(1j * np.asarray(phases, dtype=float))
        return Precoder(self.w * factors[:, None, None])
