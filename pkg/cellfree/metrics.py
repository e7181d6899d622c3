"""
metrics.py - Ground-truth evaluation of precoders

achieved_sinr evaluates the instantaneous SINR of every user exactly:

    SINR_k = |sum_m h_km^T w_km|^2 / (sum_{u != k} |sum_m h_km^T w_um|^2 + sigma_k^2)

ensemble() runs one method over many channel realizations and aggregates the
empirical CDFs of min-user and mean-user SINR plus their outage fractions.
Min-user outage is the conservative figure; mean-user SINR (10 log10 of the
user-average linear SINR) is what the SINR-CDF reproduction plots.
"""

import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import config as defaults
from .errors import CellFreeError, EnsembleAborted
from .model import linear_to_db

logger = logging.getLogger(__name__)


def _precoder_array(W):
    return np.asarray(getattr(W, 'w', W))


def effective_gains(H, W):
    """G[k, u] = sum_m h_km^T w_um, the complex gain from user u's symbol to user k."""
    return np.einsum('kmi,umi->ku', H.h, _precoder_array(W))


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SinrReport:
    per_user_sinr: np.ndarray
    sinr_target: np.ndarray
    per_user_sinr_db: np.ndarray = field(init=False)
    min_sinr_db: float = field(init=False)
    mean_sinr_db: float = field(init=False)
    meets_target: np.ndarray = field(init=False)

    def __post_init__(self):
        sinr = _frozen(self.per_user_sinr)
        target = _frozen(np.broadcast_to(self.sinr_target, sinr.shape))
        object.__setattr__(self, 'per_user_sinr', sinr)
        object.__setattr__(self, 'sinr_target', target)
        object.__setattr__(self, 'per_user_sinr_db', _frozen(linear_to_db(sinr)))
        object.__setattr__(self, 'min_sinr_db', float(linear_to_db(np.min(sinr))))
        object.__setattr__(self, 'mean_sinr_db', float(linear_to_db(np.mean(sinr))))
        meets = sinr >= target
        meets.setflags(write=False)
        object.__setattr__(self, 'meets_target', meets)

    @property
    def min_ratio(self):
        """min_k SINR_k / gamma_k"""
        return float(np.min(self.per_user_sinr / self.sinr_target))

    def within_target(self, slack=defaults.OUTAGE_SLACK):
        return bool(np.all(self.per_user_sinr >= self.sinr_target * (1.0 - slack)))

    def mean_within_target(self, slack=defaults.OUTAGE_SLACK):
        return bool(np.mean(self.per_user_sinr) >= np.mean(self.sinr_target) * (1.0 - slack))

    def to_dict(self):
        return {
            'per_user_sinr_db': self.per_user_sinr_db.tolist(),
            'min_sinr_db': self.min_sinr_db,
            'mean_sinr_db': self.mean_sinr_db,
            'meets_target': self.meets_target.tolist(),
        }


def achieved_sinr(H, W, config):
    """
    Exact per-user SINR of precoder W on channel H.

    Args:
        H: ChannelRealization
        W: Precoder (or a (K, M, N) complex array)
        config: SystemConfig supplying noise powers and targets

    Returns:
        SinrReport; a zero precoder gives SINR 0 for every user
    """
    gains = np.abs(effective_gains(H, W)) ** 2
    signal = np.diag(gains).copy()
    interference = np.where(np.eye(gains.shape[0], dtype=bool), 0.0, gains).sum(axis=1)
    sinr = signal / (interference + config.noise_power)
    return SinrReport(sinr, config.sinr_target)


def total_power(W):
    """sum over (k, m) of ||w_km||^2"""
    w = _precoder_array(W)
    return float(np.sum(w.real ** 2 + w.imag ** 2))


def transmit_snr_db(W, noise_power):
    """Total transmit power over the common noise power, in dB."""
    return float(linear_to_db(total_power(W) / float(noise_power)))


def empirical_cdf(values):
    """
    Step-function CDF of a sample.

    Returns:
        (x, F): sorted distinct values and the fraction of samples <= each one
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        return np.zeros(0), np.zeros(0)
    x, counts = np.unique(values, return_counts=True)
    cusum = np.cumsum(counts)
    return x, cusum / cusum[-1]


@dataclass(frozen=True, eq=False)
class Sample:
    realization_index: int
    report: SinrReport
    total_power: float
    status: str = 'optimal'
    iterations: int = 0
    converged: bool = True
    outcome: object = field(default=None, repr=False)


@dataclass(frozen=True)
class Failure:
    realization_index: int
    status: str
    message: str = ''


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """
    Per-realization samples of one method, sorted by realization index.

    cdf_points / mean_cdf_points are (sinr_db, cumulative fraction) pairs over
    min-user and mean-user SINR. Failed realizations are kept apart and do not
    enter any CDF.
    """
    method: str
    samples: tuple
    failures: tuple = ()
    n_requested: int = 0
    outage_slack: float = defaults.OUTAGE_SLACK

    def __post_init__(self):
        object.__setattr__(self, 'samples',
                           tuple(sorted(self.samples, key=lambda s: s.realization_index)))
        object.__setattr__(self, 'failures',
                           tuple(sorted(self.failures, key=lambda f: f.realization_index)))
        if not self.n_requested:
            object.__setattr__(self, 'n_requested', len(self.samples) + len(self.failures))

    @property
    def min_sinr_db(self):
        return np.array([s.report.min_sinr_db for s in self.samples])

    @property
    def mean_sinr_db(self):
        return np.array([s.report.mean_sinr_db for s in self.samples])

    @property
    def total_powers(self):
        return np.array([s.total_power for s in self.samples])

    @property
    def cdf_points(self):
        return list(zip(*(a.tolist() for a in empirical_cdf(self.min_sinr_db))))

    @property
    def mean_cdf_points(self):
        return list(zip(*(a.tolist() for a in empirical_cdf(self.mean_sinr_db))))

    @property
    def outage_fraction(self):
        """Share of samples whose weakest user misses its target."""
        if not self.samples:
            return float('nan')
        misses = sum(not s.report.within_target(self.outage_slack) for s in self.samples)
        return misses / len(self.samples)

    @property
    def mean_outage_fraction(self):
        if not self.samples:
            return float('nan')
        misses = sum(not s.report.mean_within_target(self.outage_slack) for s in self.samples)
        return misses / len(self.samples)

    @property
    def converged_fraction(self):
        if not self.samples:
            return float('nan')
        return sum(bool(s.converged) for s in self.samples) / len(self.samples)

    def summary(self):
        return {
            'method': self.method,
            'n_requested': self.n_requested,
            'n_samples': len(self.samples),
            'n_failed': len(self.failures),
            'outage_fraction': self.outage_fraction,
            'mean_outage_fraction': self.mean_outage_fraction,
            'converged_fraction': self.converged_fraction,
            'min_of_mean_sinr_db': float(np.min(self.mean_sinr_db)) if self.samples else None,
            'median_power_db': (float(linear_to_db(np.median(self.total_powers)))
                                if self.samples else None),
        }


def evaluate_realization(channel_source, method, config, realization_index):
    """Runs method on one realization; returns a Sample or a Failure."""
    try:
        H = channel_source(realization_index)
        outcome = method(H, config)
    except CellFreeError as e:
        logger.debug('realization %d failed: %s', realization_index, e)
        return Failure(realization_index, type(e).__name__, str(e))

    if not outcome.ok:
        return Failure(realization_index, outcome.status, 'no feasible precoder')
    return Sample(
        realization_index=realization_index,
        report=achieved_sinr(H, outcome.precoder, config),
        total_power=total_power(outcome.precoder),
        status=outcome.status,
        iterations=outcome.iterations,
        converged=outcome.converged,
        outcome=outcome,
    )


def ensemble(channel_source, method, config, n_realizations, executor=None,
             failure_limit=defaults.FAILURE_LIMIT, name=None, progress=None):
    """
    Evaluates method over realizations 0 .. n_realizations - 1.

    Args:
        channel_source: index -> ChannelRealization (must pickle for process pools)
        method: (ChannelRealization, SystemConfig) -> outcome with precoder, ok,
                status, iterations and converged attributes
        config: SystemConfig
        n_realizations: Number of realizations (>= 1)
        executor: Optional concurrent.futures executor; None runs serially
        failure_limit: Largest tolerated share of failed realizations
        name: Label for logs and the returned stats
        progress: Optional callback (done, total), called in realization order

    Returns:
        EnsembleStats

    Raises:
        EnsembleAborted: more than failure_limit of the realizations failed
    """
    if n_realizations < 1:
        raise ValueError('need at least one realization')
    name = name or getattr(method, '__name__', str(method))
    job = partial(evaluate_realization, channel_source, method, config)
    indices = range(n_realizations)
    iterator = executor.map(job, indices) if executor is not None else map(job, indices)
    results = []
    for done, result in enumerate(iterator, 1):
        results.append(result)
        if progress is not None:
            progress(done, n_realizations)

    samples = [r for r in results if isinstance(r, Sample)]
    failures = [r for r in results if isinstance(r, Failure)]
    logger.info('%s: %d realizations, %d failed', name, n_realizations, len(failures))
    if len(failures) > failure_limit * n_realizations:
        raise EnsembleAborted(failures, n_realizations)
    return EnsembleStats(name, tuple(samples), tuple(failures), n_realizations)
