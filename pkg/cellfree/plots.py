"""
Static figures from the written result data (Agg backend, PNG only).
"""

import logging

import matplotlib
matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt
import numpy as np

from . import colours
from .metrics import empirical_cdf
from .model import linear_to_db

logger = logging.getLogger(__name__)


def plot_sinr_cdf(stats_by_method, target_db, output_file, mean_user=True):
    """
    SINR CDF of every method on one axis.

    Args:
        stats_by_method: {method name: EnsembleStats}
        target_db: SINR target line (dB), or None
        output_file: PNG path
        mean_user: Plot mean-user SINR (True) or min-user SINR
    """
    fig, ax = plt.subplots(1, 1, figsize=(10, 7))
    for name, stats in stats_by_method.items():
        values = stats.mean_sinr_db if mean_user else stats.min_sinr_db
        x, F = empirical_cdf(values)
        if x.size:
            ax.step(x, F, where='post', color=colours.for_method(name), linewidth=2, label=name)
    if target_db is not None:
        ax.axvline(target_db, color=colours.mpl(colours.TARGET_COLOUR), linestyle='--',
                   alpha=0.7, linewidth=1, label='target')

    ax.set_xlabel('{} SINR (dB)'.format('Mean-user' if mean_user else 'Min-user'), fontsize=12)
    ax.set_ylabel('CDF', fontsize=12)
    ax.set_ylim(0, 1.02)
    ax.set_title('SINR CDF', fontsize=14, fontweight='bold')
    ax.grid(True, alpha=0.3)
    ax.legend()
    plt.tight_layout()
    plt.savefig(output_file, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info('plot saved to %s', output_file)


def plot_power(stats_by_method, noise_power, output_file):
    """Median transmit SNR per method with the 10-90 % spread as error bars."""
    names = list(stats_by_method)
    fig, ax = plt.subplots(1, 1, figsize=(10, 6))
    for i, name in enumerate(names):
        snr = linear_to_db(stats_by_method[name].total_powers / noise_power)
        if snr.size == 0:
            continue
        lo, med, hi = np.percentile(snr, [10, 50, 90])
        ax.bar(i, med, color=colours.for_method(name), alpha=0.8)
        ax.errorbar(i, med, yerr=[[med - lo], [hi - med]], color='k', capsize=6)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylabel('Total transmit SNR (dB)', fontsize=12)
    ax.set_title('Transmit power', fontsize=14, fontweight='bold')
    ax.grid(True, axis='y', alpha=0.3)
    plt.tight_layout()
    plt.savefig(output_file, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info('plot saved to %s', output_file)


def plot_admm_trace(trace, output_file):
    """Primal/dual residuals and their thresholds over the iterations of one run."""
    t = [rec.iteration for rec in trace]
    fig, ax = plt.subplots(1, 1, figsize=(10, 6))
    ax.semilogy(t, [rec.max_primal_residual for rec in trace], 'o-',
                color=colours.mpl(colours.ORANGE), label='max primal residual')
    ax.semilogy(t, [rec.eps_primal for rec in trace], '--',
                color=colours.mpl(colours.ORANGE), alpha=0.6, label='primal threshold')
    ax.semilogy(t, [rec.dual_residual for rec in trace], 's-',
                color=colours.mpl(colours.BLUE), label='dual residual')
    ax.semilogy(t, [rec.eps_dual for rec in trace], '--',
                color=colours.mpl(colours.BLUE), alpha=0.6, label='dual threshold')
    ax.set_xlabel('Iteration', fontsize=12)
    ax.set_ylabel('Residual', fontsize=12)
    ax.set_title('ADMM residuals', fontsize=14, fontweight='bold')
    ax.grid(True, alpha=0.3)
    ax.legend()
    plt.tight_layout()
    plt.savefig(output_file, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info('plot saved to %s', output_file)
