"""
Rayleigh-fading channel source.

Every entry h_km^(i) is drawn as CN(0, beta_km): real and imaginary parts are
independent N(0, beta_km / 2). The generator is Philox (counter based) keyed on
(rng_seed, realization_index), so realizations can be produced out of order and
in parallel and still be bit-identical to a serial run.
"""

from functools import partial

import numpy as np

from ..model import ChannelRealization


def channel_rng(seed, realization_index):
    """
    Returns the random generator owning one realization.

    The stream is a pure function of (seed, realization_index); draws inside the
    realization follow the fixed (k, m, i, re/im) order.
    """
    key = np.random.SeedSequence([int(seed), int(realization_index)])
    return np.random.Generator(np.random.Philox(key))


def generate_channels(config, realization_index):
    """
    Draws one channel realization h_km ~ CN(0, beta_km I_N) for all (k, m).

    A zero beta_km yields an all-zero h_km.
    """
    if realization_index < 0:
        raise ValueError('realization index must be nonnegative')

    rng = channel_rng(config.rng_seed, realization_index)
    draws = rng.standard_normal(config.shape + (2,))
    scale = np.sqrt(config.large_scale / 2.0)[:, :, None]
    h = scale * (draws[..., 0] + 1j * draws[..., 1])
    return ChannelRealization(h, realization_index)


def channel_source(config):
    """Picklable index -> ChannelRealization callable for the ensemble harness."""
    return partial(generate_channels, config)
