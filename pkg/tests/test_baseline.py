import numpy as np
import pytest
from numpy.testing import assert_allclose

from cellfree.baseline import (PowerAllocation, conjugate_precoder, max_sinr_under_conjugate,
                               power_grid_from_snr_db)
from cellfree.datasources.channels import generate_channels
from cellfree.errors import ZeroChannel
from cellfree.metrics import achieved_sinr, total_power
from cellfree.model import ChannelRealization, SystemConfig, linear_to_db


def test_unit_norm_scaling():
    H = ChannelRealization(np.array([[[1.0, 0.0]]]))
    W = conjugate_precoder(H, PowerAllocation([[4.0]]))
    assert_allclose(W.w[0, 0], [2.0, 0.0])


def test_zero_power_gives_zero_vector():
    H = ChannelRealization(np.array([[[1.0, 1j]], [[2.0, 0.5]]]))
    W = conjugate_precoder(H, PowerAllocation([[0.0], [3.0]]))
    assert not np.any(W.w[0])
    assert np.sum(np.abs(W.w[1]) ** 2) == pytest.approx(3.0)


def test_total_power_is_reproduced(rng):
    config = SystemConfig.uniform(num_aps=3, num_antennas=8, num_users=4)
    H = generate_channels(config, 2)
    p = rng.uniform(0, 2, (4, 3))
    W = conjugate_precoder(H, PowerAllocation(p))
    assert total_power(W) == pytest.approx(p.sum(), rel=1e-12)
    assert_allclose(np.sum(np.abs(W.w) ** 2, axis=2), p, rtol=1e-12)


def test_own_gain_is_real_and_nonnegative(rng):
    config = SystemConfig.uniform(num_aps=2, num_antennas=8, num_users=3)
    H = generate_channels(config, 4)
    W = conjugate_precoder(H, PowerAllocation(rng.uniform(0.1, 1.0, (3, 2))))
    own = np.einsum('kmi,kmi->km', H.h, W.w)
    assert np.all(np.abs(own.imag) <= 1e-12)
    assert np.all(own.real >= 0)


def test_zero_channel_with_power_raises():
    h = np.ones((2, 2, 2), dtype=np.complex128)
    h[1, 0] = 0.0
    with pytest.raises(ZeroChannel) as info:
        conjugate_precoder(ChannelRealization(h), PowerAllocation(np.ones((2, 2))))
    assert (info.value.user, info.value.ap) == (1, 0)
    # no power there, nothing to point
    p = np.ones((2, 2))
    p[1, 0] = 0.0
    conjugate_precoder(ChannelRealization(h), PowerAllocation(p))


def test_allocation_rejects_negative_power():
    with pytest.raises(ValueError):
        PowerAllocation([[1.0, -0.5]])


def test_equal_split():
    config = SystemConfig.uniform(num_aps=2, num_antennas=4, num_users=4)
    alloc = PowerAllocation.equal(config, 16.0)
    assert_allclose(alloc.p, 2.0)
    assert alloc.total == pytest.approx(16.0)


def test_power_grid_in_db():
    assert_allclose(power_grid_from_snr_db([0, 10, 20], noise_power=2.0), [2.0, 20.0, 200.0])


@pytest.fixture(scope='module')
def sweep_case():
    config = SystemConfig.uniform(num_aps=2, num_antennas=16, num_users=4)
    H = generate_channels(config, 0)
    return config, H


def test_sweep_matches_direct_evaluation(sweep_case):
    config, H = sweep_case
    grid = power_grid_from_snr_db([0, 20, 40])
    sweep = max_sinr_under_conjugate(H, config, grid)
    for g, P in enumerate(grid):
        W = conjugate_precoder(H, PowerAllocation.equal(config, P))
        assert_allclose(sweep.per_user_sinr[g], achieved_sinr(H, W, config).per_user_sinr,
                        rtol=1e-10)


def test_tiny_power_gives_vanishing_sinr(sweep_case):
    config, H = sweep_case
    sweep = max_sinr_under_conjugate(H, config, [1e-12])
    assert sweep.min_sinr[0] < 1e-6


def test_sinr_saturates_at_top_of_grid(sweep_case):
    config, H = sweep_case
    sweep = max_sinr_under_conjugate(H, config, power_grid_from_snr_db([60, 63.0103]))
    change_db = abs(linear_to_db(sweep.min_sinr[1]) - linear_to_db(sweep.min_sinr[0]))
    assert change_db < 0.1
    assert sweep.supremum <= sweep.saturation_min * (1 + 1e-12)


def test_best_point_is_argmax(sweep_case):
    config, H = sweep_case
    sweep = max_sinr_under_conjugate(H, config)
    assert sweep.supremum == pytest.approx(sweep.min_sinr.max())
    assert sweep.best_power == sweep.power_grid[np.argmax(sweep.min_sinr)]
    assert np.all(np.diff(sweep.min_sinr) >= -1e-12)
    assert len(sweep.to_dict()['min_sinr_db']) == len(sweep.power_grid)


@pytest.mark.parametrize('grid', [[], [1.0, 0.5], [0.0, 1.0]])
def test_bad_grid(sweep_case, grid):
    config, H = sweep_case
    with pytest.raises(ValueError):
        max_sinr_under_conjugate(H, config, grid)
