import numpy as np
import pytest
from numpy.testing import assert_array_equal

from cellfree.admm import run_admm
from cellfree.centralized import solve_centralized
from cellfree.datasources.channels import generate_channels
from cellfree.errors import MissingReport
from cellfree.model import SystemConfig
from cellfree.netsim import (CentralNode, CommLog, ConsensusBroadcast, InterferenceReport,
                             Scheme, comm_volume, run_centralized_protocol,
                             run_distributed_protocol)


def test_centralized_volume():
    v = comm_volume('centralized', 4, 16, 4)
    assert v.complex_scalars == 256
    assert v.per_exchange_scalars == 512
    assert v.per_iteration_bytes == 256 * 16


def test_cell_free_volume():
    v = comm_volume(Scheme.ADMM_CELL_FREE, 4, 16, 4, iterations=10)
    assert v.per_exchange_scalars == 16
    assert v.total_bytes == 1280
    assert v.downlink_bytes == 10 * 4 * 8
    assert v.unicast_downlink_bytes == 4 * v.downlink_bytes


def test_cellular_volume():
    assert comm_volume('admm-cellular', 4, 16, 4).per_exchange_scalars == 4 * 3 * 4


@pytest.mark.parametrize('N', [1, 16, 64])
def test_centralized_over_cell_free_is_twice_antennas(N):
    central = comm_volume('centralized', 4, N, 4).per_exchange_scalars
    ours = comm_volume('admm-cell-free', 4, N, 4).per_exchange_scalars
    assert central / ours == 2 * N


def test_volume_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        comm_volume('centralized', 0, 4, 4)
    with pytest.raises(ValueError):
        comm_volume('bogus', 1, 1, 1)


def test_log_totals_are_sums_of_parts():
    log = CommLog('admm-cell-free')
    for t in (1, 2):
        for m in range(3):
            log.add(InterferenceReport(m, t, np.zeros(4)), t)
        log.add(ConsensusBroadcast(t, np.zeros(4)), t)
    rows = log.rows()
    assert [(r['iteration'], r['direction']) for r in rows] == [
        (1, 'uplink'), (1, 'downlink'), (2, 'uplink'), (2, 'downlink')]
    assert sum(r['bytes'] for r in rows) == log.total_bytes == log.uplink_bytes + log.downlink_bytes
    assert log.uplink_bytes == 2 * 3 * 4 * 8
    assert log.message_count == 8


def test_central_node_barrier():
    node = CentralNode(2)
    with pytest.raises(MissingReport) as info:
        node.collect([InterferenceReport(0, 3, [1.0]), InterferenceReport(1, 2, [1.0])], 3)
    assert (info.value.ap, info.value.iteration) == (1, 3)


@pytest.fixture(scope='module')
def forced_ten():
    """Four APs and users, tolerances too tight to ever stop before the cap."""
    config = SystemConfig.uniform(num_aps=4, num_antennas=4, num_users=4, max_iters=10,
                                  primal_tol=1e-300, dual_tol=1e-300, rel_tol=1e-300)
    return config, generate_channels(config, 0)


def test_uplink_bytes_for_ten_iterations(forced_ten):
    config, H = forced_ten
    result, log = run_distributed_protocol(H, config)
    assert result.iterations_used == 10
    assert log.uplink_bytes == 1280
    assert log.downlink_bytes == 10 * 4 * 8
    assert log.iterations == list(range(1, 11))


def test_protocol_is_bit_identical_to_direct_run(forced_ten):
    config, H = forced_ten
    via_messages, _ = run_distributed_protocol(H, config)
    direct = run_admm(H, config)
    assert_array_equal(via_messages.precoder.w, direct.precoder.w)
    assert_array_equal(via_messages.omega, direct.omega)
    assert via_messages.converged == direct.converged


def test_latency_is_two_phases_per_iteration(small_config, small_channel):
    result, log = run_distributed_protocol(small_channel, small_config, latency=0.5)
    assert log.simulated_latency == pytest.approx(result.iterations_used * 1.0)


def test_centralized_protocol_bytes(small_config, small_channel):
    result, log = run_centralized_protocol(small_channel, small_config)
    K, M, N = small_config.shape
    assert log.uplink_bytes == 16 * M * N * K
    assert log.downlink_bytes == 16 * M * N * K
    direct = solve_centralized(small_channel, small_config)
    assert_array_equal(result.precoder.w, direct.precoder.w)
