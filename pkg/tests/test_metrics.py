from concurrent.futures import ThreadPoolExecutor
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from cellfree import methods
from cellfree.datasources.channels import channel_source, generate_channels
from cellfree.errors import EnsembleAborted, ZeroChannel
from cellfree.metrics import (EnsembleStats, Sample, SinrReport, achieved_sinr,
                              effective_gains, empirical_cdf, ensemble, total_power,
                              transmit_snr_db)
from cellfree.model import ChannelRealization, Precoder, SystemConfig, linear_to_db


def test_zero_precoder_gives_zero_sinr(small_config, small_channel):
    report = achieved_sinr(small_channel, Precoder.zeros(small_config), small_config)
    assert_array_equal(report.per_user_sinr, 0.0)
    assert not report.meets_target.any()


def test_two_users_sharing_one_antenna():
    config = SystemConfig(num_aps=1, num_antennas=1, num_users=2, noise_power=1.0,
                          large_scale=1.0, sinr_target=1.0)
    H = ChannelRealization(np.ones((2, 1, 1)))
    report = achieved_sinr(H, np.ones((2, 1, 1)), config)
    assert_allclose(report.per_user_sinr, [0.5, 0.5])


def test_single_user_matched_filter():
    config = SystemConfig(num_aps=1, num_antennas=2, num_users=1, noise_power=2.0,
                          large_scale=1.0, sinr_target=1.0)
    h = np.array([1.0 + 1j, 2.0])
    alpha = 0.7
    report = achieved_sinr(ChannelRealization(h[None, None]), alpha * np.conj(h)[None, None], config)
    norm2 = np.sum(np.abs(h) ** 2)
    assert report.per_user_sinr[0] == pytest.approx(alpha ** 2 * norm2 ** 2 / 2.0)


def test_report_db_fields_and_target_flags():
    report = SinrReport([10.0, 100.0], [20.0, 20.0])
    assert_allclose(report.per_user_sinr_db, [10.0, 20.0], atol=1e-12)
    assert report.min_sinr_db == pytest.approx(10.0)
    assert report.mean_sinr_db == pytest.approx(10 * np.log10(55.0))
    assert report.meets_target.tolist() == [False, True]
    assert report.min_ratio == pytest.approx(0.5)


@pytest.mark.parametrize('w, expected', [
    (np.zeros((1, 1, 3)), 0.0),
    (np.array([[[1.0, 0.0]], [[0.0, 1j]]]), 2.0),
])
def test_total_power(w, expected):
    assert total_power(Precoder(w)) == pytest.approx(expected)


def test_transmit_snr_db():
    w = np.zeros((1, 1, 1), dtype=complex)
    w[0, 0, 0] = 10.0
    assert transmit_snr_db(w, 1.0) == pytest.approx(20.0)


def _random_pair(seed, K=3, M=2, N=3):
    rng = np.random.default_rng(seed)
    shape = (K, M, N)
    h = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    config = SystemConfig(num_aps=M, num_antennas=N, num_users=K, large_scale=1.0, sinr_target=1.0)
    return ChannelRealization(h), Precoder(w), config


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.lists(st.floats(-np.pi, np.pi), min_size=3, max_size=3))
def test_sinr_ignores_per_user_precoder_phase(seed, phases):
    H, W, config = _random_pair(seed)
    rotated = Precoder(W.w * np.exp(1j * np.asarray(phases))[:, None, None])
    assert_allclose(achieved_sinr(H, rotated, config).per_user_sinr,
                    achieved_sinr(H, W, config).per_user_sinr, rtol=1e-9)


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_gain_terms_invariant_under_reciprocal_scaling(seed, alpha):
    H, W, config = _random_pair(seed)
    before = np.abs(effective_gains(H, W))
    after = np.abs(effective_gains(H.scaled(alpha), Precoder(W.w / alpha)))
    assert_allclose(after, before, rtol=1e-9)
    assert_allclose(achieved_sinr(H.scaled(alpha), W.w / alpha, config).per_user_sinr,
                    achieved_sinr(H, W, config).per_user_sinr, rtol=1e-9)


def test_empirical_cdf_example():
    x, F = empirical_cdf([20.0, 10.0, 30.0])
    assert_allclose(x, [10.0, 20.0, 30.0])
    assert_allclose(F, [1 / 3, 2 / 3, 1.0])


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=200))
def test_empirical_cdf_matches_sort(values):
    x, F = empirical_cdf(values)
    ordered = np.sort(values)
    assert_array_equal(x, np.unique(ordered))
    for xi, Fi in zip(x, F):
        assert Fi == np.searchsorted(ordered, xi, side='right') / len(values)
    assert F[-1] == 1.0
    assert np.all(np.diff(F) > 0)


def test_empirical_cdf_empty():
    x, F = empirical_cdf([])
    assert x.size == F.size == 0


def _stats(sinrs_db, target_db=15.0):
    samples = [Sample(i, SinrReport(10 ** (np.atleast_1d(s) / 10), 10 ** (target_db / 10)), 1.0)
               for i, s in enumerate(sinrs_db)]
    return EnsembleStats('fake', tuple(samples))


def test_outage_all_above_target():
    assert _stats([16.0, 20.0, 15.0]).outage_fraction == 0.0


def test_outage_half_below():
    assert _stats([10.0, 20.0, 14.0, 16.0]).outage_fraction == 0.5


def test_outage_uses_weakest_user_and_mean_uses_average():
    stats = _stats([[10.0, 20.0]])
    assert stats.outage_fraction == 1.0
    assert stats.mean_outage_fraction == 0.0


def test_cdf_points_sorted_by_value():
    stats = _stats([30.0, 10.0, 20.0])
    assert [round(x, 9) for x, _ in stats.cdf_points] == [10.0, 20.0, 30.0]
    assert stats.cdf_points[-1][1] == 1.0


def fake_method(fail=()):
    """Conjugate precoding that raises on the listed realizations."""
    def method(H, config):
        if H.realization_index in fail:
            raise ZeroChannel(0)
        return methods.conjugate(H, config)
    return method


def test_ensemble_counts_failures_apart(small_config):
    source = channel_source(small_config)
    stats = ensemble(source, fake_method(fail={3}), small_config, 20, name='conj')
    assert len(stats.samples) == 19
    assert [f.realization_index for f in stats.failures] == [3]
    assert stats.failures[0].status == 'ZeroChannel'
    assert 3 not in [s.realization_index for s in stats.samples]
    assert stats.summary()['n_failed'] == 1


def test_ensemble_aborts_past_failure_limit(small_config):
    source = channel_source(small_config)
    with pytest.raises(EnsembleAborted) as info:
        ensemble(source, fake_method(fail={0, 1, 2}), small_config, 20)
    assert len(info.value.failures) == 3
    assert info.value.total == 20


def test_ensemble_reports_progress(small_config):
    seen = []
    ensemble(channel_source(small_config), fake_method(), small_config, 4,
             progress=lambda done, total: seen.append((done, total)))
    assert seen == [(1, 4), (2, 4), (3, 4), (4, 4)]


def test_non_ok_outcome_is_a_failure(small_config):
    def nothing(H, config):
        return SimpleNamespace(ok=False, status='infeasible', precoder=None)
    with pytest.raises(EnsembleAborted):
        ensemble(channel_source(small_config), nothing, small_config, 3)


def test_threaded_ensemble_equals_serial(small_config):
    source = channel_source(small_config)
    serial = ensemble(source, methods.centralized, small_config, 6)
    with ThreadPoolExecutor(3) as pool:
        threaded = ensemble(source, methods.centralized, small_config, 6, executor=pool)
    assert_array_equal(serial.min_sinr_db, threaded.min_sinr_db)
    assert_array_equal(serial.total_powers, threaded.total_powers)


def test_centralized_ensemble_has_no_outage(small_config):
    stats = ensemble(channel_source(small_config), methods.centralized, small_config, 10)
    assert stats.outage_fraction == 0.0
    assert stats.converged_fraction == 1.0
    assert np.all(np.diff([F for _, F in stats.cdf_points]) > 0)


def test_ensemble_rejects_zero_realizations(small_config):
    with pytest.raises(ValueError):
        ensemble(channel_source(small_config), methods.centralized, small_config, 0)


def test_sinr_db_uses_linear_mean():
    report = achieved_sinr(generate_channels(SystemConfig.uniform(1, 2, 2), 0),
                           np.ones((2, 1, 2)), SystemConfig.uniform(1, 2, 2))
    assert report.mean_sinr_db == pytest.approx(float(linear_to_db(report.per_user_sinr.mean())))
