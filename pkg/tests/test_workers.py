from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

import psutil
import pytest

from cellfree.errors import ConfigError
from cellfree.workers import WorkerManager, default_max_workers, get_worker_manager


def test_env_overrides_core_count():
    assert default_max_workers({'CELLFREE_MAX_WORKERS': '3'}) == 3


def test_falls_back_to_physical_cores():
    expected = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    assert default_max_workers({}) == expected


@pytest.mark.parametrize('raw', ['0', '-2', 'lots'])
def test_bad_env_value(raw):
    with pytest.raises(ConfigError) as info:
        default_max_workers({'CELLFREE_MAX_WORKERS': raw})
    assert info.value.key_path == 'CELLFREE_MAX_WORKERS'


def test_single_worker_means_serial():
    manager = WorkerManager()
    assert manager.start_pool('one', 1) is None
    assert not manager.is_running('one')


def test_pools_are_registered_and_shut_down():
    manager = WorkerManager()
    threads = manager.start_pool('a', 2, kind='thread')
    procs = manager.start_pool('b', 2)
    assert isinstance(threads, ThreadPoolExecutor)
    assert isinstance(procs, ProcessPoolExecutor)
    assert manager.list_pools() == ['a', 'b']
    assert list(threads.map(abs, [-1, -2])) == [1, 2]
    assert manager.shutdown_pool('a')
    assert not manager.shutdown_pool('a')
    manager.shutdown_all()
    assert manager.list_pools() == []


def test_bad_pool_requests():
    manager = WorkerManager()
    with pytest.raises(ConfigError):
        manager.start_pool('x', 0)
    with pytest.raises(ValueError):
        manager.start_pool('x', 2, kind='fiber')


def test_singleton():
    assert get_worker_manager() is get_worker_manager()
