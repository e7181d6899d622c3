"""Worker pool manager for ensemble runs

Keeps every executor the simulator starts in one registry, so a scenario that
fails half way (or a Ctrl-C) never leaves worker processes behind.

Pool size comes from the CELLFREE_MAX_WORKERS environment variable when it is
set, otherwise from the number of physical cores psutil reports. A size of 1
means no pool at all: callers get None and run serially, which keeps results
identical to a pooled run since aggregation is ordered by realization index.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor

import psutil

from . import config as defaults
from .errors import ConfigError

logger = logging.getLogger(__name__)


def default_max_workers(environ=None):
    """
    Worker cap from the environment, falling back to the physical core count.

    Raises:
        ConfigError: the environment variable is not a positive integer
    """
    environ = os.environ if environ is None else environ
    raw = environ.get(defaults.MAX_WORKERS_ENV)
    if raw is not None and raw.strip():
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value < 1:
            raise ConfigError('expected a positive integer, got {!r}'.format(raw),
                              defaults.MAX_WORKERS_ENV, source='environment')
        return value
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


class WorkerManager:
    """Registry of named executors"""

    def __init__(self):
        # {name: executor}
        self.pools = {}

    def start_pool(self, name, max_workers=None, kind='process'):
        """
        Start a pool and register it, replacing any pool of the same name

        Args:
            name: Pool identifier (e.g. the scenario name)
            max_workers: Pool size; None uses default_max_workers()
            kind: 'process' or 'thread'

        Returns:
            Executor, or None when the pool would have a single worker
        """
        self.shutdown_pool(name)
        workers = default_max_workers() if max_workers is None else int(max_workers)
        if workers < 1:
            raise ConfigError('worker count must be positive', 'workers')
        if workers == 1:
            return None

        if kind == 'process':
            pool = ProcessPoolExecutor(max_workers=workers)
        elif kind == 'thread':
            pool = ThreadPoolExecutor(max_workers=workers)
        else:
            raise ValueError('unknown pool kind {!r}'.format(kind))

        self.pools[name] = pool
        logger.info("WorkerManager: started '%s' (%d %s workers)", name, workers, kind)
        return pool

    def shutdown_pool(self, name, cancel=False):
        """
        Shut down a pool by name

        Returns:
            bool: True if a pool was registered under name
        """
        pool = self.pools.pop(name, None)
        if pool is None:
            return False
        pool.shutdown(wait=True, cancel_futures=cancel)
        logger.info("WorkerManager: '%s' shut down", name)
        return True

    def shutdown_all(self, cancel=False):
        for name in list(self.pools):
            self.shutdown_pool(name, cancel=cancel)

    def is_running(self, name):
        return name in self.pools

    def list_pools(self):
        return sorted(self.pools)


# Global singleton instance
_worker_manager = None


def get_worker_manager():
    """Get the global WorkerManager singleton"""
    global _worker_manager
    if _worker_manager is None:
        _worker_manager = WorkerManager()
    return _worker_manager
