import numpy as np
import pytest

from cellfree.datasources.channels import generate_channels
from cellfree.model import SystemConfig


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the full-scale reproduction tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_config():
    """Two APs, four antennas, two users at the default SNR and target."""
    return SystemConfig.uniform(num_aps=2, num_antennas=4, num_users=2)


@pytest.fixture
def small_channel(small_config):
    return generate_channels(small_config, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
