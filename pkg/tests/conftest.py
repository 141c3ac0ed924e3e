"""
Pytest configuration and shared fixtures for the test suite
"""

import os
import random
import sys

import numpy as np
import pytest

# Add the project root to sys.path so tests can import modules
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from dicing.keyschedule import build_key_material  # noqa: E402
import utils.observability  # noqa: E402


@pytest.fixture(autouse=True)
def reset_observability():
    """Give every test a fresh metrics collector"""
    utils.observability.reset_observability_manager()
    yield
    utils.observability.reset_observability_manager()


@pytest.fixture
def key128():
    """Sample 128-bit key 00 01 .. 0f"""
    return bytes(range(16))


@pytest.fixture
def key256():
    """Sample 256-bit key 00 01 .. 1f"""
    return bytes(range(32))


@pytest.fixture
def sample_iv():
    """Sample 32-byte IV"""
    return bytes((7 * i + 3) & 0xFF for i in range(32))


@pytest.fixture(scope="session")
def km128():
    """Key material for the 128-bit sample key, built once per session"""
    return build_key_material(bytes(range(16)))


@pytest.fixture(scope="session")
def km256():
    return build_key_material(bytes(range(32)))


@pytest.fixture
def rng():
    """Seeded stdlib generator"""
    return random.Random(20240601)


@pytest.fixture
def np_rng():
    """Seeded numpy generator"""
    return np.random.default_rng(20240601)


def pytest_configure(config):
    """Configure custom pytest markers"""
    config.addinivalue_line("markers", "integration: mark test as integration test")
    config.addinivalue_line("markers", "slow: mark test as slow running")
