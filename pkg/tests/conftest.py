import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from xia_motion.data import synthesize_couple  # noqa: E402
from xia_motion.models import ModelConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the long training experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long training experiments (run with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    """Four joints, short windows: small enough for finite-difference checks."""
    return ModelConfig(J=4, M=4, T=2, C=6, d_model=8, gcn_layers=2, gcn_hidden=8, heads_key=2)


@pytest.fixture
def skeleton_config():
    """Full 18-joint skeleton with small layers, for data-driven tests."""
    return ModelConfig(J=18, M=4, T=2, C=6, d_model=8, gcn_layers=2, gcn_hidden=8, heads_key=2)


@pytest.fixture
def mirror_couple():
    return synthesize_couple(7, "lagged-mirror", 60, 25.0, aerial=1, couple=1, rep=1, seq_id="mirror")
