"""
Shared fixtures; puts the project root and src/ on sys.path the way main.py does.
"""
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, "src"))

from models.problem import GRFNoiseSpec, PolyRegressionSpec  # noqa: E402
from services.problems import PolyRegressionProblem, QuadraticToyProblem  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow ensemble checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: ensemble checks that take tens of seconds or more")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def toy():
    return QuadraticToyProblem()


@pytest.fixture(scope="session")
def poly():
    return PolyRegressionProblem(PolyRegressionSpec(noise=GRFNoiseSpec(seed=3)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
