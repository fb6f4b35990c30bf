import pytest

from numpy.random import PCG64, Generator, SeedSequence
from pathlib import Path

from rfidcheck.protocol import ProtocolConfig

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> Generator:
    return Generator(PCG64(SeedSequence(12345)))


@pytest.fixture
def pcfg() -> ProtocolConfig:
    return ProtocolConfig(l=128)


@pytest.fixture
def models_dir() -> Path:
    return MODELS_DIR
