from pathlib import Path

import pytest

from vortexbirth.predictor import canonical_scenario

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS


@pytest.fixture(scope="session")
def canon100():
    return canonical_scenario(100.0)


@pytest.fixture(scope="session")
def canon20():
    return canonical_scenario(20.0)
