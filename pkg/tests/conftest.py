import random

import pytest

from probstream import api
from probstream.config import Config


@pytest.fixture
def context():
    return {}


@pytest.fixture
def config():
    return Config.build()


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture(autouse=True)
def seed_variable(monkeypatch):
    monkeypatch.delenv('PROBSTREAM_SEED', raising=False)
    api._configs.clear()
