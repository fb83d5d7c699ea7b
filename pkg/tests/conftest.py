import json
from pathlib import Path

import numpy as np
import pytest

from gammakit import fixtures as fx
from gammakit.models import CommutingPair, RunConfig


@pytest.fixture
def cfg() -> RunConfig:
    return RunConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20_240_917)


@pytest.fixture
def unit_eigenvalue_pair() -> CommutingPair:
    return fx.unit_eigenvalue_pair()


@pytest.fixture
def scaled_identity_pair() -> CommutingPair:
    return fx.scaled_identity_pair()


@pytest.fixture
def two_factor_unitary() -> CommutingPair:
    return fx.two_factor_unitary()


@pytest.fixture
def write_json(tmp_path: Path):
    """Write a JSON value under ``tmp_path`` and return the path."""

    def _write(name: str, value) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(value))
        return path

    return _write
