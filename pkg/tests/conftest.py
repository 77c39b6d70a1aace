"""Shared fixtures: the reference rigid body and its initial velocity."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from suslov_lab.models.run_config import RunConfig
from suslov_lab.models.state import InertiaTensor

INERTIA_ROWS = [1.0, 0.1, 0.2, 0.1, 1.0, 0.2, 0.2, 0.1, 1.0]
OMEGA0 = (0.4, 0.5, 0.0)


@pytest.fixture
def inertia():
    return InertiaTensor.from_rows(INERTIA_ROWS)


@pytest.fixture
def diagonal_inertia():
    return InertiaTensor(matrix=np.diag([1.0, 2.0, 3.0]))


@pytest.fixture
def omega0():
    return np.array(OMEGA0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def run_config():
    def make(**overrides):
        values = {
            "inertia": INERTIA_ROWS,
            "omega0": OMEGA0,
            "eps": 1e-2,
            "t_final": 0.1,
            "method": "midpoint",
        }
        values.update(overrides)
        return RunConfig.from_mapping(values)
    return make


def random_constrained(rng, n, scale=1.0):
    """n angular velocities with w3 = 0"""
    w = np.zeros((n, 3))
    w[:, :2] = rng.uniform(-scale, scale, size=(n, 2))
    return w
