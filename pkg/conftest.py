"""Shared fixtures for the nearres test suite"""

import pytest

from nearres.field import random_field
from nearres.lattice import TorusGeometry
from nearres.resonance import BandwidthSpec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance sweeps (deselect with -m 'not slow')")


@pytest.fixture
def unit_geom():
    return TorusGeometry()


@pytest.fixture
def stretched_geom():
    return TorusGeometry('1.1', '1')


@pytest.fixture
def theorem_spec():
    return BandwidthSpec.theorem(1.0)


@pytest.fixture
def small_fields(unit_geom):
    """Three seeded random fields on R = 3"""
    return tuple(random_field(unit_geom, 3, 1.0, seed=s) for s in (11, 12, 13))
