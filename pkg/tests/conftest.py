"""Shared fixtures.

The expensive sweeps (workspace grid, per-axis RoM scans) are session
scoped: every computation in this package is deterministic, so caching
them is safe and keeps the suite fast.
"""

import numpy as np
import pytest

from exoneck.geometry import default_suit
from exoneck.workspace import AXES, scan_rom, scan_workspace


@pytest.fixture(scope="session")
def suit():
    return default_suit()


@pytest.fixture(scope="session")
def grid(suit):
    return scan_workspace(suit)


@pytest.fixture(scope="session")
def rom_scans(suit):
    return {axis: scan_rom(suit, axis) for axis in AXES}


@pytest.fixture()
def rng():
    return np.random.default_rng(20240814)
