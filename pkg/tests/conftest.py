"""Shared fixtures: the reference velocity-space setup and the long decay
run that several acceptance criteria measure."""

import pytest

from helpers import DecayRun, RefSetup


@pytest.fixture(scope="session")
def ref():
    return RefSetup()


@pytest.fixture(scope="session")
def a4_run():
    """The headline decay experiment: 128 cells, 256 points, A=1e-3, t=30."""
    return DecayRun(128, 256, track_entropy=True)
