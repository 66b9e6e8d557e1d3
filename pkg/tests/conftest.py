import numpy as np
import pytest

from linkstate.channel import ChannelParams, PriorModelParams, make_prior
from linkstate.env import SceneConfig


@pytest.fixture
def scene():
    return SceneConfig()


@pytest.fixture
def small_scene():
    return SceneConfig(width=100.0, length=100.0, bs_x=50.0, bs_y=50.0, grid_step=2.0)


@pytest.fixture
def channel():
    return ChannelParams()


@pytest.fixture
def prior_params():
    return PriorModelParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def radial_prior(scene):
    return make_prior(PriorModelParams(), scene)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
