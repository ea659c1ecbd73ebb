import numpy as np
import pytest

from flownav.env import EnvConfig
from flownav.flowfield import SynthConfig, synth_flow
from flownav.geometry import REFERENCE_BOUNDS, REFERENCE_OBSTACLES, World


@pytest.fixture
def ref_world():
    return World(REFERENCE_BOUNDS, REFERENCE_OBSTACLES)


@pytest.fixture(scope="session")
def small_synth():
    """Coarse synthetic flow over the reference domain, cheap enough for unit tests."""
    cfg = SynthConfig(n_frames=12, nx=61, ny=31, obstacles=REFERENCE_OBSTACLES)
    return synth_flow(cfg, seed=3)


@pytest.fixture
def ref_env(small_synth, ref_world):
    return EnvConfig(flow=small_synth, world=ref_world)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
