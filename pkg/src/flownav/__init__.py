"""UAV navigation in unsteady flow with recurrent PPO, plus PPO and TD3 baselines."""

from .agents import ESTIMATORS, FeedForwardPPO, RecurrentPPO, TD3Agent
from .config import RunConfig, smoke_config
from .env import EnvConfig, NavEnv, Outcome, Region, RewardConstants
from .flowfield import (FlowSnapshotSet, SynthConfig, load_flow, save_flow, synth_flow,
                        uniform_flow)
from .geometry import REFERENCE_BOUNDS, REFERENCE_OBSTACLES, Obstacle, World

__all__ = [
    "ESTIMATORS", "EnvConfig", "FeedForwardPPO", "FlowSnapshotSet", "NavEnv", "Obstacle",
    "Outcome", "REFERENCE_BOUNDS", "REFERENCE_OBSTACLES", "RecurrentPPO", "Region", "RewardConstants",
    "RunConfig", "SynthConfig", "TD3Agent", "World", "load_flow", "save_flow", "smoke_config",
    "synth_flow", "uniform_flow",
]

__version__ = "0.1.0"
