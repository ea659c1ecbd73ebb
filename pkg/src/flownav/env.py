"""Episodic navigation task: reset/step, observations, shaped reward and termination.

The functional core (:func:`reset`, :func:`step`) is pure given its inputs;
:class:`NavEnv` wraps it in the familiar ``reset(seed) / step(action)`` API.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .dynamics import SPEED_CAP_FACTOR, ActionCmd, UavState, rk4_step, wrap_angle
from .flowfield import FlowSnapshotSet, max_speed, sample_velocity_clamped

OBS_DIM = 3 + geo.N_SENSORS
REWARD_KEYS = ("trans", "obs", "free", "best", "step", "energy")


class ConfigError(ValueError):
    pass


class Outcome(enum.Enum):
    RUNNING = "running"
    TARGET_REACHED = "target_reached"
    CRASHED_OBSTACLE = "crashed_obstacle"
    OUT_OF_BOUNDS = "out_of_bounds"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class Region:
    """Closed axis-aligned rectangle; may be degenerate (a segment or a point)."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if self.x_lo > self.x_hi or self.y_lo > self.y_hi:
            raise ConfigError(f"region bounds out of order: {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi

    def sample(self, rng: np.random.Generator) -> tuple[float, float]:
        return (float(rng.uniform(self.x_lo, self.x_hi)), float(rng.uniform(self.y_lo, self.y_hi)))


@dataclass(frozen=True)
class RewardConstants:
    sigma_r: float = 1.0
    alpha: float = 1.0
    psi: float = 4.0
    zeta: float = 0.2
    r_free: float = 0.05
    r_step: float = -0.05
    kappa: float = 0.05
    bonus_target: float = 20.0
    penalty_crash: float = -20.0
    penalty_bounds: float = -10.0


@dataclass(frozen=True)
class EnvConfig:
    flow: FlowSnapshotSet
    world: geo.World = field(default_factory=geo.World)
    max_steps: int = 80
    target_radius: float = 0.15
    start_region: Region = Region(-1.8, -0.5, 0.2, 2.8)
    target_region: Region = Region(2.0, 3.8, 0.2, 2.8)
    rewards: RewardConstants = field(default_factory=RewardConstants)
    dt: float | None = None
    speed_cap: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ConfigError("max_steps must be positive")
        if self.target_radius <= 0:
            raise ConfigError("target_radius must be positive")
        rc = self.rewards
        if rc.psi <= 0 or rc.alpha <= 0 or rc.kappa < 0 or rc.r_step > 0:
            raise ConfigError("need psi > 0, alpha > 0, kappa >= 0 and r_step <= 0")
        b = self.world.bounds
        for name, r in (("start_region", self.start_region), ("target_region", self.target_region)):
            if r.x_lo < b.x_lo or r.x_hi > b.x_hi or r.y_lo < b.y_lo or r.y_hi > b.y_hi:
                raise ConfigError(f"{name} {r} not inside bounds {b}")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        # sampler must see the same footprints the world collides with
        flow = self.flow.with_obstacles(self.world.obstacles)
        object.__setattr__(self, "flow", flow)
        object.__setattr__(self, "_v_max", max_speed(flow))

    @property
    def step_dt(self) -> float:
        return self.flow.dt_snap if self.dt is None else self.dt

    @property
    def v_max(self) -> float:
        return self._v_max

    @property
    def own_speed_cap(self) -> float:
        if self.speed_cap is not None:
            return self.speed_cap
        return SPEED_CAP_FACTOR * self._v_max


@dataclass(frozen=True)
class Observation:
    theta: float
    phi: float
    d0: float
    rays: np.ndarray

    def to_vector(self, world: geo.World) -> np.ndarray:
        """Network input: angles over pi, distance over the domain diagonal, rays as stored."""
        return np.concatenate(([self.theta / math.pi, self.phi / math.pi, self.d0 / world.diagonal],
                               self.rays))


@dataclass(frozen=True)
class EpisodeState:
    uav: UavState
    target: tuple[float, float]
    start: tuple[float, float]
    frame: int
    steps: int = 0
    outcome: Outcome = Outcome.RUNNING


@dataclass
class StepResult:
    obs: Observation
    reward: float
    terminated: Outcome
    info: dict

    @property
    def done(self) -> bool:
        return self.terminated is not Outcome.RUNNING


def observe(cfg: EnvConfig, st: EpisodeState, readings: np.ndarray | None = None) -> Observation:
    u = st.uav
    if readings is None:
        readings = geo.sensor_sweep(cfg.world, u.pos, u.theta)
    tx, ty = st.target
    bearing = math.atan2(ty - u.y, tx - u.x)
    rays = np.clip(readings / cfg.world.sensor_max_range, 0.0, 1.0)
    return Observation(u.theta, wrap_angle(bearing - u.theta), math.hypot(tx - u.x, ty - u.y), rays)


def _sample_clear(region: Region, world: geo.World, rng, what: str) -> tuple[float, float]:
    for _ in range(100):
        p = region.sample(rng)
        if not geo.point_in_obstacle(world, p):
            return p
    raise ConfigError(f"could not sample a {what} clear of obstacles after 100 attempts")


def reset(cfg: EnvConfig, episode_seed: int) -> tuple[Observation, EpisodeState]:
    rng = np.random.default_rng(episode_seed)
    start = _sample_clear(cfg.start_region, cfg.world, rng, "start")
    target = _sample_clear(cfg.target_region, cfg.world, rng, "target")
    frame = int(rng.integers(cfg.flow.n_frames))
    heading = math.atan2(target[1] - start[1], target[0] - start[0])
    st = EpisodeState(UavState(start[0], start[1], wrap_angle(heading)), target, start, frame)
    return observe(cfg, st), st


def compute_reward(prev: UavState, new: UavState, target, world: geo.World,
                   rc: RewardConstants, flow_vel, readings: np.ndarray | None = None):
    """Six shaping terms for the transition ``prev -> new``.

    Returns ``(total, breakdown)`` with ``total == sum(breakdown.values())``.
    ``readings`` are raw sensor distances at ``new`` (computed if omitted).
    """
    if readings is None:
        readings = geo.sensor_sweep(world, new.pos, new.theta)
    tx, ty = target
    d_prev = math.hypot(prev.x - tx, prev.y - ty)
    d_new = math.hypot(new.x - tx, new.y - ty)
    free = geo.free_space_ahead(world, new.pos, new.theta)
    breakdown = {
        "trans": rc.sigma_r * (d_prev - d_new),
        "obs": -rc.alpha * math.exp(-rc.psi * float(np.min(readings))),
        "free": rc.r_free if free else 0.0,
        "best": 0.0 if free else rc.zeta * geo.best_direction(readings),
        "step": rc.r_step,
        "energy": -rc.kappa * math.hypot(new.vx - flow_vel[0], new.vy - flow_vel[1]),
    }
    return sum(breakdown.values()), breakdown


def step(cfg: EnvConfig, st: EpisodeState, action) -> tuple[StepResult, EpisodeState]:
    if st.outcome is not Outcome.RUNNING:
        raise RuntimeError("step() called on a finished episode")
    if not isinstance(action, ActionCmd):
        action = ActionCmd(float(action[0]), float(action[1]))
    u = action.clipped()
    frame = st.frame
    flow = cfg.flow

    def flow_at(p):
        return sample_velocity_clamped(flow, frame, p)

    new = rk4_step(st.uav, u, flow_at, cfg.step_dt, cfg.own_speed_cap)
    world = cfg.world
    readings = geo.sensor_sweep(world, new.pos, new.theta)
    _, breakdown = compute_reward(st.uav, new, st.target, world, cfg.rewards,
                                  flow_at(new.pos), readings)

    steps = st.steps + 1
    rc = cfg.rewards
    if math.hypot(new.x - st.target[0], new.y - st.target[1]) <= cfg.target_radius:
        outcome, terminal = Outcome.TARGET_REACHED, rc.bonus_target
    elif geo.point_in_obstacle(world, new.pos):
        outcome, terminal = Outcome.CRASHED_OBSTACLE, rc.penalty_crash
    elif not world.in_bounds(new.x, new.y):
        outcome, terminal = Outcome.OUT_OF_BOUNDS, rc.penalty_bounds
    elif steps >= cfg.max_steps:
        outcome, terminal = Outcome.MAX_STEPS, 0.0
    else:
        outcome, terminal = Outcome.RUNNING, 0.0
    breakdown["terminal"] = terminal
    reward = sum(breakdown.values())

    nxt = replace(st, uav=new, frame=(frame + 1) % flow.n_frames, steps=steps, outcome=outcome)
    info = {"breakdown": breakdown, "state": new, "frame": frame, "readings": readings,
            "action": u, "steps": steps}
    return StepResult(observe(cfg, nxt, readings), reward, outcome, info), nxt


class NavEnv:
    """Stateful wrapper with the usual ``reset``/``step`` tuple conventions.

    ``step`` returns ``(obs, reward, terminated, truncated, info)`` where obs
    is the normalized network input vector.
    """

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.state: EpisodeState | None = None
        self._seeds = np.random.default_rng(cfg.seed)

    @property
    def obs_dim(self) -> int:
        return OBS_DIM

    def reset(self, seed: int | None = None):
        if seed is None:
            seed = int(self._seeds.integers(2**63 - 1))
        obs, self.state = reset(self.cfg, seed)
        return obs.to_vector(self.cfg.world), {"observation": obs, "episode_seed": seed,
                                               "state": self.state}

    def step(self, action):
        res, self.state = step(self.cfg, self.state, action)
        truncated = res.terminated is Outcome.MAX_STEPS
        terminated = res.done and not truncated
        info = dict(res.info, outcome=res.terminated, observation=res.obs)
        return res.obs.to_vector(self.cfg.world), res.reward, terminated, truncated, info
