"""Run configuration: INI-style ``key = value`` sections with defaults for every key.

Sections: ``[run]``, ``[flow]``, ``[world]``, ``[env]``, ``[rewards]``,
``[ppo]``, ``[td3]``. Rectangles are written as ``x_lo, x_hi, y_lo, y_hi``;
obstacle lists separate rectangles with ``;``. Blank values mean "derive"
(e.g. ``speed_cap`` from the flow's maximum speed).
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from . import env as nav
from . import geometry as geo
from .flowfield import SynthConfig, load_flow, synth_flow, uniform_flow
from .ppo import PpoHyper
from .td3 import Td3Hyper

ALGOS = ("ppo-lstm", "ppo", "td3")


def _rect(text: str) -> tuple[float, float, float, float]:
    vals = tuple(float(t) for t in text.split(","))
    if len(vals) != 4:
        raise ValueError(f"rectangle needs 4 numbers, got {text!r}")
    return vals


def _fmt_rect(r) -> str:
    return ", ".join(repr(float(v)) for v in r)


@dataclass
class RunSection:
    algo: str = "ppo-lstm"
    seed: int = 0
    episodes: int = 2000
    eval_seed: int = 12345
    alpha_ema: float = 0.05


@dataclass
class FlowSection:
    source: str = "synth"   # synth | file | uniform
    path: str = ""
    flow_seed: int = 0
    n_frames: int = 300
    nx: int = 241
    ny: int = 121
    dt_snap: float = 0.0875
    mean_speed: float = 1.0
    vortex_strength: float = 1.0
    vortex_count: int = 12
    core_radius: float = 0.25
    advection: float = 0.8
    uniform_u: float = 1.0
    uniform_v: float = 0.0


@dataclass
class WorldSection:
    bounds: str = "-2.0, 4.0, 0.0, 3.0"
    obstacles: str = "-0.25, 0.25, 0.0, 1.0; 1.25, 1.75, 0.0, 0.5"
    sensor_max_range: float = 2.0
    lookahead: float = 0.5


@dataclass
class EnvSection:
    max_steps: int = 80
    target_radius: float = 0.15
    start_region: str = "-1.8, -0.5, 0.2, 2.8"
    target_region: str = "2.0, 3.8, 0.2, 2.8"
    dt: str = ""
    speed_cap: str = ""


_SECTIONS = {
    "run": RunSection, "flow": FlowSection, "world": WorldSection, "env": EnvSection,
    "rewards": nav.RewardConstants, "ppo": PpoHyper, "td3": Td3Hyper,
}


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    flow: FlowSection = field(default_factory=FlowSection)
    world: WorldSection = field(default_factory=WorldSection)
    env: EnvSection = field(default_factory=EnvSection)
    rewards: nav.RewardConstants = field(default_factory=nav.RewardConstants)
    ppo: PpoHyper = field(default_factory=PpoHyper)
    td3: Td3Hyper = field(default_factory=Td3Hyper)

    # -------------------------------------------------------------- building

    def build_world(self) -> geo.World:
        w = self.world
        obstacles = tuple(geo.Obstacle(*_rect(t)) for t in w.obstacles.split(";") if t.strip())
        return geo.World(geo.Obstacle(*_rect(w.bounds)), obstacles, w.sensor_max_range, w.lookahead)

    def build_flow(self, world: geo.World | None = None):
        f = self.flow
        world = world or self.build_world()
        b = world.bounds
        extents = (b.x_lo, b.x_hi, b.y_lo, b.y_hi)
        if f.source == "file":
            if not f.path:
                raise ValueError("flow.source = file needs flow.path")
            return load_flow(f.path)
        if f.source == "uniform":
            return uniform_flow(f.uniform_u, f.uniform_v, extents=extents, dt_snap=f.dt_snap)
        if f.source == "synth":
            return synth_flow(self.synth_config(world), f.flow_seed)
        raise ValueError(f"unknown flow source {f.source!r}")

    def synth_config(self, world: geo.World | None = None) -> SynthConfig:
        f = self.flow
        world = world or self.build_world()
        b = world.bounds
        return SynthConfig(f.n_frames, f.nx, f.ny, (b.x_lo, b.x_hi, b.y_lo, b.y_hi), f.dt_snap,
                           f.mean_speed, f.vortex_strength, f.vortex_count, f.core_radius,
                           f.advection, tuple(world.obstacles))

    def build_env(self, flow=None) -> nav.EnvConfig:
        world = self.build_world()
        flow = flow if flow is not None else self.build_flow(world)
        e = self.env
        return nav.EnvConfig(
            flow=flow, world=world, max_steps=e.max_steps, target_radius=e.target_radius,
            start_region=nav.Region(*_rect(e.start_region)),
            target_region=nav.Region(*_rect(e.target_region)),
            rewards=self.rewards,
            dt=float(e.dt) if e.dt.strip() else None,
            speed_cap=float(e.speed_cap) if e.speed_cap.strip() else None,
            seed=self.run.seed,
        )

    # ---------------------------------------------------------------- text io

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for name in _SECTIONS:
            sec = getattr(self, name)
            cp[name] = {f.name: _fmt(getattr(sec, f.name)) for f in dataclasses.fields(sec)}
        lines = []
        for name in cp.sections():
            lines.append(f"[{name}]")
            lines += [f"{k} = {v}" for k, v in cp[name].items()]
            lines.append("")
        return "\n".join(lines)

    def save(self, path) -> None:
        Path(path).write_text(self.to_ini())

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        unknown = set(cp.sections()) - set(_SECTIONS)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, klass in _SECTIONS.items():
            defaults = klass()
            if not cp.has_section(name):
                kwargs[name] = defaults
                continue
            known = {f.name: f for f in dataclasses.fields(klass)}
            values = {}
            for key, raw in cp[name].items():
                if key not in known:
                    raise ValueError(f"unknown key {key!r} in [{name}]")
                values[key] = _parse(raw, type(getattr(defaults, key)), f"[{name}] {key}")
            kwargs[name] = klass(**values)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_ini(Path(path).read_text())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(raw: str, typ: type, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ValueError(f"{where}: cannot parse {raw!r} as {typ.__name__}") from None
    return raw


def smoke_config() -> RunConfig:
    """Uniform flow, no obstacles, fixed start and target."""
    cfg = RunConfig()
    cfg.flow.source = "uniform"
    cfg.flow.uniform_u = 0.5
    cfg.flow.uniform_v = 0.0
    cfg.world.obstacles = ""
    cfg.env.start_region = "-1.5, -1.5, 1.0, 1.0"
    cfg.env.target_region = "3.0, 3.0, 2.0, 2.0"
    return cfg
