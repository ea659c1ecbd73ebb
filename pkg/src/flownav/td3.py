"""TD3 baseline: twin critics, delayed actor updates, target smoothing, Polyak targets."""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from . import env as nav
from .nn.adam import Adam
from .nn.gaussian import ACTION_HIGH, clip_action
from .nn.mlp import Mlp
from .nn.policy import N_ACT
from .rollout import evaluate_actor

log = logging.getLogger(__name__)

ACTOR_SIZES = (256, 128, 64, 32)
CRITIC_SIZES = (256, 128, 64, 32)


@dataclass
class Td3Hyper:
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    explore_noise: float = 0.1
    buffer_size: int = 100_000
    batch_size: int = 256
    start_steps: int = 1000
    eval_every: int = 20
    n_eval: int = 100


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int = N_ACT):
        self.capacity = int(capacity)
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros((capacity, act_dim))
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, obs_dim))
        self.d = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, s, a, r, s2, done) -> None:
        i = self.ptr
        self.s[i], self.a[i], self.r[i], self.s2[i], self.d[i] = s, a, r, s2, float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.size, size=n)

    def sample(self, n: int, rng: np.random.Generator) -> dict:
        idx = self.sample_indices(n, rng)
        return {"s": self.s[idx], "a": self.a[idx], "r": self.r[idx], "s2": self.s2[idx],
                "d": self.d[idx]}


@dataclass
class Td3Nets:
    actor: Mlp
    critic1: Mlp
    critic2: Mlp
    actor_t: Mlp = None
    critic1_t: Mlp = None
    critic2_t: Mlp = None
    opt: dict = field(default_factory=dict)
    n_updates: int = 0

    @classmethod
    def create(cls, obs_dim: int = nav.OBS_DIM, seed: int = 0, hyper: Td3Hyper | None = None):
        hyper = hyper or Td3Hyper()
        ss = np.random.SeedSequence(seed).spawn(3)
        seeds = [int(s.generate_state(1)[0]) for s in ss]
        actor = Mlp((obs_dim, *ACTOR_SIZES, N_ACT), "relu", "tanh", ACTION_HIGH,
                    seed=seeds[0], kind="td3-actor")
        c1 = Mlp((obs_dim + N_ACT, *CRITIC_SIZES, 1), "relu", "linear", seed=seeds[1],
                 kind="td3-critic")
        c2 = Mlp((obs_dim + N_ACT, *CRITIC_SIZES, 1), "relu", "linear", seed=seeds[2],
                 kind="td3-critic")
        nets = cls(actor, c1, c2, copy.deepcopy(actor), copy.deepcopy(c1), copy.deepcopy(c2))
        nets.opt = {"actor": Adam(actor.size, lr=hyper.actor_lr),
                    "critic1": Adam(c1.size, lr=hyper.critic_lr),
                    "critic2": Adam(c2.size, lr=hyper.critic_lr)}
        return nets

    def act(self, obs) -> np.ndarray:
        return self.actor(np.asarray(obs, dtype=np.float64)[None])[0]


def critic_input(s, a):
    return np.concatenate([s, a / ACTION_HIGH], axis=-1)


def polyak(target: Mlp, source: Mlp, tau: float) -> None:
    target.theta *= 1.0 - tau
    target.theta += tau * source.theta


def target_values(nets: Td3Nets, batch: dict, hyper: Td3Hyper, rng: np.random.Generator):
    """Smoothed twin-min targets; also returns the two target critic values."""
    s2 = batch["s2"]
    a2 = nets.actor_t(s2)
    scale = ACTION_HIGH
    noise = np.clip(rng.standard_normal(a2.shape) * hyper.target_noise * scale,
                    -hyper.noise_clip * scale, hyper.noise_clip * scale)
    a2 = clip_action(a2 + noise)
    x2 = critic_input(s2, a2)
    q1 = nets.critic1_t(x2)[:, 0]
    q2 = nets.critic2_t(x2)[:, 0]
    y = batch["r"] + hyper.gamma * (1.0 - batch["d"]) * np.minimum(q1, q2)
    return y, q1, q2


def critic_step(nets: Td3Nets, batch: dict, y: np.ndarray) -> tuple[float, float]:
    """One Adam step on each critic's mean-squared TD error; returns the two losses."""
    x = critic_input(batch["s"], batch["a"])
    losses = []
    for name in ("critic1", "critic2"):
        net = getattr(nets, name)
        q, acts = net.forward(x)
        err = q[:, 0] - y
        loss = float(np.mean(err * err))
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite {name} loss; |y| max {np.abs(y).max()}")
        grad, _ = net.backward(acts, (2.0 * err / len(err))[:, None])
        nets.opt[name].step(net.theta, grad)
        losses.append(loss)
    return losses[0], losses[1]


def actor_step(nets: Td3Nets, batch: dict) -> float:
    """Ascend Q1(s, pi(s)) with the critic held fixed."""
    s = batch["s"]
    a, a_acts = nets.actor.forward(s)
    q, c_acts = nets.critic1.forward(critic_input(s, a))
    n = len(s)
    _, dx = nets.critic1.backward(c_acts, np.full((n, 1), -1.0 / n))
    da = dx[:, s.shape[1]:] / ACTION_HIGH
    grad, _ = nets.actor.backward(a_acts, da)
    nets.opt["actor"].step(nets.actor.theta, grad)
    return float(-q.mean())


def td3_update(nets: Td3Nets, batch: dict, hyper: Td3Hyper, rng: np.random.Generator) -> dict:
    y, _, _ = target_values(nets, batch, hyper, rng)
    l1, l2 = critic_step(nets, batch, y)
    nets.n_updates += 1
    stats = {"critic1_loss": l1, "critic2_loss": l2}
    if nets.n_updates % hyper.policy_delay == 0:
        stats["actor_loss"] = actor_step(nets, batch)
        for tgt, src in ((nets.actor_t, nets.actor), (nets.critic1_t, nets.critic1),
                         (nets.critic2_t, nets.critic2)):
            polyak(tgt, src, hyper.tau)
    return stats


def actor_policy(nets: Td3Nets):
    """``act`` adapter for :func:`flownav.rollout.run_episode` (sigma reported as zero)."""

    def act(obs, prev_action, prev_reward, hidden):
        return nets.act(obs), np.zeros(N_ACT), float("nan"), None

    return act


@dataclass
class Td3Result:
    nets: Td3Nets
    reward_history: list = field(default_factory=list)
    eval_history: list = field(default_factory=list)
    best_theta: np.ndarray | None = None
    best_sr: float = -1.0


def td3_train(cfg: nav.EnvConfig, hyper: Td3Hyper, total_episodes: int, seed: int = 0,
              eval_seed: int | None = None, nets: Td3Nets | None = None, callback=None) -> Td3Result:
    rng = np.random.default_rng(seed)
    eval_seed = seed + 1_000_003 if eval_seed is None else eval_seed
    nets = nets or Td3Nets.create(seed=seed, hyper=hyper)
    buf = ReplayBuffer(hyper.buffer_size, nav.OBS_DIM)
    res = Td3Result(nets)
    world = cfg.world
    total_steps = 0
    for ep_i in range(total_episodes):
        obs_o, st = nav.reset(cfg, int(rng.integers(2**63 - 1)))
        obs = obs_o.to_vector(world)
        ep_reward, length = 0.0, 0
        while True:
            if total_steps < hyper.start_steps:
                a = rng.uniform(-ACTION_HIGH, ACTION_HIGH)
            else:
                a = clip_action(nets.act(obs)
                                + rng.standard_normal(N_ACT) * hyper.explore_noise * ACTION_HIGH)
            r, st = nav.step(cfg, st, a)
            obs2 = r.obs.to_vector(world)
            terminal = r.done and r.terminated is not nav.Outcome.MAX_STEPS
            buf.add(obs, a, r.reward, obs2, terminal)
            total_steps += 1
            ep_reward += r.reward
            length += 1
            if total_steps >= hyper.start_steps and len(buf) >= hyper.batch_size:
                td3_update(nets, buf.sample(hyper.batch_size, rng), hyper, rng)
            obs = obs2
            if r.done:
                break
        row = {"episode": ep_i, "reward": ep_reward, "length": length,
               "outcome": r.terminated.value}
        res.reward_history.append(row)
        if callback:
            callback("episode", row)
        if (ep_i + 1) % hyper.eval_every == 0:
            rep = evaluate_actor(actor_policy(nets), cfg, hyper.n_eval, eval_seed)
            erow = {"batch": (ep_i + 1) // hyper.eval_every, "episode": ep_i + 1, "SR": rep["SR"],
                    "CR": rep["CR"], "mean_reward": rep["mean_reward"]}
            res.eval_history.append(erow)
            if rep["SR"] > res.best_sr:
                res.best_sr = rep["SR"]
                res.best_theta = nets.actor.theta.copy()
            log.info("td3 episode %d  SR %.3f  CR %.3f", ep_i + 1, rep["SR"], rep["CR"])
            if callback:
                callback("eval", erow)
    return res
