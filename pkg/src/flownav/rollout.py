"""Running single episodes with any actor and recording what happened."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import env as nav
from .nn.gaussian import clip_action, sample_action
from .nn.policy import N_ACT, policy_forward


@dataclass
class EpisodeRecord:
    seed: int
    start: tuple[float, float]
    target: tuple[float, float]
    outcome: nav.Outcome = nav.Outcome.RUNNING
    obs: list = field(default_factory=list)
    actions: list = field(default_factory=list)      # raw samples (logprob refers to these)
    applied: list = field(default_factory=list)      # clipped commands sent to the env
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    logprobs: list = field(default_factory=list)
    hidden_h: list = field(default_factory=list)     # hidden state entering each step
    hidden_c: list = field(default_factory=list)
    prev_actions: list = field(default_factory=list)
    prev_rewards: list = field(default_factory=list)
    mus: list = field(default_factory=list)
    sigmas: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    bootstrap: float = 0.0

    @property
    def length(self) -> int:
        return len(self.rewards)

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    @property
    def terminal(self) -> bool:
        """True when the episode ended in a real terminal state (not a time-out)."""
        return self.outcome not in (nav.Outcome.MAX_STEPS, nav.Outcome.RUNNING)


def net_actor(net):
    """Adapter giving a policy network the ``act`` signature used by :func:`run_episode`."""

    def act(obs, prev_action, prev_reward, hidden):
        return policy_forward(net, obs, prev_action, prev_reward, hidden)

    act.initial_state = net.initial_state
    return act


def run_episode(cfg: nav.EnvConfig, act, seed: int, rng: np.random.Generator | None = None,
                record: bool = False, bootstrap: bool = False) -> EpisodeRecord:
    """Play one episode.

    ``act(obs, prev_action, prev_reward, hidden) -> (mu, sigma, value, hidden')``.
    With ``rng=None`` the command is ``clip(mu)``; otherwise a Gaussian draw.
    ``bootstrap`` evaluates the critic on the final observation of a time-out.
    """
    obs_o, st = nav.reset(cfg, seed)
    world = cfg.world
    obs = obs_o.to_vector(world)
    ep = EpisodeRecord(seed, st.start, st.target)
    hidden = act.initial_state(1) if hasattr(act, "initial_state") else None
    prev_a = np.zeros(N_ACT)
    prev_r = 0.0
    t = 0.0
    while True:
        mu, sigma, value, new_hidden = act(obs, prev_a, prev_r, hidden)
        if rng is None:
            applied = clip_action(mu)
            raw, logp = np.array(mu, dtype=np.float64), math.nan
        else:
            applied, raw, logp = sample_action(mu, sigma, rng)
        res, st = nav.step(cfg, st, applied)

        ep.obs.append(obs)
        ep.actions.append(raw)
        ep.applied.append(applied)
        ep.rewards.append(res.reward)
        ep.values.append(value)
        ep.logprobs.append(logp)
        if hidden is not None:
            ep.hidden_h.append(hidden[0][0].copy())
            ep.hidden_c.append(hidden[1][0].copy())
        ep.prev_actions.append(prev_a)
        ep.prev_rewards.append(prev_r)
        ep.mus.append(np.array(mu, dtype=np.float64))
        ep.sigmas.append(np.array(sigma, dtype=np.float64))
        t += cfg.step_dt
        if record:
            u = res.info["state"]
            row = {"step": st.steps, "t": t, "x": u.x, "y": u.y, "theta": u.theta,
                   "vx": u.vx, "vy": u.vy, "omega": u.omega,
                   "a": float(applied[0]), "omega_dot": float(applied[1]), "reward": res.reward}
            row.update({f"r_{k}": v for k, v in res.info["breakdown"].items()})
            row.update({f"ray{i}": float(d) for i, d in enumerate(res.info["readings"])})
            row["frame"] = res.info["frame"]
            ep.rows.append(row)

        obs = res.obs.to_vector(world)
        prev_a = np.asarray(applied, dtype=np.float64)
        prev_r = res.reward
        hidden = new_hidden
        if res.done:
            ep.outcome = res.terminated
            break
    if bootstrap and not ep.terminal:
        ep.bootstrap = float(act(obs, prev_a, prev_r, hidden)[2])
    return ep


def episode_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.default_rng(seed).integers(2**63 - 1, size=n)]


def evaluate_actor(act, cfg: nav.EnvConfig, n_episodes: int, seed: int, record: bool = False) -> dict:
    """Deterministic evaluation: outcome rates, mean reward and (optionally) episode records."""
    counts = {o: 0 for o in nav.Outcome if o is not nav.Outcome.RUNNING}
    rewards, records = [], []
    for s in episode_seeds(seed, n_episodes):
        ep = run_episode(cfg, act, s, rng=None, record=record)
        counts[ep.outcome] += 1
        rewards.append(ep.total_reward)
        if record:
            records.append(ep)
    n = max(n_episodes, 1)
    return {
        "SR": counts[nav.Outcome.TARGET_REACHED] / n,
        "CR": counts[nav.Outcome.CRASHED_OBSTACLE] / n,
        "OOB": counts[nav.Outcome.OUT_OF_BOUNDS] / n,
        "timeout": counts[nav.Outcome.MAX_STEPS] / n,
        "mean_reward": float(np.mean(rewards)) if rewards else 0.0,
        "n_episodes": n_episodes,
        "counts": {o.value: c for o, c in counts.items()},
        "trajectories": records,
    }
