"""Recurrent PPO: rollouts with hidden-state bookkeeping, GAE, clipped loss, updates.

The same code trains the feedforward baseline; networks advertise
``recurrent`` and the hidden-state plumbing is skipped when it is False.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import env as nav
from .nn.adam import Adam
from .nn.gaussian import gaussian_entropy, gaussian_logprob
from .nn.layers import NumericError
from .nn.policy import N_ACT, split_heads
from .rollout import EpisodeRecord, evaluate_actor, net_actor, run_episode

log = logging.getLogger(__name__)


@dataclass
class PpoHyper:
    clip_eps: float = 0.2
    gamma: float = 0.99
    lam: float = 0.95
    batch_size: int = 256
    minibatch_size: int = 128
    epochs: int = 4
    sgd_steps: int = 30
    lr: float = 1e-4
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    eval_interval: int = 5
    n_eval: int = 100
    chunk_len: int = 16

    def __post_init__(self):
        if not self.clip_eps > 0.0:
            raise ValueError("clip_eps must be positive")
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise ValueError("gamma and lam must lie in [0, 1]")
        if self.batch_size % self.minibatch_size:
            raise ValueError("minibatch_size must divide batch_size")
        if self.minibatch_size % self.chunk_len:
            raise ValueError("chunk_len must divide minibatch_size")


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    reward: float
    done: bool
    value: float
    logprob: float
    hidden: tuple | None
    prev_action: np.ndarray
    prev_reward: float


@dataclass
class RolloutBuffer:
    episodes: list[EpisodeRecord] = field(default_factory=list)
    capacity: int = 256

    def __len__(self) -> int:
        return sum(ep.length for ep in self.episodes)

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity

    def transitions(self):
        for ep in self.episodes:
            for k in range(ep.length):
                hidden = (ep.hidden_h[k], ep.hidden_c[k]) if ep.hidden_h else None
                yield Transition(ep.obs[k], ep.actions[k], ep.rewards[k],
                                 k == ep.length - 1 and ep.terminal, ep.values[k],
                                 ep.logprobs[k], hidden, ep.prev_actions[k], ep.prev_rewards[k])


# ------------------------------------------------------------------------- GAE

def compute_gae(rewards, values, dones, gamma: float, lam: float, last_value: float = 0.0):
    """Backward GAE recursion.

    ``dones[k]`` marks a terminal transition (no bootstrap past it).
    ``last_value`` bootstraps the final step when it is not terminal.
    Returns ``(advantages, returns)`` with ``returns = advantages + values``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape) or rewards.ndim != 1:
        raise ValueError(f"length mismatch: rewards {rewards.shape}, values {values.shape}, "
                         f"dones {dones.shape}")
    K = rewards.size
    adv = np.zeros(K)
    gae = 0.0
    for k in range(K - 1, -1, -1):
        nonterminal = 0.0 if dones[k] else 1.0
        next_v = last_value if k == K - 1 else values[k + 1]
        delta = rewards[k] + gamma * next_v * nonterminal - values[k]
        gae = delta + gamma * lam * nonterminal * gae
        adv[k] = gae
    return adv, adv + values


# ------------------------------------------------------------------------ loss

def clipped_objective(logp_new, logp_old, adv, values, returns, entropy, mask, hyper: PpoHyper):
    """Scalar loss to minimise and its partials w.r.t. ``logp_new``, ``values``, ``entropy``.

    loss = -mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e mean(H),
    where means are taken over ``mask``.
    """
    n = max(float(mask.sum()), 1.0)
    w = mask / n
    ratio = np.exp(logp_new - logp_old)
    eps = hyper.clip_eps
    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    surr = np.minimum(unclipped, clipped)
    active = unclipped <= clipped
    err = values - returns
    loss = (-np.sum(w * surr) + hyper.value_coef * np.sum(w * err * err)
            - hyper.entropy_coef * np.sum(w * entropy))
    d_logp = -w * np.where(active, unclipped, 0.0)
    d_value = hyper.value_coef * 2.0 * w * err
    d_entropy = -hyper.entropy_coef * w
    stats = {
        "policy_loss": float(-np.sum(w * surr)),
        "value_loss": float(np.sum(w * err * err)),
        "entropy": float(np.sum(w * entropy)),
        "approx_kl": float(np.sum(w * (logp_old - logp_new))),
        "clip_frac": float(np.sum(w * (np.abs(ratio - 1.0) > eps))),
    }
    return float(loss), d_logp, d_value, d_entropy, stats


def ppo_loss(net, batch: dict, hyper: PpoHyper):
    """Forward the batch through ``net`` and return ``(loss, flat_grad, stats)``.

    ``batch`` holds time-major ``(T, B, ...)`` arrays: obs, actions,
    prev_actions, prev_rewards, logprobs (old), adv, returns, mask and, for
    recurrent nets, h0/c0 of shape ``(B, H)``.
    """
    state = (batch["h0"], batch["c0"]) if net.recurrent else None
    out, _, cache = net.forward(batch["obs"], batch["prev_actions"], batch["prev_rewards"], state)
    mu, sigma, value, in_range = split_heads(out)
    act = batch["actions"]
    logp = gaussian_logprob(mu, sigma, act)
    ent = gaussian_entropy(sigma)
    loss, d_logp, d_value, d_ent, stats = clipped_objective(
        logp, batch["logprobs"], batch["adv"], value, batch["returns"], ent, batch["mask"], hyper)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite PPO loss; stats={stats}")
    z = (act - mu) / sigma
    d_out = np.empty_like(out)
    d_out[..., :N_ACT] = d_logp[..., None] * z / sigma
    d_out[..., N_ACT:2 * N_ACT] = (d_logp[..., None] * (z * z - 1.0) + d_ent[..., None]) * in_range
    d_out[..., 2 * N_ACT] = d_value
    stats["loss"] = loss
    return loss, net.backward(cache, d_out), stats


# --------------------------------------------------------------------- rollout

def collect_rollout(cfg: nav.EnvConfig, net, hyper: PpoHyper, rng: np.random.Generator,
                    max_episodes: int | None = None) -> RolloutBuffer:
    """Sample whole episodes until the buffer holds at least ``batch_size`` steps."""
    buf = RolloutBuffer(capacity=hyper.batch_size)
    act = net_actor(net)
    while not buf.full and (max_episodes is None or len(buf.episodes) < max_episodes):
        seed = int(rng.integers(2**63 - 1))
        buf.episodes.append(run_episode(cfg, act, seed, rng=rng, bootstrap=True))
    return buf


def _chunks(buf: RolloutBuffer, L: int):
    out = []
    for e, ep in enumerate(buf.episodes):
        for s in range(0, ep.length, L):
            out.append((e, s, min(L, ep.length - s)))
    return out


def build_batch(buf: RolloutBuffer, chunks, adv: list, ret: list, L: int, recurrent: bool) -> dict:
    """Pack ``chunks`` (episode, start, length) into padded time-major arrays."""
    B = len(chunks)
    n_obs = len(buf.episodes[0].obs[0])
    b = {
        "obs": np.zeros((L, B, n_obs)), "actions": np.zeros((L, B, N_ACT)),
        "prev_actions": np.zeros((L, B, N_ACT)), "prev_rewards": np.zeros((L, B)),
        "logprobs": np.zeros((L, B)), "adv": np.zeros((L, B)), "returns": np.zeros((L, B)),
        "mask": np.zeros((L, B)),
    }
    if recurrent:
        H = len(buf.episodes[0].hidden_h[0])
        b["h0"] = np.zeros((B, H))
        b["c0"] = np.zeros((B, H))
    for j, (e, s, n) in enumerate(chunks):
        ep = buf.episodes[e]
        sl = slice(s, s + n)
        b["obs"][:n, j] = ep.obs[sl]
        b["actions"][:n, j] = ep.actions[sl]
        b["prev_actions"][:n, j] = ep.prev_actions[sl]
        b["prev_rewards"][:n, j] = ep.prev_rewards[sl]
        b["logprobs"][:n, j] = ep.logprobs[sl]
        b["adv"][:n, j] = adv[e][sl]
        b["returns"][:n, j] = ret[e][sl]
        b["mask"][:n, j] = 1.0
        if recurrent:
            b["h0"][j] = ep.hidden_h[s]
            b["c0"][j] = ep.hidden_c[s]
    return b


def advantages(buf: RolloutBuffer, hyper: PpoHyper, normalize: bool = True):
    """Per-episode GAE, then batch-wide normalisation of the advantages."""
    adv, ret = [], []
    for ep in buf.episodes:
        dones = np.zeros(ep.length, dtype=bool)
        dones[-1] = ep.terminal
        a, r = compute_gae(ep.rewards, ep.values, dones, hyper.gamma, hyper.lam, ep.bootstrap)
        adv.append(a)
        ret.append(r)
    if normalize:
        flat = np.concatenate(adv)
        mean, std = flat.mean(), max(flat.std(), 1e-8)
        adv = [(a - mean) / std for a in adv]
    return adv, ret


def _minibatches(n_chunks: int, per_mb: int, n_steps: int, rng: np.random.Generator):
    """``n_steps`` minibatches of chunk indices, cycling through fresh permutations.

    Every chunk is used once before any is reused.
    """
    order = np.empty(0, dtype=np.int64)
    for _ in range(n_steps):
        if order.size < per_mb:
            order = np.concatenate([order, rng.permutation(n_chunks)])
        yield order[:per_mb]
        order = order[per_mb:]


def update(net, adam: Adam, buf: RolloutBuffer, hyper: PpoHyper, rng: np.random.Generator) -> dict:
    """Several epochs of minibatch Adam steps on the clipped objective."""
    adv, ret = advantages(buf, hyper)
    L = hyper.chunk_len
    chunks = _chunks(buf, L)
    per_mb = hyper.minibatch_size // L
    totals: dict[str, float] = {}
    n_updates = n_skipped = 0
    for _ in range(hyper.epochs):
        for idx in _minibatches(len(chunks), per_mb, hyper.sgd_steps, rng):
            mb = build_batch(buf, [chunks[i] for i in idx], adv, ret, L, net.recurrent)
            try:
                _, grad, stats = ppo_loss(net, mb, hyper)
            except NumericError as exc:
                log.warning("skipping minibatch: %s", exc)
                n_skipped += 1
                continue
            if not np.isfinite(grad).all():
                log.warning("skipping minibatch with non-finite gradient")
                n_skipped += 1
                continue
            adam.step(net.theta, grad)
            n_updates += 1
            for key, val in stats.items():
                totals[key] = totals.get(key, 0.0) + val
    out = {k: v / max(n_updates, 1) for k, v in totals.items()}
    out.update(n_updates=n_updates, n_skipped=n_skipped)
    return out


# ----------------------------------------------------------------- train/eval

def evaluate(net, cfg: nav.EnvConfig, n_episodes: int, seed: int, record: bool = False) -> dict:
    """Deterministic (mean-action) evaluation of a policy network."""
    return evaluate_actor(net_actor(net), cfg, n_episodes, seed, record)


@dataclass
class TrainResult:
    net: object
    reward_history: list = field(default_factory=list)
    eval_history: list = field(default_factory=list)
    best_theta: np.ndarray | None = None
    best_sr: float = -1.0
    adam: Adam | None = None
    update_stats: list = field(default_factory=list)


def episode_summary(index: int, ep: EpisodeRecord) -> dict:
    return {"episode": index, "reward": ep.total_reward, "length": ep.length,
            "outcome": ep.outcome.value}


def train(cfg: nav.EnvConfig, hyper: PpoHyper, total_episodes: int, net, seed: int = 0,
          eval_seed: int | None = None, callback=None) -> TrainResult:
    """Alternate rollout collection and updates until ``total_episodes`` are played.

    Every ``eval_interval`` batches the mean-action policy is evaluated on
    ``n_eval`` fixed-seed episodes and the best-SR parameters are kept.
    ``callback(kind, payload)`` receives ``"episode"`` and ``"eval"`` events.
    """
    rng = np.random.default_rng(seed)
    eval_seed = seed + 1_000_003 if eval_seed is None else eval_seed
    adam = Adam(net.size, lr=hyper.lr)
    res = TrainResult(net, adam=adam)
    n_batches = 0
    while len(res.reward_history) < total_episodes:
        buf = collect_rollout(cfg, net, hyper, rng,
                              max_episodes=total_episodes - len(res.reward_history))
        for ep in buf.episodes:
            row = episode_summary(len(res.reward_history), ep)
            res.reward_history.append(row)
            if callback:
                callback("episode", row)
        res.update_stats.append(update(net, adam, buf, hyper, rng))
        n_batches += 1
        if n_batches % hyper.eval_interval == 0:
            rep = evaluate(net, cfg, hyper.n_eval, eval_seed)
            row = {"batch": n_batches, "episode": len(res.reward_history), "SR": rep["SR"],
                   "CR": rep["CR"], "mean_reward": rep["mean_reward"]}
            res.eval_history.append(row)
            if rep["SR"] > res.best_sr:
                res.best_sr = rep["SR"]
                res.best_theta = net.theta.copy()
            log.info("batch %d  episodes %d  SR %.3f  CR %.3f  R %.2f", n_batches,
                     len(res.reward_history), rep["SR"], rep["CR"], rep["mean_reward"])
            if callback:
                callback("eval", row)
    return res


def hyper_dict(h: PpoHyper) -> dict:
    return asdict(h)
