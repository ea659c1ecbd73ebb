"""Scikit-learn style front-ends for the three learners.

Hyperparameters are constructor arguments (so ``get_params``/``set_params``
and ``sklearn.base.clone`` work); ``fit`` takes an environment config and
trains; ``predict`` maps observation vectors to commands.
"""

from __future__ import annotations

import copy
import dataclasses

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (check_env_config, check_observations, check_positive_int,
                          check_sequence_side)
from .env import OBS_DIM
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.gaussian import clip_action
from .nn.policy import N_ACT, FfPolicyNet, PolicyNet, policy_forward
from .ppo import PpoHyper, evaluate, train
from .rollout import evaluate_actor
from .td3 import Td3Hyper, Td3Nets, actor_policy, td3_train


class _PpoEstimator(BaseEstimator):
    algo = ""

    def __init__(self, n_episodes=2000, clip_eps=0.2, gamma=0.99, lam=0.95, batch_size=256,
                 minibatch_size=128, epochs=4, sgd_steps=30, lr=1e-4, value_coef=0.5,
                 entropy_coef=0.0, eval_interval=5, n_eval=100, chunk_len=16, random_state=0,
                 eval_seed=None):
        self.n_episodes = n_episodes
        self.clip_eps = clip_eps
        self.gamma = gamma
        self.lam = lam
        self.batch_size = batch_size
        self.minibatch_size = minibatch_size
        self.epochs = epochs
        self.sgd_steps = sgd_steps
        self.lr = lr
        self.value_coef = value_coef
        self.entropy_coef = entropy_coef
        self.eval_interval = eval_interval
        self.n_eval = n_eval
        self.chunk_len = chunk_len
        self.random_state = random_state
        self.eval_seed = eval_seed

    def _hyper(self) -> PpoHyper:
        return PpoHyper(**{f.name: getattr(self, f.name) for f in dataclasses.fields(PpoHyper)})

    def _make_net(self):
        raise NotImplementedError

    def fit(self, env, y=None, callback=None):
        """Train on ``env`` (an ``EnvConfig`` or ``NavEnv``); ``y`` is ignored."""
        cfg = check_env_config(env)
        n = check_positive_int(self.n_episodes, "n_episodes")
        net = self._make_net()
        res = train(cfg, self._hyper(), n, net, seed=self.random_state, eval_seed=self.eval_seed,
                    callback=callback)
        self.net_ = net
        self.best_net_ = copy.deepcopy(net)
        if res.best_theta is not None:
            self.best_net_.set_theta(res.best_theta)
        self.best_sr_ = res.best_sr
        self.reward_history_ = res.reward_history
        self.eval_history_ = res.eval_history
        self.update_stats_ = res.update_stats
        self.adam_ = res.adam
        self.n_features_in_ = OBS_DIM
        return self

    def _policy_net(self, use_best: bool):
        check_is_fitted(self, "net_")
        return self.best_net_ if use_best else self.net_

    def predict_distribution(self, X, prev_actions=None, prev_rewards=None, use_best=True):
        """Head outputs along one episode's observation sequence ``X`` of shape ``(T, 12)``.

        Without ``prev_actions`` the policy's own clipped means are fed back;
        missing ``prev_rewards`` are taken as zero. Returns ``(mu, sigma, value)``.
        """
        net = self._policy_net(use_best)
        X = check_observations(X, net.n_obs)
        T = len(X)
        pa = check_sequence_side(prev_actions, T, N_ACT, "prev_actions")
        pr = check_sequence_side(prev_rewards, T, None, "prev_rewards")
        mus, sigmas, values = np.empty((T, N_ACT)), np.empty((T, N_ACT)), np.empty(T)
        hidden = net.initial_state(1)
        last = np.zeros(N_ACT)
        for t in range(T):
            a_prev = pa[t] if pa is not None else last
            r_prev = pr[t] if pr is not None else 0.0
            mus[t], sigmas[t], values[t], hidden = policy_forward(net, X[t], a_prev, r_prev, hidden)
            last = clip_action(mus[t])
        return mus, sigmas, values

    def predict(self, X, prev_actions=None, prev_rewards=None, use_best=True):
        """Deterministic commands ``clip(mu)`` for an observation sequence."""
        mu, _, _ = self.predict_distribution(X, prev_actions, prev_rewards, use_best)
        return clip_action(mu)

    def evaluate(self, env, n_episodes=100, seed=0, record=False, use_best=True) -> dict:
        return evaluate(self._policy_net(use_best), check_env_config(env), n_episodes, seed, record)

    def score(self, env, y=None, n_episodes=100, seed=0) -> float:
        """Success rate of the mean-action policy."""
        return self.evaluate(env, n_episodes, seed)["SR"]

    def save(self, path, use_best=True) -> None:
        save_checkpoint(path, self._policy_net(use_best), None if use_best else self.adam_)

    @classmethod
    def from_checkpoint(cls, path, **params):
        net, _ = load_checkpoint(path)
        est = cls(**params)
        est.net_ = net
        est.best_net_ = net
        est.n_features_in_ = net.n_obs
        return est


class RecurrentPPO(_PpoEstimator):
    """PPO with the dense-dense-LSTM actor-critic."""

    algo = "ppo-lstm"

    def _make_net(self):
        return PolicyNet(OBS_DIM, seed=self.random_state)


class FeedForwardPPO(_PpoEstimator):
    """PPO baseline with a wider feedforward actor-critic and no memory."""

    algo = "ppo"

    def _make_net(self):
        return FfPolicyNet(OBS_DIM, seed=self.random_state)


class TD3Agent(BaseEstimator):
    algo = "td3"

    def __init__(self, n_episodes=2000, actor_lr=1e-4, critic_lr=1e-3, gamma=0.99, tau=0.005,
                 policy_delay=2, target_noise=0.2, noise_clip=0.5, explore_noise=0.1,
                 buffer_size=100_000, batch_size=256, start_steps=1000, eval_every=20,
                 n_eval=100, random_state=0, eval_seed=None):
        self.n_episodes = n_episodes
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.gamma = gamma
        self.tau = tau
        self.policy_delay = policy_delay
        self.target_noise = target_noise
        self.noise_clip = noise_clip
        self.explore_noise = explore_noise
        self.buffer_size = buffer_size
        self.batch_size = batch_size
        self.start_steps = start_steps
        self.eval_every = eval_every
        self.n_eval = n_eval
        self.random_state = random_state
        self.eval_seed = eval_seed

    def _hyper(self) -> Td3Hyper:
        return Td3Hyper(**{f.name: getattr(self, f.name) for f in dataclasses.fields(Td3Hyper)})

    def fit(self, env, y=None, callback=None):
        cfg = check_env_config(env)
        n = check_positive_int(self.n_episodes, "n_episodes")
        hyper = self._hyper()
        res = td3_train(cfg, hyper, n, seed=self.random_state, eval_seed=self.eval_seed,
                        callback=callback)
        self.nets_ = res.nets
        self.best_actor_ = copy.deepcopy(res.nets.actor)
        if res.best_theta is not None:
            self.best_actor_.set_theta(res.best_theta)
        self.best_sr_ = res.best_sr
        self.reward_history_ = res.reward_history
        self.eval_history_ = res.eval_history
        self.n_features_in_ = OBS_DIM
        return self

    def _actor(self, use_best: bool):
        check_is_fitted(self, "nets_")
        return self.best_actor_ if use_best else self.nets_.actor

    def predict(self, X, use_best=True):
        X = check_observations(X, self.n_features_in_ if hasattr(self, "n_features_in_") else OBS_DIM)
        return self._actor(use_best)(X)

    def evaluate(self, env, n_episodes=100, seed=0, record=False, use_best=True) -> dict:
        nets = copy.copy(self.nets_)
        nets.actor = self._actor(use_best)
        return evaluate_actor(actor_policy(nets), check_env_config(env), n_episodes, seed, record)

    def score(self, env, y=None, n_episodes=100, seed=0) -> float:
        return self.evaluate(env, n_episodes, seed)["SR"]

    def save(self, path, use_best=True) -> None:
        save_checkpoint(path, self._actor(use_best))

    @classmethod
    def from_checkpoint(cls, path, **params):
        actor, _ = load_checkpoint(path)
        est = cls(**params)
        est.nets_ = Td3Nets(actor, None, None)
        est.best_actor_ = actor
        est.n_features_in_ = actor.sizes[0]
        return est


ESTIMATORS = {"ppo-lstm": RecurrentPPO, "ppo": FeedForwardPPO, "td3": TD3Agent}
