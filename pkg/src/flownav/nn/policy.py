"""Actor-critic networks with flat parameter storage and analytic BPTT.

Both nets emit five head outputs per step, ordered
``(mu_1, mu_2, logsigma_1, logsigma_2, value)``. Parameters live in one flat
float64 vector (``net.theta``); named arrays are views into it, so
optimizers and checkpoints can work on the flat vector directly.
"""

from __future__ import annotations

import math

import numpy as np

from .gaussian import ACTION_HIGH
from .layers import DenseLayer, LstmCell, check_finite, glorot, lstm_backward, lstm_forward

N_ACT = 2
N_HEAD = 2 * N_ACT + 1
LOGSIG_MIN, LOGSIG_MAX = -5.0, 2.0
#: Initial exploration noise, 0.3 of each action's half-range.
INIT_SIGMA = tuple(0.3 * ACTION_HIGH)


class FlatParams:
    """Named array views over a single flat vector."""

    def __init__(self, shapes: dict[str, tuple[int, ...]]):
        self.shapes = dict(shapes)
        self.size = sum(math.prod(s) for s in self.shapes.values())
        self.theta = np.zeros(self.size)
        self.p = self.views(self.theta)

    def views(self, flat: np.ndarray) -> dict[str, np.ndarray]:
        out, off = {}, 0
        for name, shape in self.shapes.items():
            n = math.prod(shape)
            out[name] = flat[off:off + n].reshape(shape)
            off += n
        return out

    def set_theta(self, flat: np.ndarray) -> None:
        self.theta[:] = flat

    # copy/pickle would turn the views into detached arrays; rebuild them instead
    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("p", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.p = self.views(self.theta)


def split_heads(out: np.ndarray):
    """``(mu, sigma, value, logsig_in_range)`` from raw head outputs ``(..., 5)``."""
    raw = out[..., N_ACT:2 * N_ACT]
    logsig = np.clip(raw, LOGSIG_MIN, LOGSIG_MAX)
    in_range = (raw > LOGSIG_MIN) & (raw < LOGSIG_MAX)
    return out[..., :N_ACT], np.exp(logsig), out[..., 2 * N_ACT], in_range


def _init_heads(rng, W: np.ndarray, b: np.ndarray, policy_scale: float, init_sigma) -> None:
    W[:] = glorot(rng, *W.shape)
    W[:2 * N_ACT] *= policy_scale
    b[:] = 0.0
    if init_sigma is not None:
        b[N_ACT:2 * N_ACT] = np.log(init_sigma)


class PolicyNet(FlatParams):
    """obs -> dense(64, tanh) -> dense(32, tanh) -> LSTM(16) -> heads.

    The LSTM input is the second dense output concatenated with the previous
    action and previous reward.
    """

    recurrent = True
    kind = "ppo-lstm"

    def __init__(self, n_obs: int = 12, sizes=(64, 32), hidden: int = 16, seed: int = 0,
                 policy_scale: float = 0.01, init_sigma=INIT_SIGMA):
        d1, d2 = sizes
        n_in = d2 + N_ACT + 1
        super().__init__({
            "W1": (d1, n_obs), "b1": (d1,),
            "W2": (d2, d1), "b2": (d2,),
            "Wl": (4 * hidden, hidden + n_in), "bl": (4 * hidden,),
            "Wh": (N_HEAD, hidden), "bh": (N_HEAD,),
        })
        self.n_obs, self.sizes, self.hidden = n_obs, (d1, d2), hidden
        rng = np.random.default_rng(seed)
        p = self.p
        p["W1"][:] = glorot(rng, d1, n_obs)
        p["W2"][:] = glorot(rng, d2, d1)
        # per-gate fan-out so each gate matrix gets the same range as a dense layer
        for k in range(4):
            p["Wl"][k * hidden:(k + 1) * hidden] = glorot(rng, hidden, hidden + n_in)
        p["bl"][:hidden] = 1.0
        _init_heads(rng, p["Wh"], p["bh"], policy_scale, init_sigma)

    @property
    def arch(self) -> tuple[int, ...]:
        return (self.n_obs, *self.sizes, self.hidden)

    def layers(self, p=None):
        p = self.p if p is None else p
        return (DenseLayer(p["W1"], p["b1"], "tanh"), DenseLayer(p["W2"], p["b2"], "tanh"),
                LstmCell(p["Wl"], p["bl"]), DenseLayer(p["Wh"], p["bh"], "linear"))

    def initial_state(self, batch: int = 1):
        return np.zeros((batch, self.hidden)), np.zeros((batch, self.hidden))

    def forward(self, obs, prev_action, prev_reward, state):
        """Run ``(T, B, .)`` sequences from ``state=(h0, c0)``.

        Returns ``(heads, (h_T, c_T), cache)`` with heads of shape ``(T, B, 5)``.
        """
        d1, d2, cell, head = self.layers()
        obs = np.asarray(obs, dtype=np.float64)
        T, B = obs.shape[:2]
        a1 = d1.forward(obs)
        check_finite(a1, "dense1")
        a2 = d2.forward(a1)
        check_finite(a2, "dense2")
        xs = np.concatenate([a2, prev_action, np.reshape(prev_reward, (T, B, 1))], axis=-1)
        h, c = state
        hs = np.empty((T, B, self.hidden))
        steps = []
        for t in range(T):
            h, c, sc = lstm_forward(cell, xs[t], h, c, return_cache=True)
            hs[t] = h
            steps.append(sc)
        check_finite(hs, "lstm")
        out = head.forward(hs)
        check_finite(out, "heads")
        return out, (h, c), (obs, a1, a2, hs, steps)

    def backward(self, cache, d_out: np.ndarray) -> np.ndarray:
        """Flat gradient given ``dL/dheads`` of shape ``(T, B, 5)``."""
        d1, d2, cell, head = self.layers()
        obs, a1, a2, hs, steps = cache
        grad = np.zeros(self.size)
        g = self.views(grad)
        dhs, g["Wh"][:], g["bh"][:] = head.backward(hs, None, d_out)
        T, B = obs.shape[:2]
        H = self.hidden
        dxs = np.empty((T, B, cell.input_size))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            dx, dh_next, dc_next, dW, db = lstm_backward(cell, steps[t], dhs[t] + dh_next, dc_next)
            g["Wl"] += dW
            g["bl"] += db
            dxs[t] = dx
        da2 = dxs[..., :self.sizes[1]]
        da1, g["W2"][:], g["b2"][:] = d2.backward(a1, a2, da2)
        _, g["W1"][:], g["b1"][:] = d1.backward(obs, a1, da1)
        return grad


class FfPolicyNet(FlatParams):
    """obs -> dense(128, tanh) -> dense(64, tanh) -> heads; no recurrence."""

    recurrent = False
    kind = "ppo"

    def __init__(self, n_obs: int = 12, sizes=(128, 64), seed: int = 0, policy_scale: float = 0.01,
                 init_sigma=INIT_SIGMA):
        d1, d2 = sizes
        super().__init__({
            "W1": (d1, n_obs), "b1": (d1,),
            "W2": (d2, d1), "b2": (d2,),
            "Wh": (N_HEAD, d2), "bh": (N_HEAD,),
        })
        self.n_obs, self.sizes = n_obs, (d1, d2)
        rng = np.random.default_rng(seed)
        self.p["W1"][:] = glorot(rng, d1, n_obs)
        self.p["W2"][:] = glorot(rng, d2, d1)
        _init_heads(rng, self.p["Wh"], self.p["bh"], policy_scale, init_sigma)

    @property
    def arch(self) -> tuple[int, ...]:
        return (self.n_obs, *self.sizes)

    def layers(self, p=None):
        p = self.p if p is None else p
        return (DenseLayer(p["W1"], p["b1"], "tanh"), DenseLayer(p["W2"], p["b2"], "tanh"),
                DenseLayer(p["Wh"], p["bh"], "linear"))

    def initial_state(self, batch: int = 1):
        return None

    def forward(self, obs, prev_action=None, prev_reward=None, state=None):
        d1, d2, head = self.layers()
        obs = np.asarray(obs, dtype=np.float64)
        a1 = d1.forward(obs)
        check_finite(a1, "dense1")
        a2 = d2.forward(a1)
        check_finite(a2, "dense2")
        out = head.forward(a2)
        check_finite(out, "heads")
        return out, None, (obs, a1, a2)

    def backward(self, cache, d_out: np.ndarray) -> np.ndarray:
        d1, d2, head = self.layers()
        obs, a1, a2 = cache
        grad = np.zeros(self.size)
        g = self.views(grad)
        da2, g["Wh"][:], g["bh"][:] = head.backward(a2, None, d_out)
        da1, g["W2"][:], g["b2"][:] = d2.backward(a1, a2, da2)
        _, g["W1"][:], g["b1"][:] = d1.backward(obs, a1, da1)
        return grad


def policy_forward(net, obs, prev_action, prev_reward, hidden):
    """Single-step convenience: returns ``(mu, sigma, value, hidden')`` for one observation."""
    obs = np.asarray(obs, dtype=np.float64).reshape(1, 1, -1)
    pa = np.asarray(prev_action, dtype=np.float64).reshape(1, 1, N_ACT)
    pr = np.asarray(prev_reward, dtype=np.float64).reshape(1, 1)
    out, hidden, _ = net.forward(obs, pa, pr, hidden)
    mu, sigma, value, _ = split_heads(out[0, 0])
    return mu, sigma, float(value), hidden
