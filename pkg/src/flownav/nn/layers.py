"""Dense and LSTM building blocks with hand-written backward passes.

All arrays are float64. Batched inputs put the batch on the leading axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("tanh", "relu", "linear")


class NumericError(FloatingPointError):
    pass


def check_finite(arr: np.ndarray, where: str) -> None:
    if not np.isfinite(arr).all():
        raise NumericError(f"non-finite values in {where}")


def sigmoid(z):
    # split form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def glorot(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_out, fan_in))


def activate(z: np.ndarray, act: str) -> np.ndarray:
    if act == "tanh":
        return np.tanh(z)
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "linear":
        return z
    raise ValueError(f"unknown activation {act!r}")


def activation_grad(y: np.ndarray, act: str) -> np.ndarray:
    """Derivative of the activation expressed through its output ``y``."""
    if act == "tanh":
        return 1.0 - y * y
    if act == "relu":
        return (y > 0.0).astype(y.dtype)
    if act == "linear":
        return np.ones_like(y)
    raise ValueError(f"unknown activation {act!r}")


@dataclass
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent shapes W{self.W.shape} b{self.b.shape}")

    def forward(self, x: np.ndarray) -> np.ndarray:
        return activate(x @ self.W.T + self.b, self.activation)

    def backward(self, x: np.ndarray, y: np.ndarray, dy: np.ndarray):
        """Given input ``x``, output ``y`` and upstream ``dy``, return ``(dx, dW, db)``."""
        dz = dy if self.activation == "linear" else dy * activation_grad(y, self.activation)
        dz2 = dz.reshape(-1, dz.shape[-1])
        dW = dz2.T @ x.reshape(-1, x.shape[-1])
        return dz @ self.W, dW, dz2.sum(axis=0)


@dataclass
class LstmCell:
    """Gate weights stacked as ``[forget, input, candidate, output]`` rows.

    ``W`` has shape ``(4H, H + I)`` and acts on ``[h_prev, x]``.
    """

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        four_h, cols = self.W.shape
        if four_h % 4 or self.b.shape != (four_h,) or cols <= four_h // 4:
            raise ValueError(f"inconsistent LSTM shapes W{self.W.shape} b{self.b.shape}")

    @property
    def hidden_size(self) -> int:
        return self.W.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.W.shape[1] - self.hidden_size

    def _gate(self, k: int):
        H = self.hidden_size
        return self.W[k * H:(k + 1) * H], self.b[k * H:(k + 1) * H]

    W_f = property(lambda self: self._gate(0)[0])
    W_i = property(lambda self: self._gate(1)[0])
    W_C = property(lambda self: self._gate(2)[0])
    W_o = property(lambda self: self._gate(3)[0])
    b_f = property(lambda self: self._gate(0)[1])
    b_i = property(lambda self: self._gate(1)[1])
    b_C = property(lambda self: self._gate(2)[1])
    b_o = property(lambda self: self._gate(3)[1])


def lstm_forward(cell: LstmCell, x, h_prev, c_prev, return_cache: bool = False):
    """One LSTM step. Works on single vectors or ``(B, .)`` batches."""
    H = cell.hidden_size
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != cell.input_size or np.shape(h_prev)[-1] != H or np.shape(c_prev)[-1] != H:
        raise ValueError(f"shape mismatch: x{x.shape} h{np.shape(h_prev)} c{np.shape(c_prev)} "
                         f"for cell with input {cell.input_size}, hidden {H}")
    hx = np.concatenate([h_prev, x], axis=-1)
    g = hx @ cell.W.T + cell.b
    f = sigmoid(g[..., :H])
    i = sigmoid(g[..., H:2 * H])
    ct = np.tanh(g[..., 2 * H:3 * H])
    o = sigmoid(g[..., 3 * H:])
    c = f * c_prev + i * ct
    tc = np.tanh(c)
    h = o * tc
    if return_cache:
        return h, c, (hx, c_prev, f, i, ct, o, tc)
    return h, c


def lstm_backward(cell: LstmCell, cache, dh, dc):
    """Backward through one step.

    ``dh`` and ``dc`` are total gradients w.r.t. this step's outputs. Returns
    ``(dx, dh_prev, dc_prev, dW, db)``.
    """
    hx, c_prev, f, i, ct, o, tc = cache
    H = cell.hidden_size
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    dg = np.concatenate([dc * c_prev * f * (1.0 - f),
                         dc * ct * i * (1.0 - i),
                         dc * i * (1.0 - ct * ct),
                         do * o * (1.0 - o)], axis=-1)
    dhx = dg @ cell.W
    dW = dg.T @ hx
    return dhx[..., H:], dhx[..., :H], dc * f, dW, dg.sum(axis=0)
