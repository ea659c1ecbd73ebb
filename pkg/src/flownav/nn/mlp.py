"""Plain multilayer perceptron used by the TD3 actor and critics."""

from __future__ import annotations

import numpy as np

from .layers import DenseLayer, check_finite, glorot
from .policy import FlatParams


class Mlp(FlatParams):
    """Stack of dense layers; ``out_scale`` multiplies the final activation."""

    recurrent = False

    def __init__(self, sizes, hidden_act: str = "relu", out_act: str = "linear",
                 out_scale=1.0, seed: int = 0, kind: str = "mlp"):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        shapes = {}
        for k, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            shapes[f"W{k}"] = (n_out, n_in)
            shapes[f"b{k}"] = (n_out,)
        super().__init__(shapes)
        self.sizes = sizes
        self.hidden_act, self.out_act = hidden_act, out_act
        self.out_scale = np.asarray(out_scale, dtype=np.float64)
        self.kind = kind
        rng = np.random.default_rng(seed)
        for k in range(len(sizes) - 1):
            self.p[f"W{k}"][:] = glorot(rng, sizes[k + 1], sizes[k])

    @property
    def arch(self) -> tuple[int, ...]:
        return self.sizes

    def layers(self):
        n = len(self.sizes) - 1
        return [DenseLayer(self.p[f"W{k}"], self.p[f"b{k}"],
                           self.out_act if k == n - 1 else self.hidden_act) for k in range(n)]

    def forward(self, x):
        acts = [np.asarray(x, dtype=np.float64)]
        for k, layer in enumerate(self.layers()):
            acts.append(layer.forward(acts[-1]))
            check_finite(acts[-1], f"layer {k}")
        return acts[-1] * self.out_scale, acts

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, acts, dy):
        """Returns ``(flat_grad, dx)`` given upstream ``dy`` on the scaled output."""
        grad = np.zeros(self.size)
        g = self.views(grad)
        d = dy * self.out_scale
        for k, layer in reversed(list(enumerate(self.layers()))):
            d, g[f"W{k}"][:], g[f"b{k}"][:] = layer.backward(acts[k], acts[k + 1], d)
        return grad, d
