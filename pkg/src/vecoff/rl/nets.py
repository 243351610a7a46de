"""Small dense networks with explicit backpropagation.

Everything trains through plain numpy so the gradient path is inspectable
and checkable against finite differences. Layers are fully connected;
hidden activations are ReLU or tanh, outputs are always linear (callers
apply their own loss heads). Initialization scales with fan-in and is
driven entirely by the supplied generator, so a seed fixes the network.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

_ACTIVATIONS = ("relu", "tanh")


class Mlp:
    """Fully connected network: linear layers with a nonlinearity between.

    Weights have shape (fan_in, fan_out); inputs are row vectors, batches
    are stacked rows.
    """

    def __init__(
        self,
        sizes: Sequence[int],
        rng: np.random.Generator | None = None,
        activation: str = "relu",
    ):
        if len(sizes) < 2:
            raise ValueError(f"need at least input and output sizes, got {sizes}")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")
        self.sizes = tuple(int(s) for s in sizes)
        self.activation = activation
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        if rng is not None:
            for fan_in, fan_out in zip(self.sizes, self.sizes[1:]):
                gain = 2.0 if activation == "relu" else 1.0
                scale = math.sqrt(gain / fan_in)
                self.weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
                self.biases.append(np.zeros(fan_out))

    @classmethod
    def from_weights(
        cls, layers: Sequence[tuple[np.ndarray, np.ndarray]], activation: str = "relu"
    ) -> "Mlp":
        sizes = [layers[0][0].shape[0]] + [w.shape[1] for w, _ in layers]
        net = cls(sizes, rng=None, activation=activation)
        for w, b in layers:
            if w.shape[1] != b.shape[0]:
                raise ValueError(f"bias shape {b.shape} does not match weight {w.shape}")
            net.weights.append(np.array(w, dtype=np.float64))
            net.biases.append(np.array(b, dtype=np.float64))
        return net

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Copies of (weight, bias) per layer, in forward order."""
        return [(w.copy(), b.copy()) for w, b in zip(self.weights, self.biases)]

    def clone(self) -> "Mlp":
        return Mlp.from_weights(self.layers(), activation=self.activation)

    def params(self) -> list[np.ndarray]:
        """The live parameter arrays, interleaved [W0, b0, W1, b1, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def _act(self, z: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return np.tanh(z)

    def _act_grad(self, z: np.ndarray, a: np.ndarray) -> np.ndarray:
        if self.activation == "relu":
            return (z > 0.0).astype(z.dtype)
        return 1.0 - a * a

    def forward(self, x: np.ndarray, want_cache: bool = False):
        """Batch forward pass. ``x`` is (batch, in) or (in,).

        With ``want_cache`` the returned cache feeds ``backward``.
        """
        squeeze = x.ndim == 1
        a = np.atleast_2d(np.asarray(x, dtype=np.float64))
        pre: list[np.ndarray] = []
        post: list[np.ndarray] = [a]
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = self._act(z) if i < n_layers - 1 else z
            post.append(a)
        out = a[0] if squeeze else a
        if want_cache:
            return out, (pre, post, squeeze)
        return out

    def backward(self, cache, grad_out: np.ndarray) -> list[np.ndarray]:
        """Gradients of a scalar loss wrt every parameter.

        ``grad_out`` is dLoss/d(output), shaped like the forward output.
        Returns gradients aligned with ``params()``.
        """
        pre, post, squeeze = cache
        g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
        grads_w: list[np.ndarray] = [None] * len(self.weights)
        grads_b: list[np.ndarray] = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = post[i].T @ g
            grads_b[i] = g.sum(axis=0)
            if i > 0:
                g = (g @ self.weights[i].T) * self._act_grad(pre[i - 1], post[i])
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out.extend((gw, gb))
        return out


class Adam:
    """Adaptive-moment optimizer over a fixed parameter list.

    Updates the arrays in place; the parameter list must keep its identity
    between steps.
    """

    def __init__(
        self,
        params: Sequence[np.ndarray],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: Sequence[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError(
                f"got {len(grads)} gradients for {len(self.params)} parameters"
            )
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
