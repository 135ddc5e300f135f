"""Layer implementations for the from-scratch network engine.

Every layer exposes ``forward``, ``backward``, and ordered ``params`` /
``grads`` dicts.  ``backward`` consumes the gradient w.r.t. the layer
output and returns the gradient w.r.t. the layer input, filling the
parameter gradients as a side effect.  Caches from the last forward pass
are kept on the layer, so forward must precede backward for each batch.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ShapeMismatchError


class Layer:
    def __init__(self):
        self.params = {}
        self.grads = {}

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gout: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _he_uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv3d(Layer):
    """Valid cross-correlation, stride 1, cubic kernel."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng, dtype):
        super().__init__()
        self.kernel = kernel
        fan_in = in_channels * kernel ** 3
        self.params["w"] = _he_uniform(
            rng, (out_channels, in_channels, kernel, kernel, kernel), fan_in, dtype
        )
        self.params["b"] = np.zeros(out_channels, dtype=dtype)
        self._x = None

    def forward(self, x):
        if x.ndim != 5 or x.shape[1] != self.params["w"].shape[1]:
            raise ShapeMismatchError(f"conv3d expects (B, {self.params['w'].shape[1]}, D, H, W), got {x.shape}")
        self._x = x
        return kernels.conv3d_forward(x, self.params["w"], self.params["b"])

    def backward(self, gout):
        dw, db = kernels.conv3d_grad_params(self._x, gout)
        self.grads["w"] = dw
        self.grads["b"] = db
        return kernels.conv3d_grad_input(gout, self.params["w"])


class Conv2d(Layer):
    """2-D convolution implemented through the 3-D kernels with a
    singleton depth axis, so both paths share one verified kernel."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int, rng, dtype):
        super().__init__()
        self.kernel = kernel
        fan_in = in_channels * kernel ** 2
        self.params["w"] = _he_uniform(
            rng, (out_channels, in_channels, kernel, kernel), fan_in, dtype
        )
        self.params["b"] = np.zeros(out_channels, dtype=dtype)
        self._x = None

    def _w5(self):
        return self.params["w"][:, :, None, :, :]

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.params["w"].shape[1]:
            raise ShapeMismatchError(f"conv2d expects (B, {self.params['w'].shape[1]}, H, W), got {x.shape}")
        self._x = x
        out = kernels.conv3d_forward(x[:, :, None, :, :], self._w5(), self.params["b"])
        return out[:, :, 0]

    def backward(self, gout):
        g5 = gout[:, :, None, :, :]
        dw, db = kernels.conv3d_grad_params(self._x[:, :, None, :, :], g5)
        self.grads["w"] = dw[:, :, 0]
        self.grads["b"] = db
        return kernels.conv3d_grad_input(g5, self._w5())[:, :, 0]


class Relu(Layer):
    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        # maximum (not where) so a NaN input poisons the output and is
        # caught by the loss/divergence checks instead of turning into 0
        return np.maximum(x, 0)

    def backward(self, gout):
        return np.where(self._mask, gout, 0)


class GlobalMaxPool(Layer):
    """Per-channel maximum over all spatial positions: (B, C, ...) -> (B, C).

    Turns the detector head into an existence test ("some window matched")
    instead of a positional sum, which is the decisive statistic for
    attacks that leave only a few extreme cells behind.
    """

    def __init__(self):
        super().__init__()
        self._shape = None
        self._argmax = None

    def forward(self, x):
        if x.ndim < 3:
            raise ShapeMismatchError(f"gmaxpool expects (B, C, spatial...), got {x.shape}")
        self._shape = x.shape
        flat = x.reshape(x.shape[0], x.shape[1], -1)
        self._argmax = np.argmax(flat, axis=2)
        return np.max(flat, axis=2)

    def backward(self, gout):
        b, c = gout.shape
        dx = np.zeros((b, c, int(np.prod(self._shape[2:]))), dtype=gout.dtype)
        bi, ci = np.meshgrid(np.arange(b), np.arange(c), indexing="ij")
        dx[bi, ci, self._argmax] = gout
        return dx.reshape(self._shape)


class Flatten(Layer):
    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gout):
        return gout.reshape(self._shape)


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, rng, dtype):
        super().__init__()
        self.params["w"] = _he_uniform(rng, (in_features, out_features), in_features, dtype)
        self.params["b"] = np.zeros(out_features, dtype=dtype)
        self._x = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.params["w"].shape[0]:
            raise ShapeMismatchError(
                f"dense expects (B, {self.params['w'].shape[0]}), got {x.shape}"
            )
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, gout):
        self.grads["w"] = self._x.T @ gout
        self.grads["b"] = gout.sum(axis=0)
        return gout @ self.params["w"].T


class Sigmoid(Layer):
    def __init__(self):
        super().__init__()
        self._out = None

    def forward(self, x):
        # Split by sign so exp never overflows.
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._out = out
        return out

    def backward(self, gout):
        return gout * self._out * (1.0 - self._out)
