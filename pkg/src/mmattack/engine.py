"""Dense float64 compute graph with reverse-mode differentiation.

A LayerChain is a sequential graph over batches: forward caches whatever
each node needs, backward walks the nodes in reverse and returns the
gradient with respect to the input batch while accumulating parameter
gradients in place. Multiple backward calls after one forward are allowed
(used for input Jacobians); parameter gradients then accumulate, so call
zero_grads() between training steps.
"""

import math

import numpy as np

from . import backend
from .errors import GraphStateError, ShapeError


class Layer:
    """Base node. Subclasses cache forward state and consume it in backward."""

    name = ""

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self) -> list:
        return []

    def gradients(self) -> list:
        return []

    def _require_forward(self, attr="_cache"):
        if getattr(self, attr, None) is None:
            raise GraphStateError(f"{self.name}: backward called before forward")


class Affine(Layer):
    """y = x @ w + b with x of shape (n, in_dim)."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str = "affine"):
        bound = math.sqrt(1.0 / in_dim)
        self.w = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        self.b = rng.uniform(-bound, bound, size=(out_dim,))
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self.name = name
        self._cache = None

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.w.shape[0]:
            raise ShapeError(
                f"{self.name}: expected input (n, {self.w.shape[0]}), got {x.shape}"
            )
        self._cache = x
        return x @ self.w + self.b

    def backward(self, dout):
        self._require_forward()
        x = self._cache
        if dout.shape != (x.shape[0], self.w.shape[1]):
            raise ShapeError(f"{self.name}: gradient shape {dout.shape} does not match output")
        self.dw += x.T @ dout
        self.db += dout.sum(axis=0)
        return dout @ self.w.T

    def parameters(self):
        return [self.w, self.b]

    def gradients(self):
        return [self.dw, self.db]


class Conv2d(Layer):
    """Zero-padded 2-D convolution over (n, c, h, w) batches."""

    def __init__(self, in_channels, out_channels, kernel, stride, padding,
                 rng: np.random.Generator, name: str = "conv"):
        fan_in = in_channels * kernel * kernel
        bound = math.sqrt(1.0 / fan_in)
        self.w = rng.uniform(-bound, bound, size=(out_channels, in_channels, kernel, kernel))
        self.b = rng.uniform(-bound, bound, size=(out_channels,))
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self.stride = stride
        self.padding = padding
        self.name = name
        self._cache = None

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.w.shape[1]:
            raise ShapeError(
                f"{self.name}: expected input (n, {self.w.shape[1]}, h, w), got {x.shape}"
            )
        if x.shape[2] + 2 * self.padding < self.w.shape[2] or x.shape[3] + 2 * self.padding < self.w.shape[3]:
            raise ShapeError(f"{self.name}: input {x.shape} smaller than kernel")
        self._cache = x
        return backend.conv2d_forward(x, self.w, self.b, self.stride, self.padding)

    def backward(self, dout):
        self._require_forward()
        dx, dw, db = backend.conv2d_backward(self._cache, self.w, dout, self.stride, self.padding)
        self.dw += dw
        self.db += db
        return dx

    def parameters(self):
        return [self.w, self.b]

    def gradients(self):
        return [self.dw, self.db]


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        self.name = name
        self._cache = None

    def forward(self, x):
        self._cache = x > 0.0
        return np.where(self._cache, x, 0.0)

    def backward(self, dout):
        self._require_forward()
        return np.where(self._cache, dout, 0.0)


class MaxPool2d(Layer):
    """Max pooling over (n, c, h, w); ties resolve to the first maximum."""

    def __init__(self, kernel: int, stride: int, name: str = "maxpool"):
        self.kernel = kernel
        self.stride = stride
        self.name = name
        self._cache = None

    def forward(self, x):
        if x.ndim != 4:
            raise ShapeError(f"{self.name}: expected (n, c, h, w), got {x.shape}")
        if x.shape[2] < self.kernel or x.shape[3] < self.kernel:
            raise ShapeError(f"{self.name}: input {x.shape} smaller than pooling window")
        out, idx = backend.maxpool2d_forward(x, self.kernel, self.stride)
        self._cache = (idx, x.shape[2], x.shape[3])
        return out

    def backward(self, dout):
        self._require_forward()
        idx, h, w = self._cache
        return backend.maxpool2d_backward(idx, dout, h, w)


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        self.name = name
        self._cache = None

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        self._require_forward()
        return dout.reshape(self._cache)


class Softmax(Layer):
    """Row-wise softmax (shift-stabilized)."""

    def __init__(self, name: str = "softmax"):
        self.name = name
        self._cache = None

    def forward(self, x):
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=-1, keepdims=True)
        self._cache = p
        return p

    def backward(self, dout):
        self._require_forward()
        p = self._cache
        return p * (dout - (dout * p).sum(axis=-1, keepdims=True))


class Log(Layer):
    """Elementwise natural log; inputs floored at 1e-12 before the log."""

    def __init__(self, name: str = "log"):
        self.name = name
        self._cache = None

    def forward(self, x):
        self._cache = np.maximum(x, 1e-12)
        return np.log(self._cache)

    def backward(self, dout):
        self._require_forward()
        return dout / self._cache


class Square(Layer):
    def __init__(self, name: str = "square"):
        self.name = name
        self._cache = None

    def forward(self, x):
        self._cache = x
        return x * x

    def backward(self, dout):
        self._require_forward()
        return 2.0 * self._cache * dout


class Sum(Layer):
    """Sum over all non-batch axes; output shape (n, 1)."""

    def __init__(self, name: str = "sum"):
        self.name = name
        self._cache = None

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1).sum(axis=1, keepdims=True)

    def backward(self, dout):
        self._require_forward()
        shape = self._cache
        ones = np.ones(shape)
        return ones * dout.reshape(shape[0], *([1] * (len(shape) - 1)))


class Scale(Layer):
    """Multiply by a fixed scalar."""

    def __init__(self, factor: float, name: str = "scale"):
        self.factor = float(factor)
        self.name = name
        self._seen = None

    def forward(self, x):
        self._seen = True
        return self.factor * x

    def backward(self, dout):
        self._require_forward("_seen")
        return self.factor * dout


class LayerChain:
    """Sequential graph. forward returns the last node's output batch."""

    def __init__(self, layers: list):
        self.layers = list(layers)
        self._forward_done = False
        for i, layer in enumerate(self.layers):
            if not layer.name or layer.name in [l.name for l in self.layers[:i]]:
                layer.name = f"{layer.name or layer.__class__.__name__.lower()}{i}"

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        for layer in self.layers:
            x = layer.forward(x)
        self._forward_done = True
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if not self._forward_done:
            raise GraphStateError("backward called before any forward pass")
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout

    def parameters(self) -> list:
        return [p for layer in self.layers for p in layer.parameters()]

    def gradients(self) -> list:
        return [g for layer in self.layers for g in layer.gradients()]

    def zero_grads(self):
        for g in self.gradients():
            g[...] = 0.0
