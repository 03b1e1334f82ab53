"""Classifier models built on the layer-chain engine.

A NeuralClassifier owns an architecture description, a seeded parameter
initialization and the forward/backward plumbing the attacks need:
probabilities, 1-based class decisions, input gradients and input
Jacobians. Checkpoints are JSON and round-trip bit-exactly.
"""

import json
from dataclasses import dataclass

import numpy as np

from .engine import Affine, Conv2d, Flatten, LayerChain, MaxPool2d, ReLU
from .errors import ConfigError, ShapeError
from .losses import PROB_FLOOR, softmax

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    """One architecture entry; unused fields stay None."""

    kind: str  # affine | relu | conv | maxpool | flatten
    out: int | None = None
    kernel: int | None = None
    stride: int | None = None
    padding: int | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for f in ("out", "kernel", "stride", "padding"):
            v = getattr(self, f)
            if v is not None:
                d[f] = v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**d)


def _build_chain(arch, input_shape, n_classes, rng):
    layers = []
    shape = tuple(input_shape)
    for i, spec in enumerate(arch):
        name = f"{spec.kind}{i}"
        if spec.kind == "affine":
            if len(shape) != 1:
                raise ShapeError(f"{name}: affine needs a flat input, have {shape}")
            layers.append(Affine(shape[0], spec.out, rng, name))
            shape = (spec.out,)
        elif spec.kind == "relu":
            layers.append(ReLU(name))
        elif spec.kind == "conv":
            if len(shape) != 3:
                raise ShapeError(f"{name}: conv needs (c, h, w) input, have {shape}")
            c, h, w = shape
            k, s, p = spec.kernel, spec.stride or 1, spec.padding or 0
            h2 = (h + 2 * p - k) // s + 1
            w2 = (w + 2 * p - k) // s + 1
            if h2 < 1 or w2 < 1:
                raise ShapeError(f"{name}: kernel {k} too large for input {shape}")
            layers.append(Conv2d(c, spec.out, k, s, p, rng, name))
            shape = (spec.out, h2, w2)
        elif spec.kind == "maxpool":
            if len(shape) != 3:
                raise ShapeError(f"{name}: maxpool needs (c, h, w) input, have {shape}")
            c, h, w = shape
            k, s = spec.kernel, spec.stride or spec.kernel
            if h < k or w < k:
                raise ShapeError(f"{name}: window {k} too large for input {shape}")
            shape = (c, (h - k) // s + 1, (w - k) // s + 1)
            layers.append(MaxPool2d(k, s, name))
        elif spec.kind == "flatten":
            layers.append(Flatten(name))
            shape = (int(np.prod(shape)),)
        else:
            raise ConfigError(f"unknown layer kind {spec.kind!r}")
    if len(shape) != 1 or shape[0] != n_classes:
        raise ShapeError(
            f"architecture output shape {shape} does not match n_classes={n_classes}"
        )
    return LayerChain(layers)


class NeuralClassifier:
    """Feed-forward classifier; class labels are 1-based ints."""

    def __init__(self, arch, input_shape, n_classes, seed=0):
        if n_classes < 2:
            raise ConfigError(f"n_classes must be at least 2, got {n_classes}")
        self.arch = [a if isinstance(a, LayerSpec) else LayerSpec.from_dict(a) for a in arch]
        self.input_shape = tuple(int(s) for s in input_shape)
        self.n_classes = int(n_classes)
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        self.chain = _build_chain(self.arch, self.input_shape, self.n_classes, rng)

    # -- shape handling -------------------------------------------------

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        d = len(self.input_shape)
        if x.shape == self.input_shape:
            return x[None], True
        if x.ndim == d + 1 and x.shape[1:] == self.input_shape:
            return x, False
        raise ShapeError(
            f"input shape {x.shape} does not match model input {self.input_shape}"
        )

    # -- inference ------------------------------------------------------

    def predict_logits(self, x):
        batch, single = self._as_batch(x)
        logits = self.chain.forward(batch)
        return logits[0] if single else logits

    def predict_proba(self, x):
        batch, single = self._as_batch(x)
        p = softmax(self.chain.forward(batch))
        return p[0] if single else p

    def classify(self, x):
        """Argmax class, 1-based; ties resolve to the lowest class index."""
        p = self.predict_proba(x)
        return int(np.argmax(p) + 1) if p.ndim == 1 else (np.argmax(p, axis=1) + 1)

    # -- differentiation ------------------------------------------------

    def input_gradient(self, x, target_class):
        """(loss, d loss / d x) for the cross-entropy toward target_class."""
        if not 1 <= target_class <= self.n_classes:
            raise ConfigError(f"target class {target_class} out of range 1..{self.n_classes}")
        batch, single = self._as_batch(x)
        if not single:
            raise ShapeError("input_gradient expects a single sample")
        logits = self.chain.forward(batch)
        p = softmax(logits)
        loss = float(-np.log(max(p[0, target_class - 1], PROB_FLOOR)))
        dlogits = p.copy()
        dlogits[0, target_class - 1] -= 1.0
        return loss, self.chain.backward(dlogits)[0]

    def input_jacobian(self, x):
        """d probs / d x, shape (n_classes, *input_shape)."""
        batch, single = self._as_batch(x)
        if not single:
            raise ShapeError("input_jacobian expects a single sample")
        logits = self.chain.forward(batch)
        p = softmax(logits)[0]
        rows = np.empty((self.n_classes,) + self.input_shape)
        for k in range(self.n_classes):
            dp = -p[k] * p
            dp[k] += p[k]
            rows[k] = self.chain.backward(dp[None])[0]
        return rows

    # -- bookkeeping ------------------------------------------------------

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.chain.parameters())

    def clone(self) -> "NeuralClassifier":
        other = NeuralClassifier(self.arch, self.input_shape, self.n_classes, self.seed)
        for dst, src in zip(other.chain.parameters(), self.chain.parameters()):
            np.copyto(dst, src)
        return other

    def save(self, path):
        blob = {
            "format_version": CHECKPOINT_VERSION,
            "architecture": [a.to_dict() for a in self.arch],
            "input_shape": list(self.input_shape),
            "n_classes": self.n_classes,
            "seed": self.seed,
            "parameters": [
                {"shape": list(p.shape), "data": p.reshape(-1).tolist()}
                for p in self.chain.parameters()
            ],
        }
        with open(path, "w") as fh:
            json.dump(blob, fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "NeuralClassifier":
        with open(path) as fh:
            blob = json.load(fh)
        if blob.get("format_version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version in {path}")
        model = cls(blob["architecture"], blob["input_shape"], blob["n_classes"], blob["seed"])
        params = model.chain.parameters()
        if len(params) != len(blob["parameters"]):
            raise ConfigError(f"checkpoint {path} does not match the architecture")
        for p, entry in zip(params, blob["parameters"]):
            if list(p.shape) != entry["shape"]:
                raise ConfigError(f"checkpoint {path} has a parameter of wrong shape")
            np.copyto(p, np.asarray(entry["data"]).reshape(p.shape))
        return model


def build_mlp(widths, n_classes, seed=0) -> NeuralClassifier:
    """MLP from layer widths, e.g. [2, 32, 32] means 2 -> 32 -> 32 -> n_classes."""
    if len(widths) < 1:
        raise ConfigError("widths must contain at least the input dimension")
    arch = []
    for w in widths[1:]:
        arch.append(LayerSpec("affine", out=w))
        arch.append(LayerSpec("relu"))
    arch.append(LayerSpec("affine", out=n_classes))
    return NeuralClassifier(arch, (widths[0],), n_classes, seed)


def build_small_cnn_analog(height, width, channels=1, n_classes=10, seed=0) -> NeuralClassifier:
    """conv8-pool-conv16-pool-flatten-affine64-affine head; needs h, w divisible by 4."""
    if height % 4 != 0 or width % 4 != 0:
        raise ConfigError(
            f"image sides must be divisible by 4, got {height}x{width}"
        )
    arch = [
        LayerSpec("conv", out=8, kernel=3, stride=1, padding=1),
        LayerSpec("relu"),
        LayerSpec("maxpool", kernel=2, stride=2),
        LayerSpec("conv", out=16, kernel=3, stride=1, padding=1),
        LayerSpec("relu"),
        LayerSpec("maxpool", kernel=2, stride=2),
        LayerSpec("flatten"),
        LayerSpec("affine", out=64),
        LayerSpec("relu"),
        LayerSpec("affine", out=n_classes),
    ]
    return NeuralClassifier(arch, (channels, height, width), n_classes, seed)


def build_from_spec(spec: dict, n_classes: int, seed: int = 0) -> NeuralClassifier:
    """Build a model from a JSON-friendly description.

    {"kind": "mlp", "widths": [2, 8]} or
    {"kind": "small_cnn", "height": 16, "width": 16, "channels": 1}.
    """
    kind = spec.get("kind", "mlp")
    if kind == "mlp":
        return build_mlp(list(spec["widths"]), n_classes, seed)
    if kind == "small_cnn":
        return build_small_cnn_analog(
            spec["height"], spec["width"], spec.get("channels", 1), n_classes, seed
        )
    raise ConfigError(f"unknown model kind {kind!r}")
