"""First-order optimizers: SGD with momentum, and bias-corrected Adam.

SGD update rule per parameter tensor:

    v <- momentum * v + grad + weight_decay * p
    p <- p - learning_rate * v

so weight decay enters the velocity like an extra gradient term.  Adam
follows Kingma & Ba (2015) with weight decay folded into the gradient.
Adam matters here: distillation must drive the sup-norm probability gap
below a tight threshold on inputs that sit far from the origin, and that
regression is too stiff for plain momentum when the data spread is small
relative to its offset.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass
class SgdConfig:
    learning_rate: float
    momentum: float = 0.0
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.weight_decay < 0.0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")


class SgdState:
    """Per-parameter velocity buffers, created lazily on first step."""

    def __init__(self):
        self.velocities = None

    def reset(self):
        self.velocities = None


def sgd_step(params: list, grads: list, config: SgdConfig, state: SgdState):
    """Apply one update in place to every tensor in params."""
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameter tensors but {len(grads)} gradients")
    if state.velocities is None:
        state.velocities = [np.zeros_like(p) for p in params]
    if len(state.velocities) != len(params):
        raise ShapeError("optimizer state does not match the parameter list")
    for p, g, v in zip(params, grads, state.velocities):
        if p.shape != g.shape:
            raise ShapeError(f"parameter shape {p.shape} vs gradient shape {g.shape}")
        v *= config.momentum
        v += g
        if config.weight_decay:
            v += config.weight_decay * p
        p -= config.learning_rate * v


@dataclass
class AdamConfig:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.beta1 < 1.0:
            raise ConfigError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ConfigError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.eps <= 0.0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.weight_decay < 0.0:
            raise ConfigError(f"weight_decay must be non-negative, got {self.weight_decay}")


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self):
        self.moments = None
        self.t = 0

    def reset(self):
        self.moments = None
        self.t = 0


def adam_step(params: list, grads: list, config: AdamConfig, state: AdamState):
    """Apply one bias-corrected update in place to every tensor in params."""
    if len(params) != len(grads):
        raise ShapeError(f"{len(params)} parameter tensors but {len(grads)} gradients")
    if state.moments is None:
        state.moments = [(np.zeros_like(p), np.zeros_like(p)) for p in params]
    if len(state.moments) != len(params):
        raise ShapeError("optimizer state does not match the parameter list")
    state.t += 1
    c1 = 1.0 - config.beta1 ** state.t
    c2 = 1.0 - config.beta2 ** state.t
    for p, g, (m, v) in zip(params, grads, state.moments):
        if p.shape != g.shape:
            raise ShapeError(f"parameter shape {p.shape} vs gradient shape {g.shape}")
        if config.weight_decay:
            g = g + config.weight_decay * p
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        p -= config.learning_rate * (m / c1) / (np.sqrt(v / c2) + config.eps)


def make_state(config):
    """Fresh state buffers matching the config type."""
    return AdamState() if isinstance(config, AdamConfig) else SgdState()


def apply_step(params, grads, config, state):
    """Route one update to the rule matching the config type."""
    if isinstance(config, AdamConfig):
        adam_step(params, grads, config, state)
    else:
        sgd_step(params, grads, config, state)
