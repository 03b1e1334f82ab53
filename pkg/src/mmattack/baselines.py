"""Reference query-based black-box attacks: NES, ZOO-style coordinate
estimation, and Square attack.

All three touch the teacher only through the oracle and assume the caller
already established hard_label(oracle, x) == y (so x sits in the oracle
cache and re-checks of the unmoved iterate are free). Loss conventions:
NES and ZOO maximize the cross-entropy of the oracle's probabilities
against the true class; Square minimizes the margin p_y - max_other.

Query accounting, per attack:
  - NES: num_samples loss probes per iteration plus one success check of
    the moved iterate; a constant teacher never moves the iterate, so the
    checks stay cached and the total is exactly num_iterations*num_samples.
  - ZOO: exactly 2 probe queries per coordinate visit. The probes are
    projected into the ball, so they double as the success check (a probe
    that comes back misclassified is itself a valid adversarial point);
    one final verification of the iterate is spent when the cap is hit.
  - Square: one query per proposal, at most num_queries + 1 in total.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .losses import cross_entropy, margin
from .pgd import project_ball


@dataclass
class NesConfig:
    epsilon: float = 0.1
    num_samples: int = 50
    num_iterations: int = 300
    sigma: float = 0.01
    alpha: float = 0.03

    def __post_init__(self):
        if min(self.epsilon, self.sigma, self.alpha) <= 0.0:
            raise ConfigError("epsilon, sigma and alpha must be positive")
        if self.num_samples < 2 or self.num_samples % 2 != 0:
            raise ConfigError(f"num_samples must be even and >= 2, got {self.num_samples}")
        if self.num_iterations < 1:
            raise ConfigError("num_iterations must be positive")


@dataclass
class ZooConfig:
    epsilon: float = 0.05
    num_iterations: int = 5000
    learning_rate: float = 0.01
    fd_step: float = 1e-3

    def __post_init__(self):
        if min(self.epsilon, self.learning_rate, self.fd_step) <= 0.0:
            raise ConfigError("epsilon, learning_rate and fd_step must be positive")
        if self.num_iterations < 1:
            raise ConfigError("num_iterations must be positive")


@dataclass
class SquareConfig:
    epsilon: float = 0.1
    num_queries: int = 5000
    p_init: float = 0.8

    def __post_init__(self):
        if self.epsilon <= 0.0 or self.num_queries < 1:
            raise ConfigError("epsilon and num_queries must be positive")
        if not 0.0 < self.p_init <= 1.0:
            raise ConfigError(f"p_init must be in (0, 1], got {self.p_init}")


@dataclass
class AttackResult:
    success: bool
    adversarial_point: np.ndarray | None
    queries_spent: int
    iterations: int


def _confirm(oracle, point, y) -> bool:
    # free re-verification: the point was just queried, so this hits the cache
    return oracle.hard_label(point) != y


def nes_attack(oracle, x, y, config: NesConfig, seed=0) -> AttackResult:
    """Natural-evolution-strategies gradient estimate with sign steps."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=np.float64)
    start = oracle.query_count
    xt = x.copy()
    half = config.num_samples // 2
    for it in range(1, config.num_iterations + 1):
        grad = np.zeros_like(xt)
        for _ in range(half):
            u = rng.standard_normal(x.shape)
            lp = cross_entropy(oracle.query(xt + config.sigma * u), y)
            lm = cross_entropy(oracle.query(xt - config.sigma * u), y)
            grad += (lp - lm) * u
        grad /= config.sigma * config.num_samples
        xt = project_ball(xt + config.alpha * np.sign(grad), x, config.epsilon, "linf")
        if oracle.hard_label(xt) != y and _confirm(oracle, xt, y):
            return AttackResult(True, xt, oracle.query_count - start, it)
    return AttackResult(False, None, oracle.query_count - start, config.num_iterations)


def zoo_estimate_partial(oracle, x, anchor, y, j, fd_step, epsilon):
    """Symmetric-difference estimate of d loss / d x_j, probing inside the
    epsilon-ball around anchor. Returns (estimate, probe results)."""
    hi = x.copy()
    hi[j] += fd_step
    lo = x.copy()
    lo[j] -= fd_step
    hi = project_ball(hi, anchor, epsilon, "linf")
    lo = project_ball(lo, anchor, epsilon, "linf")
    p_hi = oracle.query(hi)
    p_lo = oracle.query(lo)
    width = hi[j] - lo[j]
    if width == 0.0:
        return 0.0, (hi, p_hi), (lo, p_lo)
    est = (cross_entropy(p_hi, y) - cross_entropy(p_lo, y)) / width
    return est, (hi, p_hi), (lo, p_lo)


def zoo_attack(oracle, x, y, config: ZooConfig, seed=0) -> AttackResult:
    """Coordinate-wise finite differences, ascending order, full cycles."""
    x = np.asarray(x, dtype=np.float64)
    start = oracle.query_count
    xt = x.copy()
    d = xt.size
    flat = xt.reshape(-1)
    for it in range(1, config.num_iterations + 1):
        j = (it - 1) % d
        est, (hi, p_hi), (lo, p_lo) = zoo_estimate_partial(
            oracle, flat, x.reshape(-1), y, j, config.fd_step, config.epsilon
        )
        for pt, probs in ((hi, p_hi), (lo, p_lo)):
            if int(np.argmax(probs) + 1) != y and _confirm(oracle, pt, y):
                return AttackResult(True, pt.reshape(x.shape),
                                    oracle.query_count - start, it)
        flat[j] += config.learning_rate * est
        flat = project_ball(flat, x.reshape(-1), config.epsilon, "linf").reshape(-1)
    xt = flat.reshape(x.shape)
    if oracle.hard_label(xt) != y and _confirm(oracle, xt, y):
        return AttackResult(True, xt, oracle.query_count - start, config.num_iterations)
    return AttackResult(False, None, oracle.query_count - start, config.num_iterations)


def _square_schedule(p_init, spent, num_queries):
    # simplified two-stage window schedule: halve p after half the budget
    return p_init if spent < num_queries // 2 else p_init / 2.0


def square_attack(oracle, x, y, config: SquareConfig, seed=0) -> AttackResult:
    """Random-search over contiguous windows of +-epsilon perturbations."""
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=np.float64)
    flat0 = x.reshape(-1)
    d = flat0.size
    start = oracle.query_count

    def spent():
        return oracle.query_count - start

    stripes = rng.choice((-config.epsilon, config.epsilon), size=d)
    best = np.clip(flat0 + stripes, 0.0, 1.0)
    probs = oracle.query(best.reshape(x.shape))
    if int(np.argmax(probs) + 1) != y and _confirm(oracle, best.reshape(x.shape), y):
        return AttackResult(True, best.reshape(x.shape), spent(), 0)
    best_loss = margin(probs, y)
    proposals = 0
    # the proposal bound keeps tiny inputs from spinning once every
    # distinct window pattern sits in the cache and spent() stops moving
    while spent() < config.num_queries and proposals < config.num_queries:
        p = _square_schedule(config.p_init, spent(), config.num_queries)
        side = max(1, int(round(p * d)))
        lo = int(rng.integers(0, d - side + 1))
        cand = best.copy()
        cand[lo : lo + side] = flat0[lo : lo + side] + rng.choice(
            (-config.epsilon, config.epsilon), size=side
        )
        cand = np.clip(cand, 0.0, 1.0)
        probs = oracle.query(cand.reshape(x.shape))
        proposals += 1
        loss = margin(probs, y)
        if int(np.argmax(probs) + 1) != y and _confirm(oracle, cand.reshape(x.shape), y):
            return AttackResult(True, cand.reshape(x.shape), spent(), proposals)
        if loss < best_loss:
            best, best_loss = cand, loss
    return AttackResult(False, None, spent(), proposals)
