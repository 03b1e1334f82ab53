"""Projected gradient ascent on a white-box student.

Iterates x <- Proj_ball(x + step * sign(grad)) where grad is the input
gradient of the cross-entropy toward the true class, the ball is an
l-inf (default) or l2 neighborhood of the anchor point, and every
iterate is clipped back to the unit box after projection. The anchor
lives in the box, so projection-then-clip lands inside both sets.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

BALL_NORMS = ("linf", "l2")


@dataclass
class PgdConfig:
    delta: float = 0.05  # ball radius
    step: float = 0.005  # alpha
    steps: int = 10
    ball_norm: str = "linf"
    random_start: bool = False

    def __post_init__(self):
        if self.delta <= 0.0 or self.step <= 0.0:
            raise ConfigError("delta and step must be positive")
        if self.steps < 1:
            raise ConfigError(f"steps must be at least 1, got {self.steps}")
        if self.ball_norm not in BALL_NORMS:
            raise ConfigError(f"ball_norm must be one of {BALL_NORMS}, got {self.ball_norm!r}")


@dataclass
class Candidate:
    """One PGD output: final point, its student class, per-step losses."""

    point: np.ndarray
    student_class: int
    loss_trajectory: list = field(default_factory=list)


def project_ball(point, anchor, delta, ball_norm="linf"):
    """Nearest point to `point` inside the delta-ball around `anchor`,
    then clipped to [0, 1]; exact for both supported norms."""
    if ball_norm not in BALL_NORMS:
        raise ConfigError(f"ball_norm must be one of {BALL_NORMS}, got {ball_norm!r}")
    point = np.asarray(point, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    if point.shape != anchor.shape:
        raise ConfigError(f"point shape {point.shape} != anchor shape {anchor.shape}")
    if ball_norm == "linf":
        out = np.clip(point, anchor - delta, anchor + delta)
    else:
        diff = point - anchor
        norm = float(np.sqrt((diff * diff).sum()))
        out = anchor + diff * (delta / norm) if norm > delta else point.copy()
    return np.clip(out, 0.0, 1.0)


def sample_ball(anchor, delta, ball_norm, n, rng):
    """n points uniform in the delta-ball around anchor, box-clipped; the
    first m rows for a given generator state are independent of n."""
    anchor = np.asarray(anchor, dtype=np.float64)
    d = anchor.size
    if ball_norm == "linf":
        pts = anchor.reshape(-1) + rng.uniform(-delta, delta, size=(n, d))
    else:
        s1, s2 = rng.spawn(2)
        g = s1.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = delta * s2.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / d)
        pts = anchor.reshape(-1) + g * r
    return np.clip(pts, 0.0, 1.0).reshape((n,) + anchor.shape)


def pgd_attack(student, x, y, config: PgdConfig, rng=None) -> Candidate:
    """Maximize the student's loss at class y inside the ball around x.

    The caller guarantees classify(student, x) == y. With random_start the
    first iterate is drawn from the ball (needs rng), otherwise it is x.
    """
    x = np.asarray(x, dtype=np.float64)
    if config.random_start:
        if rng is None:
            raise ConfigError("random_start needs a generator")
        xt = sample_ball(x, config.delta, config.ball_norm, 1, rng)[0]
    else:
        xt = x.copy()
    traj = []
    for _ in range(config.steps):
        loss, grad = student.input_gradient(xt, y)
        traj.append(loss)
        xt = project_ball(xt + config.step * np.sign(grad), x, config.delta, config.ball_norm)
    probs = student.predict_proba(xt)
    traj.append(float(-np.log(max(probs[y - 1], 1e-12))))
    return Candidate(xt, int(np.argmax(probs) + 1), traj)


def generate_candidate_batch(student, x, y, config: PgdConfig, count, seed) -> list:
    """count PGD candidates; deterministic in seed, bit-distinct points.

    The first run starts at x unless random_start is set; later runs use
    random starts so the batch explores the ball. Duplicate end points are
    retried a few times and dropped if they persist, so the batch can come
    up short on degenerate landscapes (e.g. zero gradient everywhere).
    """
    if count < 1:
        raise ConfigError(f"count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    out, seen = [], set()
    for i in range(count):
        retries = 3
        while True:
            use_random = config.random_start or i > 0
            cand = pgd_attack(
                student, x, y,
                PgdConfig(config.delta, config.step, config.steps, config.ball_norm, use_random),
                rng,
            )
            key = cand.point.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(cand)
                break
            retries -= 1
            if retries == 0:
                break
    return out
