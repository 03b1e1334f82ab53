"""Student distillation against oracle-labeled datasets.

The trainer runs SGD until the student matches the teacher on every
dataset point, in two senses at once: identical argmax class, and soft
labels within epsilon/4 in the sup norm. The stopping predicate is
evaluated before each step, so a student that already matches trains for
zero epochs; check_perfect_match and the trainer share the predicate code.
"""

from dataclasses import dataclass, field

import numpy as np

from .datasets import SoftLabeledDataset
from .errors import ConfigError
from .losses import soft_ce_loss_and_grad, softmax, weighted_kd_loss_and_grad
from .models import NeuralClassifier
from .optim import AdamConfig, SgdConfig, apply_step, make_state

LOSS_MODES = ("soft_cross_entropy", "weighted_kd")


@dataclass
class DistillationConfig:
    epsilon: float = 0.1
    max_epochs: int = 2000
    optimizer: SgdConfig | AdamConfig = field(default_factory=lambda: SgdConfig(0.5, momentum=0.9))
    loss_mode: str = "soft_cross_entropy"
    kd_alpha: float = 0.5
    kd_temperature: float = 1.0
    batch_size: int = 64
    full_batch_limit: int = 512
    restarts: int = 2  # fresh-init retries when the epoch cap binds

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be non-negative, got {self.max_epochs}")
        if self.loss_mode not in LOSS_MODES:
            raise ConfigError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.batch_size < 1 or self.full_batch_limit < 1:
            raise ConfigError("batch_size and full_batch_limit must be positive")
        if self.restarts < 0:
            raise ConfigError(f"restarts must be non-negative, got {self.restarts}")


@dataclass
class MatchReport:
    """Per-sample match state of a student against its dataset."""

    argmax_match: np.ndarray  # (n,) bool
    sup_gaps: np.ndarray  # (n,) float, max_k |S_k - T_k|
    passed: bool
    worst_gap: float


@dataclass
class MatchOutcome:
    status: str  # "matched" | "epoch_capped"
    epochs_run: int
    worst_gap: float
    attempts: int = 1

    @property
    def matched(self) -> bool:
        return self.status == "matched"


@dataclass
class DistillationState:
    """Student plus its growing dataset, carried across attack iterations."""

    dataset: SoftLabeledDataset
    student: NeuralClassifier
    iteration: int = 1
    last_outcome: MatchOutcome | None = None


def _report(student_probs, soft_labels, epsilon) -> MatchReport:
    argmax_match = student_probs.argmax(axis=1) == soft_labels.argmax(axis=1)
    sup_gaps = np.abs(student_probs - soft_labels).max(axis=1)
    passed = bool(argmax_match.all() and (sup_gaps < epsilon / 4.0).all())
    worst = float(sup_gaps.max()) if sup_gaps.size else 0.0
    return MatchReport(argmax_match, sup_gaps, passed, worst)


def check_perfect_match(student: NeuralClassifier, dataset: SoftLabeledDataset,
                        epsilon: float) -> MatchReport:
    """Argmax agreement and sup-norm gap < epsilon/4, on every point."""
    if len(dataset) == 0:
        raise ConfigError("cannot check a match against an empty dataset")
    return _report(student.predict_proba(dataset.features), dataset.soft_labels, epsilon)


def build_student_dataset(oracle, points) -> SoftLabeledDataset:
    """Label every point through the oracle's setup phase."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim < 2 or points.shape[0] == 0:
        raise ConfigError("need a non-empty (n, ...) array of points")
    ds = SoftLabeledDataset(tuple(points.shape[1:]), oracle.n_classes)
    for p in points:
        ds.add(p, oracle.query(p, phase="setup"))
    return ds


def _loss_grad(logits, targets, config):
    if config.loss_mode == "weighted_kd":
        return weighted_kd_loss_and_grad(logits, targets, config.kd_alpha, config.kd_temperature)
    return soft_ce_loss_and_grad(logits, targets)


def train_student(state: DistillationState, config: DistillationConfig) -> MatchOutcome:
    """Train state.student in place until it perfectly matches state.dataset.

    Warm start: training continues from the student's current weights.
    Full-batch SGD up to full_batch_limit samples, sequential mini-batches
    beyond that. When the epoch cap binds, up to config.restarts fresh
    initializations are tried (small students can wedge on a bad basin near
    a steep teacher boundary); if every attempt caps, the one with the
    smallest worst gap is kept and the outcome reports "epoch_capped".
    """
    outcome = _train_once(state, config)
    best = (outcome.worst_gap, state.student, outcome)
    attempt = 0
    while not outcome.matched and attempt < config.restarts:
        attempt += 1
        seed = int(np.random.SeedSequence(
            [state.student.seed & 0xFFFFFFFF, state.iteration, attempt]
        ).generate_state(1)[0])
        state.student = NeuralClassifier(state.student.arch, state.student.input_shape,
                                         state.student.n_classes, seed)
        outcome = _train_once(state, config)
        if outcome.worst_gap < best[0]:
            best = (outcome.worst_gap, state.student, outcome)
    if not outcome.matched:
        _, state.student, outcome = best
    outcome.attempts = attempt + 1
    state.last_outcome = outcome
    return outcome


def _train_once(state: DistillationState, config: DistillationConfig) -> MatchOutcome:
    if len(state.dataset) == 0:
        raise ConfigError("cannot distill from an empty dataset")
    features = state.dataset.features
    targets = state.dataset.soft_labels
    chain = state.student.chain
    opt_state = make_state(config.optimizer)
    full_batch = len(state.dataset) <= config.full_batch_limit
    report = None
    for epoch in range(config.max_epochs + 1):
        if full_batch:
            logits = chain.forward(features)
            report = _report(softmax(logits), targets, config.epsilon)
            if report.passed or epoch == config.max_epochs:
                break
            _, dlogits = _loss_grad(logits, targets, config)
            chain.zero_grads()
            chain.backward(dlogits)
            apply_step(chain.parameters(), chain.gradients(), config.optimizer, opt_state)
        else:
            report = _report(state.student.predict_proba(features), targets, config.epsilon)
            if report.passed or epoch == config.max_epochs:
                break
            for start in range(0, len(state.dataset), config.batch_size):
                sl = slice(start, start + config.batch_size)
                logits = chain.forward(features[sl])
                _, dlogits = _loss_grad(logits, targets[sl], config)
                chain.zero_grads()
                chain.backward(dlogits)
                apply_step(chain.parameters(), chain.gradients(), config.optimizer, opt_state)
    status = "matched" if report.passed else "epoch_capped"
    return MatchOutcome(status, epochs_run=epoch, worst_gap=report.worst_gap)
