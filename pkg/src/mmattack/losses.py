"""Classification losses over probability vectors and logits.

Class labels are 1-based everywhere in the public API. Probabilities are
floored at PROB_FLOOR before any log so the losses stay finite.
"""

import numpy as np

from .errors import ConfigError, ShapeError

PROB_FLOOR = 1e-12


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise (or single-vector) shift-stabilized softmax."""
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, target_class: int) -> float:
    """-log p[target_class] with a 1-based target class."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise ShapeError(f"cross_entropy expects a probability vector, got shape {probs.shape}")
    if not 1 <= target_class <= probs.shape[0]:
        raise ConfigError(
            f"target class {target_class} out of range 1..{probs.shape[0]}"
        )
    return float(-np.log(max(probs[target_class - 1], PROB_FLOOR)))


def soft_cross_entropy(probs: np.ndarray, target: np.ndarray) -> float:
    """-sum_k target_k log probs_k for a soft target distribution."""
    probs = np.asarray(probs, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if probs.shape != target.shape or probs.ndim != 1:
        raise ShapeError(
            f"soft_cross_entropy: mismatched shapes {probs.shape} vs {target.shape}"
        )
    return float(-(target * np.log(np.maximum(probs, PROB_FLOOR))).sum())


def kl_divergence(teacher: np.ndarray, student: np.ndarray) -> float:
    """KL(teacher || student); terms with teacher_k == 0 contribute zero."""
    teacher = np.asarray(teacher, dtype=np.float64)
    student = np.asarray(student, dtype=np.float64)
    if teacher.shape != student.shape or teacher.ndim != 1:
        raise ShapeError(
            f"kl_divergence: mismatched shapes {teacher.shape} vs {student.shape}"
        )
    mask = teacher > 0.0
    t = teacher[mask]
    s = np.maximum(student[mask], PROB_FLOOR)
    return max(float((t * np.log(t / s)).sum()), 0.0)


def margin(probs: np.ndarray, target_class: int) -> float:
    """p[target] - max over the other classes (positive iff target wins)."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 1 <= target_class <= probs.shape[0]:
        raise ConfigError(f"target class {target_class} out of range 1..{probs.shape[0]}")
    rest = np.delete(probs, target_class - 1)
    return float(probs[target_class - 1] - rest.max())


def onehot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """(n,) 1-based labels to an (n, n_classes) one-hot matrix."""
    labels = np.asarray(labels)
    if labels.min() < 1 or labels.max() > n_classes:
        raise ConfigError("labels must be 1-based and within n_classes")
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels - 1] = 1.0
    return out


def soft_ce_loss_and_grad(logits: np.ndarray, targets: np.ndarray):
    """Batch-mean soft cross-entropy on logits; returns (loss, dlogits)."""
    if logits.shape != targets.shape:
        raise ShapeError(f"logits {logits.shape} vs targets {targets.shape}")
    p = softmax(logits)
    n = logits.shape[0]
    loss = float(-(targets * np.log(np.maximum(p, PROB_FLOOR))).sum() / n)
    return loss, (p - targets) / n


def _sharpen(probs: np.ndarray, temperature: float) -> np.ndarray:
    # temperature applied to a distribution (not logits): p^(1/T) renormalized
    q = np.maximum(probs, PROB_FLOOR) ** (1.0 / temperature)
    return q / q.sum(axis=-1, keepdims=True)


def weighted_kd_loss_and_grad(logits: np.ndarray, targets: np.ndarray,
                              alpha: float, temperature: float):
    """alpha * CE(student, argmax target) + (1-alpha) * T^2 * KL(target_T || student_T).

    The hard label is the argmax of each soft target row. Returns
    (batch-mean loss, dlogits).
    """
    if logits.shape != targets.shape:
        raise ShapeError(f"logits {logits.shape} vs targets {targets.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {alpha}")
    if temperature <= 0.0:
        raise ConfigError(f"temperature must be positive, got {temperature}")
    n, k = logits.shape
    p = softmax(logits)
    hard = np.zeros_like(targets)
    hard[np.arange(n), targets.argmax(axis=1)] = 1.0
    ce = -(hard * np.log(np.maximum(p, PROB_FLOOR))).sum() / n
    p_t = softmax(logits / temperature)
    t_t = _sharpen(targets, temperature)
    kl = (t_t * (np.log(t_t) - np.log(np.maximum(p_t, PROB_FLOOR)))).sum() / n
    loss = float(alpha * ce + (1.0 - alpha) * temperature**2 * kl)
    dlogits = (alpha * (p - hard) + (1.0 - alpha) * temperature * (p_t - t_t)) / n
    return loss, dlogits
