"""The mimic attack loop.

Each iteration trains the student until it perfectly matches the oracle
dataset, runs a batch of PGD attacks on the student, and sends every
candidate that fools the student to the oracle for a transfer check (one
attack-phase query each). Checked candidates join the dataset with their
oracle labels whether or not they transferred, so the student's dataset
grows along the attacked direction. A strict transfer means teacher and
student assign the candidate the same wrong class; a weak one means the
teacher is fooled into some other class.

Candidates that do not fool the student are not sent to the oracle and
not added to the dataset (no query is worth spending on them); a
diagnostic-mode flag can add them with free glass-box labels instead.
"""

from dataclasses import dataclass, field

import numpy as np

from .datasets import SoftLabeledDataset
from .distill import DistillationConfig, DistillationState, train_student
from .errors import BudgetExhaustedError, ConfigError
from .models import build_from_spec
from .pgd import PgdConfig, generate_candidate_batch

MODES = ("first_hit", "full_run")


@dataclass
class MmaConfig:
    student: dict = field(default_factory=lambda: {"kind": "mlp", "widths": [2, 8]})
    max_iterations: int = 20
    candidates_per_iter: int = 10
    initial_dataset_size: int = 10
    mode: str = "first_hit"
    seed: int = 0
    distill: DistillationConfig = field(default_factory=DistillationConfig)
    pgd: PgdConfig = field(default_factory=PgdConfig)
    cold_start: bool = False
    add_non_fooling: bool = False  # diagnostic-mode oracles only

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be positive, got {self.max_iterations}")
        if self.candidates_per_iter < 1:
            raise ConfigError(f"candidates_per_iter must be positive, got {self.candidates_per_iter}")
        if self.initial_dataset_size < 1:
            raise ConfigError(f"initial_dataset_size must be positive, got {self.initial_dataset_size}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")

    def to_dict(self) -> dict:
        d = {
            "student": dict(self.student),
            "max_iterations": self.max_iterations,
            "candidates_per_iter": self.candidates_per_iter,
            "initial_dataset_size": self.initial_dataset_size,
            "mode": self.mode,
            "seed": self.seed,
            "cold_start": self.cold_start,
            "add_non_fooling": self.add_non_fooling,
            "epsilon": self.distill.epsilon,
            "delta": self.pgd.delta,
            "ball_norm": self.pgd.ball_norm,
        }
        return d


@dataclass
class CandidateRecord:
    point: list
    student_class: int
    checked: bool  # False when the candidate did not fool the student
    teacher_class: int | None = None
    strict_transfer: bool | None = None
    weak_success: bool | None = None
    gap_inf: float | None = None  # max_k |S_k - T_k| at the candidate
    margin: float | None = None  # (p1 - p2) / 2 of the student at the candidate

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class IterationRecord:
    iteration: int
    dataset_size: int
    match_status: str
    epochs_run: int
    worst_gap: float
    candidates: list
    setup_queries: int
    attack_queries: int

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["candidates"] = [c.to_dict() for c in self.candidates]
        return d


@dataclass
class FoundExample:
    point: list
    adversarial_class: int  # shared by student and teacher (strict transfer)
    iteration: int
    gap_inf: float
    margin: float
    query_count_total: int  # ledger total when this example was confirmed
    query_count_attack: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class AttackTrace:
    config: dict
    target: list
    target_class: int
    iterations: list = field(default_factory=list)
    found: list = field(default_factory=list)
    n_weak_successes: int = 0
    n_transfer_checks: int = 0
    truncated: bool = False
    success: bool = False
    perfect_match_held: bool = True
    ledger: dict = field(default_factory=dict)
    final_student = None  # set by run_mmattack; not serialized

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "target": self.target,
            "target_class": self.target_class,
            "iterations": [it.to_dict() for it in self.iterations],
            "found": [f.to_dict() for f in self.found],
            "n_weak_successes": self.n_weak_successes,
            "n_transfer_checks": self.n_transfer_checks,
            "truncated": self.truncated,
            "success": self.success,
            "perfect_match_held": self.perfect_match_held,
            "ledger": self.ledger,
        }


def transfer_check(oracle, candidate, y) -> bool:
    """True iff the teacher assigns candidate.point the student's (wrong)
    class; costs one attack-phase query. The candidate must fool the student."""
    if candidate.student_class == y:
        raise ConfigError("transfer_check needs a candidate that fools the student")
    return oracle.hard_label(candidate.point, phase="attack") == candidate.student_class


def _sample_initial_points(pool, x, m, rng):
    pool = np.asarray(pool, dtype=np.float64)
    if pool.ndim < 2:
        raise ConfigError("candidate pool must be an (n, ...) array")
    x_key = np.ascontiguousarray(x, dtype=np.float64).tobytes()
    seen, rows = {x_key}, []
    for i in range(pool.shape[0]):
        key = np.ascontiguousarray(pool[i]).tobytes()
        if key not in seen:
            seen.add(key)
            rows.append(i)
    if len(rows) < m:
        raise ConfigError(
            f"pool has {len(rows)} usable points but initial_dataset_size={m}"
        )
    chosen = rng.choice(len(rows), size=m, replace=False)
    return pool[[rows[i] for i in chosen]]


def run_mmattack(oracle, x, y, config: MmaConfig, pool) -> AttackTrace:
    """Attack target x (true class y) through the oracle.

    pool supplies the unlabeled points for the initial student dataset;
    the target itself is excluded and m = initial_dataset_size distinct
    points are drawn seeded, so the setup phase costs exactly m+1 queries.
    Returns the trace; the final student stays attached as .final_student.
    On budget exhaustion the trace is returned as-is with truncated=True.
    """
    x = np.asarray(x, dtype=np.float64)
    ss = np.random.SeedSequence(config.seed)
    s_sample, s_student, *s_batches = ss.spawn(2 + config.max_iterations)

    trace = AttackTrace(config=config.to_dict(), target=x.reshape(-1).tolist(), target_class=int(y))
    state = None
    try:
        tx = oracle.query(x, phase="setup")
        if int(np.argmax(tx) + 1) != y:
            raise ConfigError(f"target is not classified as {y} by the oracle")

        initial = _sample_initial_points(pool, x, config.initial_dataset_size,
                                         np.random.default_rng(s_sample))
        dataset = SoftLabeledDataset(tuple(x.shape), oracle.n_classes)
        for p in initial:
            dataset.add(p, oracle.query(p, phase="setup"))
        dataset.add(x, tx)

        student_seed = int(s_student.generate_state(1)[0])
        student = build_from_spec(config.student, oracle.n_classes, student_seed)
        state = DistillationState(dataset, student)

        for i in range(1, config.max_iterations + 1):
            if config.cold_start and i > 1:
                state.student = build_from_spec(config.student, oracle.n_classes,
                                                student_seed + i)
            outcome = train_student(state, config.distill)
            if not outcome.matched:
                trace.perfect_match_held = False
            candidates = generate_candidate_batch(
                state.student, x, y, config.pgd, config.candidates_per_iter, s_batches[i - 1]
            )
            records = []
            hit = None
            for cand in candidates:
                if cand.student_class == y:
                    records.append(CandidateRecord(cand.point.reshape(-1).tolist(),
                                                   cand.student_class, checked=False))
                    if config.add_non_fooling and oracle.diagnostic:
                        dataset.add(cand.point, oracle.glass_box_handle().predict_proba(cand.point))
                    continue
                t_probs = oracle.query(cand.point, phase="attack")
                trace.n_transfer_checks += 1
                teacher_class = int(np.argmax(t_probs) + 1)
                s_probs = state.student.predict_proba(cand.point)
                top2 = np.sort(s_probs)[-2:]
                rec = CandidateRecord(
                    cand.point.reshape(-1).tolist(),
                    cand.student_class,
                    checked=True,
                    teacher_class=teacher_class,
                    strict_transfer=teacher_class == cand.student_class,
                    weak_success=teacher_class not in (y, cand.student_class),
                    gap_inf=float(np.abs(s_probs - t_probs).max()),
                    margin=float((top2[1] - top2[0]) / 2.0),
                )
                records.append(rec)
                dataset.add(cand.point, t_probs)
                if rec.weak_success:
                    trace.n_weak_successes += 1
                if rec.strict_transfer:
                    trace.found.append(FoundExample(
                        rec.point, cand.student_class, i, rec.gap_inf, rec.margin,
                        oracle.ledger.total, oracle.ledger.attack_queries,
                    ))
                    trace.success = True
                    if config.mode == "first_hit":
                        hit = rec
                        break
            trace.iterations.append(IterationRecord(
                i, len(dataset), outcome.status, outcome.epochs_run, outcome.worst_gap,
                records, oracle.ledger.setup_queries, oracle.ledger.attack_queries,
            ))
            if hit is not None:
                break
            state.iteration = i + 1
    except BudgetExhaustedError:
        trace.truncated = True
    trace.ledger = oracle.ledger.to_dict()
    trace.final_student = state.student if state is not None else None
    return trace
