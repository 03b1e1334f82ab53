"""Query-efficient black-box adversarial attacks by mimicking the target
model with an iteratively distilled white-box student, plus reference
black-box baselines (NES, ZOO, Square) and an evaluation harness.

Class labels are 1-based ints across the whole public API.
"""

from .attack import AttackTrace, MmaConfig, run_mmattack, transfer_check
from .backend import ACTIVE_BACKEND
from .baselines import (AttackResult, NesConfig, SquareConfig, ZooConfig,
                        nes_attack, square_attack, zoo_attack)
from .datasets import (LabeledDataset, SoftLabeledDataset, gen_gaussian_blobs,
                       gen_ring_classes, load_csv, save_csv, split)
from .diagnostics import TheoremDiagnostics, compute_diagnostics, estimate_beta
from .distill import (DistillationConfig, DistillationState, MatchOutcome,
                      MatchReport, build_student_dataset, check_perfect_match,
                      train_student)
from .errors import (BudgetExhaustedError, ConfigError, DatasetError,
                     GraphStateError, MmaError, OracleAccessError, ShapeError)
from .losses import (cross_entropy, kl_divergence, margin, soft_cross_entropy,
                     softmax)
from .metrics import (MetricsReport, TargetRow, build_report, compute_aqn,
                      compute_asr)
from .models import (LayerSpec, NeuralClassifier, build_from_spec, build_mlp,
                     build_small_cnn_analog)
from .optim import (AdamConfig, AdamState, SgdConfig, SgdState, adam_step,
                    apply_step, make_state, sgd_step)
from .oracle import BlackBoxOracle, QueryLedger
from .pgd import Candidate, PgdConfig, generate_candidate_batch, pgd_attack, project_ball

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "AdamConfig",
    "AdamState",
    "AttackResult",
    "AttackTrace",
    "BlackBoxOracle",
    "BudgetExhaustedError",
    "Candidate",
    "ConfigError",
    "DatasetError",
    "DistillationConfig",
    "DistillationState",
    "GraphStateError",
    "LabeledDataset",
    "LayerSpec",
    "MatchOutcome",
    "MatchReport",
    "MetricsReport",
    "MmaConfig",
    "MmaError",
    "NesConfig",
    "NeuralClassifier",
    "OracleAccessError",
    "PgdConfig",
    "QueryLedger",
    "SgdConfig",
    "SgdState",
    "ShapeError",
    "SoftLabeledDataset",
    "SquareConfig",
    "TargetRow",
    "TheoremDiagnostics",
    "ZooConfig",
    "build_from_spec",
    "build_mlp",
    "build_report",
    "build_small_cnn_analog",
    "build_student_dataset",
    "check_perfect_match",
    "compute_aqn",
    "compute_asr",
    "compute_diagnostics",
    "cross_entropy",
    "estimate_beta",
    "gen_gaussian_blobs",
    "gen_ring_classes",
    "generate_candidate_batch",
    "kl_divergence",
    "load_csv",
    "margin",
    "nes_attack",
    "pgd_attack",
    "project_ball",
    "run_mmattack",
    "save_csv",
    "adam_step",
    "apply_step",
    "make_state",
    "sgd_step",
    "soft_cross_entropy",
    "softmax",
    "split",
    "square_attack",
    "train_student",
    "transfer_check",
    "zoo_attack",
]
