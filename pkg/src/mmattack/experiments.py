"""Experiment drivers: task preparation, multi-target attack runs,
baseline comparison, trade-off and capacity sweeps.

Everything is driven by one JSON config (deep-merged over DEFAULT_CONFIG,
with dotted-path overrides from the CLI). Per (attack, target) cell the
driver builds a fresh oracle, establishes the Def.-1 precondition with a
single setup-phase query of the target, runs the attack, and records one
row. AQN is emitted under both accountings (with and without the setup
phase) since published numbers are ambiguous about the setup cost.
"""

import copy
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .attack import MmaConfig, _sample_initial_points, run_mmattack
from .baselines import (AttackResult, NesConfig, SquareConfig, ZooConfig,
                        nes_attack, square_attack, zoo_attack)
from .datasets import LabeledDataset, SoftLabeledDataset, gen_gaussian_blobs, gen_ring_classes, load_csv, split
from .diagnostics import compute_diagnostics
from .distill import DistillationConfig, DistillationState, train_student
from .errors import BudgetExhaustedError, ConfigError
from .losses import onehot, softmax
from .metrics import TargetRow, build_report
from .models import NeuralClassifier, build_from_spec
from .optim import AdamConfig, SgdConfig, apply_step, make_state
from .oracle import BlackBoxOracle
from .pgd import PgdConfig, generate_candidate_batch

ATTACK_NAMES = ("mmattack", "nes", "zoo", "square")

DEFAULT_CONFIG = {
    "dataset": {
        "kind": "blobs",
        "n_classes": 2,
        "dim": 2,
        "n_per_class": 300,
        "spread": 0.015,
        "seed": 7,
        "centers": [[0.48, 0.50], [0.52, 0.50]],
    },
    "teacher": {
        "kind": "mlp",
        "widths": [2, 32, 32],
        "epochs": 1500,
        "seed": 2,
        "optimizer": {"learning_rate": 0.02, "momentum": 0.9, "weight_decay": 0.0},
        "checkpoint": None,
    },
    "holdout_fraction": 0.5,
    "split_seed": 11,
    "attacks": ["mmattack", "nes", "zoo", "square"],
    "n_targets": 30,
    "seed": 0,
    "query_budget": None,
    "timing": False,
    "mma": {
        "student": {"kind": "mlp", "widths": [2, 8]},
        "max_iterations": 20,
        "candidates_per_iter": 10,
        "initial_dataset_size": 10,
        "mode": "first_hit",
        "cold_start": False,
        "add_non_fooling": False,
        "distill": {
            "epsilon": 0.1,
            "max_epochs": 2000,
            "restarts": 2,
            "loss_mode": "soft_cross_entropy",
            "kd_alpha": 0.5,
            "kd_temperature": 1.0,
            "optimizer": {"kind": "adam", "learning_rate": 0.02},
        },
        "pgd": {"delta": 0.05, "step": 0.005, "steps": 10, "ball_norm": "linf"},
    },
    "nes": {"epsilon": 0.05, "num_samples": 50, "num_iterations": 300,
            "sigma": 0.01, "alpha": 0.03},
    "zoo": {"epsilon": 0.05, "num_iterations": 5000, "learning_rate": 0.01,
            "fd_step": 1e-3},
    "square": {"epsilon": 0.05, "num_queries": 5000, "p_init": 0.8},
    "sweep": {"total_budget": 200, "n_runs": 30},
    "capacity": {
        "n_runs": 30,
        "grid": [
            {"name": "tiny", "student": {"kind": "mlp", "widths": [2, 4]},
             "initial_dataset_size": 5, "candidates_per_iter": 5},
            {"name": "small", "student": {"kind": "mlp", "widths": [2, 8]},
             "initial_dataset_size": 10, "candidates_per_iter": 10},
            {"name": "medium", "student": {"kind": "mlp", "widths": [2, 16, 16]},
             "initial_dataset_size": 40, "candidates_per_iter": 20},
        ],
    },
}


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path=None, overrides=()) -> dict:
    """DEFAULT_CONFIG, deep-merged with the JSON file, then dotted overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        cfg = _deep_merge(cfg, user)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        keys = dotted.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {dotted!r} crosses a non-object key")
        node[keys[-1]] = value
    if cfg.get("n_targets", 0) < 1:
        raise ConfigError("n_targets must be at least 1")
    return cfg


def make_dataset(spec) -> LabeledDataset:
    kind = spec.get("kind", "blobs")
    if kind == "blobs":
        return gen_gaussian_blobs(spec["n_classes"], spec["dim"], spec["n_per_class"],
                                  spec["spread"], spec["seed"], spec.get("centers"))
    if kind == "rings":
        return gen_ring_classes(spec["n_classes"], spec["n_per_class"], spec["seed"])
    if kind == "csv":
        return load_csv(spec["path"])
    raise ConfigError(f"unknown dataset kind {kind!r}")


def _optimizer_from_dict(d):
    """Build an optimizer config from a dict; "kind" picks sgd (default) or adam."""
    d = dict(d)
    kind = d.pop("kind", "sgd")
    if kind == "adam":
        return AdamConfig(**d)
    if kind == "sgd":
        return SgdConfig(**d)
    raise ConfigError(f"unknown optimizer kind {kind!r}")


def train_teacher(dataset: LabeledDataset, spec) -> NeuralClassifier:
    """Hard-label cross-entropy training, full batch."""
    model = build_from_spec(spec, dataset.n_classes, spec.get("seed", 0))
    opt = _optimizer_from_dict(spec.get("optimizer", {"learning_rate": 0.1, "momentum": 0.9,
                                              "weight_decay": 1e-4}))
    targets = onehot(dataset.labels, dataset.n_classes)
    state = make_state(opt)
    chain = model.chain
    for _ in range(spec.get("epochs", 1500)):
        logits = chain.forward(dataset.features)
        dlogits = (softmax(logits) - targets) / len(dataset)
        chain.zero_grads()
        chain.backward(dlogits)
        apply_step(chain.parameters(), chain.gradients(), opt, state)
    return model


def accuracy(model, dataset: LabeledDataset) -> float:
    return float((model.classify(dataset.features) == dataset.labels).mean())


@dataclass
class Task:
    teacher: NeuralClassifier
    train: LabeledDataset
    holdout: LabeledDataset
    teacher_train_acc: float
    teacher_holdout_acc: float

    @property
    def pool(self):
        return self.holdout.features


def prepare_task(cfg) -> Task:
    data = make_dataset(cfg["dataset"])
    train, holdout = split(data, (1.0 - cfg["holdout_fraction"], cfg["holdout_fraction"]),
                           cfg["split_seed"])
    tspec = cfg["teacher"]
    if tspec.get("checkpoint"):
        teacher = NeuralClassifier.load(tspec["checkpoint"])
    else:
        teacher = train_teacher(train, tspec)
    return Task(teacher, train, holdout,
                accuracy(teacher, train), accuracy(teacher, holdout))


def select_targets(teacher, holdout: LabeledDataset, n_targets, seed):
    """(index, x, y) triples the teacher classifies correctly, seeded order.

    Returns (targets, n_excluded) where n_excluded counts misclassified
    points that were skipped along the way.
    """
    order = np.random.default_rng(seed).permutation(len(holdout))
    targets, excluded = [], 0
    for i in order:
        x, y = holdout.features[i], int(holdout.labels[i])
        if teacher.classify(x) == y:
            targets.append((int(i), x, y))
            if len(targets) == n_targets:
                break
        else:
            excluded += 1
    if len(targets) < n_targets:
        raise ConfigError(
            f"only {len(targets)} correctly-classified holdout points, "
            f"need {n_targets}"
        )
    return targets, excluded


def mma_config_from_dict(d, seed) -> MmaConfig:
    dd = d.get("distill", {})
    opt = dd.get("optimizer", {})
    distill = DistillationConfig(
        epsilon=dd.get("epsilon", 0.1),
        max_epochs=dd.get("max_epochs", 2000),
        optimizer=_optimizer_from_dict(opt) if opt else SgdConfig(0.5, momentum=0.9),
        loss_mode=dd.get("loss_mode", "soft_cross_entropy"),
        kd_alpha=dd.get("kd_alpha", 0.5),
        kd_temperature=dd.get("kd_temperature", 1.0),
        restarts=dd.get("restarts", 2),
    )
    pd = d.get("pgd", {})
    pgd = PgdConfig(
        delta=pd.get("delta", 0.05),
        step=pd.get("step", 0.005),
        steps=pd.get("steps", 10),
        ball_norm=pd.get("ball_norm", "linf"),
    )
    return MmaConfig(
        student=d.get("student", {"kind": "mlp", "widths": [2, 8]}),
        max_iterations=d.get("max_iterations", 20),
        candidates_per_iter=d.get("candidates_per_iter", 10),
        initial_dataset_size=d.get("initial_dataset_size", 10),
        mode=d.get("mode", "first_hit"),
        seed=seed,
        distill=distill,
        pgd=pgd,
        cold_start=d.get("cold_start", False),
        add_non_fooling=d.get("add_non_fooling", False),
    )


def _cell_seed(base_seed, attack_name, target_id):
    mix = np.random.SeedSequence([base_seed, ATTACK_NAMES.index(attack_name), target_id])
    return int(mix.generate_state(1)[0])


def run_attack_cell(attack_name, teacher, x, y, cfg, pool, target_id,
                    diagnostic=False):
    """One (attack, target) cell with a fresh oracle; returns (row, trace_dict)."""
    seed = _cell_seed(cfg["seed"], attack_name, target_id)
    oracle = BlackBoxOracle(teacher, budget=cfg.get("query_budget"), diagnostic=diagnostic)
    t0 = time.perf_counter()
    if attack_name == "mmattack":
        mma_cfg = mma_config_from_dict(cfg["mma"], seed)
        trace = run_mmattack(oracle, x, y, mma_cfg, pool)
        if trace.success:
            first = trace.found[0]
            q_attack, iters = first.query_count_attack, first.iteration
        else:
            q_attack, iters = trace.ledger["attack_queries"], len(trace.iterations)
        row = TargetRow(attack_name, target_id, seed, trace.success,
                        trace.ledger["setup_queries"], q_attack, iters)
        trace_dict = trace.to_dict()
        extra = trace
    else:
        oracle.query(x, phase="setup")  # Def.-1 precondition, also seeds the cache
        try:
            if attack_name == "nes":
                result = nes_attack(oracle, x, y, NesConfig(**cfg["nes"]), seed)
            elif attack_name == "zoo":
                result = zoo_attack(oracle, x, y, ZooConfig(**cfg["zoo"]), seed)
            elif attack_name == "square":
                result = square_attack(oracle, x, y, SquareConfig(**cfg["square"]), seed)
            else:
                raise ConfigError(f"unknown attack {attack_name!r}")
        except BudgetExhaustedError as exc:
            result = AttackResult(False, None, exc.attack_queries, 0)
        row = TargetRow(attack_name, target_id, seed, result.success,
                        oracle.ledger.setup_queries, result.queries_spent,
                        result.iterations)
        trace_dict = {
            "attack": attack_name,
            "target": np.asarray(x).reshape(-1).tolist(),
            "target_class": int(y),
            "success": result.success,
            "adversarial_point": None if result.adversarial_point is None
            else np.asarray(result.adversarial_point).reshape(-1).tolist(),
            "ledger": oracle.ledger.to_dict(),
        }
        extra = result
    if cfg.get("timing"):
        row.wall_ms = (time.perf_counter() - t0) * 1000.0
    return row, {"row": row.to_dict(), "trace": trace_dict}, extra


def run_comparison(cfg):
    """Each selected attack on each target; returns (report, trace entries)."""
    task = prepare_task(cfg)
    targets, excluded = select_targets(task.teacher, task.holdout,
                                       cfg["n_targets"], cfg["seed"])
    rows, entries = [], []
    for attack_name in cfg["attacks"]:
        if attack_name not in ATTACK_NAMES:
            raise ConfigError(f"unknown attack {attack_name!r} in config")
        for target_id, x, y in targets:
            row, entry, _ = run_attack_cell(attack_name, task.teacher, x, y,
                                            cfg, task.pool, target_id)
            rows.append(row)
            entries.append(entry)
    meta = {
        "n_targets": cfg["n_targets"],
        "targets_excluded_misclassified": excluded,
        "teacher_train_acc": task.teacher_train_acc,
        "teacher_holdout_acc": task.teacher_holdout_acc,
        "nes_steps": "sign-based l-inf (step rule unspecified upstream)",
        "square_schedule": "simplified two-stage window schedule",
        "seed": cfg["seed"],
    }
    return build_report(rows, meta), entries


def run_diagnose(cfg):
    """MMAttack per target with a diagnostic-mode oracle; returns
    (rows, diagnostics dicts)."""
    task = prepare_task(cfg)
    targets, _ = select_targets(task.teacher, task.holdout, cfg["n_targets"], cfg["seed"])
    rows, diags = [], []
    for target_id, x, y in targets:
        row, entry, trace = run_attack_cell("mmattack", task.teacher, x, y,
                                            cfg, task.pool, target_id, diagnostic=True)
        rows.append(row)
        if trace.final_student is None:  # truncated before any student existed
            diags.append({"row": row.to_dict(), "diagnostics": None})
            continue
        oracle = BlackBoxOracle(task.teacher, diagnostic=True)
        mma_cfg = mma_config_from_dict(cfg["mma"], row.seed)
        d = compute_diagnostics(oracle, trace.final_student, x, mma_cfg, trace,
                                seed=row.seed)
        diags.append({"row": row.to_dict(), "diagnostics": d.to_dict()})
    return rows, diags


# -- trade-off sweep ---------------------------------------------------------

def _sweep_single_run(teacher, x, y, cfg, pool, total_budget, run_seed):
    """One full-run sweep: per iteration i the student trains on the points
    bought so far (qn1 = m + (i-1)*l) and the remaining budget qn2 =
    total - qn1 is spent on transfer checks; the first l checked candidates
    are kept to grow the dataset (their labels are already paid for)."""
    mma = cfg["mma"]
    m, l = mma["initial_dataset_size"], mma["candidates_per_iter"]
    mma_cfg = mma_config_from_dict(mma, run_seed)
    oracle = BlackBoxOracle(teacher)
    ss = np.random.SeedSequence(run_seed)
    s_sample, *s_batches = ss.spawn(1 + mma_cfg.max_iterations)

    x = np.asarray(x, dtype=np.float64)
    tx = oracle.query(x, phase="setup")
    initial = _sample_initial_points(pool, x, m, np.random.default_rng(s_sample))
    dataset = SoftLabeledDataset(tuple(x.shape), oracle.n_classes)
    for p in initial:
        dataset.add(p, oracle.query(p, phase="setup"))
    dataset.add(x, tx)
    student = build_from_spec(mma_cfg.student, oracle.n_classes, run_seed % (2**31))
    state = DistillationState(dataset, student)

    random_pgd = PgdConfig(mma_cfg.pgd.delta, mma_cfg.pgd.step, mma_cfg.pgd.steps,
                           mma_cfg.pgd.ball_norm, random_start=True)
    rows = []
    for i in range(1, mma_cfg.max_iterations + 1):
        qn1 = m + (i - 1) * l
        qn2 = total_budget - qn1
        if qn2 < 1:
            break
        train_student(state, mma_cfg.distill)
        checks = successes = 0
        kept = []
        seen = set()
        stall = 0
        sub_rng = np.random.default_rng(s_batches[i - 1])
        while checks < qn2 and stall < 50:
            batch = generate_candidate_batch(state.student, x, y, random_pgd, l,
                                             sub_rng.integers(2**63))
            progressed = False
            for cand in batch:
                if checks >= qn2:
                    break
                if cand.student_class == y:
                    continue
                key = cand.point.tobytes()
                if key in seen:
                    continue
                seen.add(key)
                progressed = True
                t_probs = oracle.query(cand.point, phase="attack")
                checks += 1
                if int(np.argmax(t_probs) + 1) == cand.student_class:
                    successes += 1
                if len(kept) < l:
                    kept.append((cand.point, t_probs))
            stall = 0 if progressed else stall + 1
        rows.append({
            "iteration": i,
            "qn1": qn1,
            "qn2": qn2,
            "generated": successes,
            "checks": checks,
            "asr": successes / checks if checks else 0.0,
            "aqn": (qn1 + checks) / successes if successes else None,
        })
        for p, t in kept:
            dataset.add(p, t)
    return rows


def run_tradeoff_sweep(cfg, total_budget=None, n_runs=None):
    """Average _sweep_single_run rows over n_runs (target, seed) cells."""
    sweep_cfg = cfg.get("sweep", {})
    total_budget = total_budget or sweep_cfg.get("total_budget", 200)
    n_runs = n_runs or sweep_cfg.get("n_runs", 30)
    if total_budget < 2:
        raise ConfigError(f"total budget must be at least 2, got {total_budget}")
    task = prepare_task(cfg)
    targets, _ = select_targets(task.teacher, task.holdout,
                                min(cfg["n_targets"], len(task.holdout)), cfg["seed"])
    per_iter = {}
    for r in range(n_runs):
        target_id, x, y = targets[r % len(targets)]
        run_seed = int(np.random.SeedSequence([cfg["seed"], 7001, r]).generate_state(1)[0])
        for row in _sweep_single_run(task.teacher, x, y, cfg, task.pool,
                                     total_budget, run_seed):
            per_iter.setdefault(row["iteration"], []).append(row)
    out = []
    for i in sorted(per_iter):
        group = per_iter[i]
        aqns = [g["aqn"] for g in group if g["aqn"] is not None]
        out.append({
            "iteration": i,
            "qn1": group[0]["qn1"],
            "qn2": group[0]["qn2"],
            "generated": float(np.mean([g["generated"] for g in group])),
            "asr": float(np.mean([g["asr"] for g in group])),
            "aqn": float(np.mean(aqns)) if aqns else None,
        })
    return out


def run_capacity_sweep(cfg, n_runs=None):
    """First-hit MMAttack AQN/ASR per student capacity, fixed teacher."""
    cap_cfg = cfg.get("capacity", DEFAULT_CONFIG["capacity"])
    n_runs = n_runs or cap_cfg.get("n_runs", 30)
    task = prepare_task(cfg)
    targets, _ = select_targets(task.teacher, task.holdout,
                                min(cfg["n_targets"], len(task.holdout)), cfg["seed"])
    out = []
    for entry in cap_cfg["grid"]:
        sub = copy.deepcopy(cfg)
        sub["mma"] = _deep_merge(cfg["mma"], {
            "student": entry["student"],
            "initial_dataset_size": entry["initial_dataset_size"],
            "candidates_per_iter": entry["candidates_per_iter"],
        })
        rows = []
        for r in range(n_runs):
            target_id, x, y = targets[r % len(targets)]
            sub_run = copy.deepcopy(sub)
            sub_run["seed"] = int(np.random.SeedSequence([cfg["seed"], 9001, r]).generate_state(1)[0]) % (2**31)
            row, _, _ = run_attack_cell("mmattack", task.teacher, x, y, sub_run,
                                        task.pool, target_id)
            rows.append(row)
        flags = [r.success for r in rows]
        totals = [r.queries_total for r in rows]
        attacks = [r.queries_attack for r in rows]
        kept_t = [q for q, s in zip(totals, flags) if s]
        kept_a = [q for q, s in zip(attacks, flags) if s]
        out.append({
            "capacity": entry["name"],
            "student": json.dumps(entry["student"], sort_keys=True),
            "initial_dataset_size": entry["initial_dataset_size"],
            "candidates_per_iter": entry["candidates_per_iter"],
            "n_runs": n_runs,
            "asr": float(np.mean(flags)),
            "aqn_total": float(np.mean(kept_t)) if kept_t else None,
            "aqn_attack_only": float(np.mean(kept_a)) if kept_a else None,
        })
    return out
