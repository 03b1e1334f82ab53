import numpy as np
import pytest

from mmattack.attack import MmaConfig, run_mmattack
from mmattack.diagnostics import (compute_diagnostics, estimate_beta,
                                  jacobian_gap_norm)
from mmattack.errors import OracleAccessError
from mmattack.models import build_mlp
from mmattack.oracle import BlackBoxOracle


def _linear_teacher(w, bias):
    m = build_mlp([len(w)], 2, seed=0)
    affine = m.chain.layers[0]
    affine.w[...] = np.stack([-np.asarray(w, float) / 2, np.asarray(w, float) / 2], axis=1)
    affine.b[...] = np.array([-bias / 2, bias / 2])
    return m


def _zero_model(dim=2):
    m = build_mlp([dim], 2, seed=0)
    m.chain.layers[0].w[...] = 0.0
    m.chain.layers[0].b[...] = 0.0
    return m


def _grid_pool(n=40, dim=2, seed=13):
    return np.random.default_rng(seed).uniform(0.05, 0.95, (n, dim))


def test_jacobian_gap_norm_linear_vs_constant():
    # teacher p2 = sigmoid(w.x + b): prob Jacobian rows are +-sigma' * w,
    # so against a constant student the gap norm is sigma' * ||w|| * sqrt(2)
    w, b = np.array([3.0, -1.0]), -0.4
    teacher = _linear_teacher(w, b)
    student = _zero_model()
    x = np.array([0.3, 0.6])
    g = float(w @ x + b)
    sig = 1.0 / (1.0 + np.exp(-g))
    expected = sig * (1 - sig) * np.sqrt((w * w).sum()) * np.sqrt(2.0)
    assert jacobian_gap_norm(student, teacher, x) == pytest.approx(expected, rel=1e-12)


def test_identical_models_have_zero_beta():
    teacher = build_mlp([2, 8], 2, seed=3)
    beta = estimate_beta(teacher.clone(), teacher, np.array([0.5, 0.5]), 0.05,
                         n_samples=32, seed=0)
    assert beta == 0.0


def test_beta_monotone_in_sample_count():
    teacher = _linear_teacher([4.0, 2.0], -2.0)
    student = _zero_model()
    x = np.array([0.4, 0.5])
    betas = [estimate_beta(student, teacher, x, 0.05, n_samples=n, seed=5)
             for n in (8, 32, 128)]
    assert betas[0] <= betas[1] <= betas[2]


def test_beta_bounded_by_analytic_sup():
    # sup over any region of sigma'(g) * ||w|| * sqrt(2) is at sigma' = 1/4
    w = np.array([4.0, 2.0])
    teacher = _linear_teacher(w, -2.0)
    student = _zero_model()
    cap = 0.25 * np.sqrt((w * w).sum()) * np.sqrt(2.0)
    beta = estimate_beta(student, teacher, np.array([0.4, 0.5]), 0.05,
                         n_samples=64, seed=1)
    assert 0.0 < beta <= cap + 1e-12


def _diagnostic_run(w_scale=8.0):
    teacher = _linear_teacher([w_scale, 0.0], -w_scale * 0.52)
    oracle = BlackBoxOracle(teacher, diagnostic=True)
    x = np.array([0.5, 0.5])
    cfg = MmaConfig(student={"kind": "mlp", "widths": [2]},
                    max_iterations=5, candidates_per_iter=5,
                    initial_dataset_size=8, seed=1)
    trace = run_mmattack(oracle, x, 1, cfg, _grid_pool())
    return oracle, trace, x, cfg


def test_compute_diagnostics_spends_no_queries():
    oracle, trace, x, cfg = _diagnostic_run()
    assert trace.success
    before = oracle.ledger.total
    diag = compute_diagnostics(oracle, trace.final_student, x, cfg, trace,
                               n_samples=32)
    assert oracle.ledger.total == before
    assert diag.n_ball_samples == 32
    assert diag.epsilon_used == cfg.distill.epsilon


def test_diagnostics_reflect_trace_records():
    oracle, trace, x, cfg = _diagnostic_run()
    diag = compute_diagnostics(oracle, trace.final_student, x, cfg, trace,
                               n_samples=16)
    checked = [c.gap_inf for it in trace.iterations for c in it.candidates if c.checked]
    assert diag.gap_at_candidates == checked
    assert diag.gap_at_hits == [f.gap_inf for f in trace.found]
    assert diag.margin_at_hit == trace.found[0].margin
    assert diag.hypothesis_flags["perfect_match_held"] is True
    assert diag.final_bound_held is True  # mimic regime: gap far below epsilon


def test_margin_condition_with_steep_boundary():
    # a steep teacher leaves a wide top-two spread at the crossing point,
    # so the margin premise epsilon < (p1 - p2) / 2 holds as well
    oracle, trace, x, cfg = _diagnostic_run(w_scale=30.0)
    assert trace.success
    diag = compute_diagnostics(oracle, trace.final_student, x, cfg, trace,
                               n_samples=16)
    assert diag.hypothesis_flags["margin_condition_held"] is True
    assert diag.final_bound_held is True


def test_diagnostics_without_trace():
    teacher = _linear_teacher([4.0, 0.0], -2.0)
    oracle = BlackBoxOracle(teacher, diagnostic=True)
    cfg = MmaConfig(student={"kind": "mlp", "widths": [2]})
    diag = compute_diagnostics(oracle, _zero_model(), np.array([0.5, 0.5]),
                               cfg, trace=None, n_samples=8)
    assert diag.gap_at_candidates == [] and diag.gap_at_hits == []
    assert diag.margin_at_hit is None
    assert diag.final_bound_held is None
    assert diag.hypothesis_flags["margin_condition_held"] is None


def test_attack_mode_oracle_refuses_diagnostics():
    teacher = _linear_teacher([4.0, 0.0], -2.0)
    oracle = BlackBoxOracle(teacher)
    cfg = MmaConfig(student={"kind": "mlp", "widths": [2]})
    with pytest.raises(OracleAccessError):
        compute_diagnostics(oracle, _zero_model(), np.array([0.5, 0.5]), cfg)
