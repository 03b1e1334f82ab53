import numpy as np
import pytest

from mmattack.baselines import (AttackResult, NesConfig, SquareConfig,
                                ZooConfig, nes_attack, square_attack,
                                zoo_attack, zoo_estimate_partial)
from mmattack.errors import ConfigError
from mmattack.models import build_mlp
from mmattack.oracle import BlackBoxOracle


def _constant_teacher(dim=2):
    """All-zero weights: uniform probabilities everywhere, class 1 always."""
    m = build_mlp([dim], 2, seed=0)
    for layer in m.chain.layers:
        for p in ("w", "b"):
            if hasattr(layer, p):
                getattr(layer, p)[...] = 0.0
    return m


def _linear_teacher(w, bias):
    """2-class model, logit gap (class 2 minus class 1) = w . x + bias."""
    m = build_mlp([len(w)], 2, seed=0)
    affine = m.chain.layers[0]
    affine.w[...] = np.stack([-np.asarray(w, float) / 2, np.asarray(w, float) / 2], axis=1)
    affine.b[...] = np.array([-bias / 2, bias / 2])
    return m


class _ExpQuadraticTeacher:
    """p_1(x) = exp(-q(x)) for a quadratic q, so CE toward class 1 is
    exactly quadratic in x and symmetric differences are exact."""

    n_classes = 2

    def __init__(self, a, center):
        self.a = np.asarray(a, dtype=np.float64)
        self.center = np.asarray(center, dtype=np.float64)

    def q(self, x):
        d = np.asarray(x, float).reshape(-1) - self.center
        return float((self.a * d * d).sum()) + 0.05

    def predict_proba(self, x):
        p1 = np.exp(-self.q(x))
        return np.array([p1, 1.0 - p1])


def _precheck(oracle, x):
    """Establish the caller contract: x is queried and correctly classified."""
    return oracle.hard_label(x)


# --- NES ---------------------------------------------------------------


def test_nes_constant_teacher_exact_query_count():
    oracle = BlackBoxOracle(_constant_teacher())
    x = np.array([0.5, 0.5])
    y = _precheck(oracle, x)
    cfg = NesConfig(epsilon=0.1, num_samples=10, num_iterations=7)
    res = nes_attack(oracle, x, y, cfg, seed=0)
    # zero loss difference -> zero gradient -> sign(0) step leaves the
    # iterate at x, whose re-check is a cache hit
    assert not res.success
    assert res.queries_spent == 7 * 10
    assert res.iterations == 7


def test_nes_finds_nearby_linear_boundary():
    teacher = _linear_teacher([8.0, 0.0], -8.0 * 0.53)
    x = np.array([0.5, 0.5])
    wins = 0
    for seed in range(10):
        oracle = BlackBoxOracle(teacher)
        y = _precheck(oracle, x)
        assert y == 1
        res = nes_attack(oracle, x, y, NesConfig(epsilon=0.05, num_samples=10,
                                                 num_iterations=40), seed=seed)
        if res.success:
            wins += 1
            assert np.abs(res.adversarial_point - x).max() <= 0.05 + 1e-12
            assert oracle.hard_label(res.adversarial_point) != y
    assert wins >= 9


def test_nes_deterministic_in_seed():
    teacher = _linear_teacher([8.0, 0.0], -8.0 * 0.53)
    x = np.array([0.5, 0.5])
    outs = []
    for _ in range(2):
        oracle = BlackBoxOracle(teacher)
        y = _precheck(oracle, x)
        outs.append(nes_attack(oracle, x, y, NesConfig(epsilon=0.05, num_samples=10,
                                                       num_iterations=40), seed=3))
    assert outs[0].queries_spent == outs[1].queries_spent
    assert np.array_equal(outs[0].adversarial_point, outs[1].adversarial_point)


def test_nes_config_validation():
    with pytest.raises(ConfigError):
        NesConfig(num_samples=7)  # odd
    with pytest.raises(ConfigError):
        NesConfig(sigma=0.0)


# --- ZOO ---------------------------------------------------------------


def test_zoo_two_queries_per_coordinate_visit():
    # 1-d teacher with the boundary out of reach: the iterate moves a
    # fresh amount every visit, so every probe is paid
    teacher = _linear_teacher([2.0], -2.0 * 2.0)
    oracle = BlackBoxOracle(teacher)
    x = np.array([0.5])
    y = _precheck(oracle, x)
    n = 30
    res = zoo_attack(oracle, x, y, ZooConfig(epsilon=0.05, num_iterations=n,
                                             learning_rate=0.01), seed=0)
    assert not res.success
    # 2 per visit plus the final verification of the never-probed iterate
    assert res.queries_spent == 2 * n + 1


def test_zoo_symmetric_difference_exact_on_quadratic_loss():
    teacher = _ExpQuadraticTeacher(a=[0.7, 0.3], center=[0.6, 0.4])
    oracle = BlackBoxOracle(teacher)
    x = np.array([0.5, 0.5])
    for j in range(2):
        est, _, _ = zoo_estimate_partial(oracle, x.copy(), x, y=1, j=j,
                                         fd_step=1e-3, epsilon=0.05)
        exact = 2.0 * teacher.a[j] * (x[j] - teacher.center[j])
        assert est == pytest.approx(exact, abs=1e-9)


def test_zoo_ignores_dead_coordinate():
    # the teacher is constant in x_1, so its estimate is exactly zero and
    # the coordinate never moves
    teacher = _linear_teacher([3.0, 0.0], -3.0 * 2.0)
    oracle = BlackBoxOracle(teacher)
    x = np.array([0.5, 0.5])
    y = _precheck(oracle, x)
    est, _, _ = zoo_estimate_partial(oracle, x.copy(), x, y, j=1,
                                     fd_step=1e-3, epsilon=0.05)
    assert est == 0.0


def test_zoo_zero_width_probe_window():
    # defensive branch: an iterate parked outside the ball projects both
    # probes onto the same face
    teacher = _constant_teacher(1)
    oracle = BlackBoxOracle(teacher)
    anchor = np.array([0.5])
    parked = np.array([0.9])
    est, (hi, _), (lo, _) = zoo_estimate_partial(oracle, parked, anchor, 1,
                                                 j=0, fd_step=1e-3, epsilon=0.05)
    assert hi[0] == lo[0] == 0.55
    assert est == 0.0


def test_zoo_succeeds_across_nearby_boundary():
    teacher = _linear_teacher([10.0, 0.0], -10.0 * 0.52)
    oracle = BlackBoxOracle(teacher)
    x = np.array([0.5, 0.5])
    y = _precheck(oracle, x)
    res = zoo_attack(oracle, x, y, ZooConfig(epsilon=0.05, num_iterations=500,
                                             learning_rate=0.05), seed=0)
    assert res.success
    assert np.abs(res.adversarial_point - x).max() <= 0.05 + 1e-12
    assert oracle.hard_label(res.adversarial_point) != y


def test_zoo_probe_success_is_reused_not_requeried():
    # when a probe itself crosses the boundary, it is returned as the
    # adversarial point and its confirmation is a cache hit
    teacher = _linear_teacher([50.0, 0.0], -50.0 * 0.5005)
    oracle = BlackBoxOracle(teacher)
    x = np.array([0.5, 0.5])
    y = _precheck(oracle, x)
    res = zoo_attack(oracle, x, y, ZooConfig(epsilon=0.05, num_iterations=100,
                                             learning_rate=0.01, fd_step=1e-3), seed=0)
    assert res.success and res.iterations == 1
    assert res.queries_spent == 2
    assert oracle.ledger.attack_cache_hits >= 1


# --- Square ------------------------------------------------------------


def test_square_respects_query_cap():
    teacher = _constant_teacher(4)
    oracle = BlackBoxOracle(teacher)
    x = np.full(4, 0.5)
    y = _precheck(oracle, x)
    res = square_attack(oracle, x, y, SquareConfig(epsilon=0.1, num_queries=50), seed=0)
    assert not res.success
    assert res.queries_spent <= 50 + 1
    # tiny proposal spaces saturate the cache; the attack must still halt
    assert res.iterations <= 50


def test_square_stripe_init_solves_trivial_target():
    # boundary so close that any +-epsilon stripe crosses it
    teacher = _linear_teacher([8.0, 8.0], -8.0 * 1.0001)
    oracle = BlackBoxOracle(teacher)
    x = np.array([0.5, 0.5])
    y = _precheck(oracle, x)
    res = square_attack(oracle, x, y, SquareConfig(epsilon=0.1, num_queries=100), seed=0)
    assert res.success and res.iterations == 0 and res.queries_spent == 1
    assert set(np.round(np.abs(res.adversarial_point - x), 12)) <= {0.1}


def test_square_success_point_feasible():
    teacher = _linear_teacher([6.0, -2.0], -6.0 * 0.55 + 2.0 * 0.5)
    wins = 0
    for seed in range(5):
        oracle = BlackBoxOracle(teacher)
        x = np.array([0.5, 0.5])
        y = _precheck(oracle, x)
        res = square_attack(oracle, x, y, SquareConfig(epsilon=0.1, num_queries=200),
                            seed=seed)
        if res.success:
            wins += 1
            assert np.abs(res.adversarial_point - x).max() <= 0.1 + 1e-12
            assert res.adversarial_point.min() >= 0.0
            assert res.adversarial_point.max() <= 1.0
            assert oracle.hard_label(res.adversarial_point) != y
    assert wins >= 1


def test_square_deterministic_in_seed():
    teacher = _linear_teacher([6.0, -2.0], -6.0 * 0.55 + 2.0 * 0.5)
    outs = []
    for _ in range(2):
        oracle = BlackBoxOracle(teacher)
        x = np.array([0.5, 0.5])
        y = _precheck(oracle, x)
        outs.append(square_attack(oracle, x, y,
                                  SquareConfig(epsilon=0.1, num_queries=200), seed=7))
    assert outs[0].success == outs[1].success
    assert outs[0].queries_spent == outs[1].queries_spent
    if outs[0].success:
        assert np.array_equal(outs[0].adversarial_point, outs[1].adversarial_point)


def test_config_validation():
    with pytest.raises(ConfigError):
        ZooConfig(fd_step=0.0)
    with pytest.raises(ConfigError):
        SquareConfig(p_init=0.0)
    with pytest.raises(ConfigError):
        SquareConfig(num_queries=0)
