import numpy as np
import pytest

from mmattack.errors import ConfigError, ShapeError
from mmattack.optim import (AdamConfig, AdamState, SgdConfig, SgdState,
                            adam_step, apply_step, make_state, sgd_step)


def test_plain_sgd_step():
    p = np.array([5.0])
    sgd_step([p], [np.array([2.0])], SgdConfig(1.0), SgdState())
    assert p[0] == 3.0


def test_momentum_two_step_unroll():
    # lr=0.1, momentum=0.9, grad always 1:
    # v1=1, p1=-0.1; v2=1.9, p2=-0.1-0.19=-0.29
    p = np.array([0.0])
    state = SgdState()
    cfg = SgdConfig(0.1, momentum=0.9)
    sgd_step([p], [np.array([1.0])], cfg, state)
    assert p[0] == pytest.approx(-0.1)
    sgd_step([p], [np.array([1.0])], cfg, state)
    assert p[0] == pytest.approx(-0.29)


def test_weight_decay_enters_velocity():
    # v = g + wd*p = 0 + 0.1*1 = 0.1; p = 1 - 1*0.1 = 0.9
    p = np.array([1.0])
    sgd_step([p], [np.array([0.0])], SgdConfig(1.0, weight_decay=0.1), SgdState())
    assert p[0] == pytest.approx(0.9)


def test_matches_independent_recurrence():
    rng = np.random.default_rng(0)
    grads = rng.normal(size=(20, 3))
    p = np.zeros(3)
    state = SgdState()
    cfg = SgdConfig(0.05, momentum=0.8, weight_decay=0.01)
    # independent scalar-level unroll of the same recurrence
    ref_p = np.zeros(3)
    ref_v = np.zeros(3)
    for g in grads:
        sgd_step([p], [g.copy()], cfg, state)
        ref_v = 0.8 * ref_v + g + 0.01 * ref_p
        ref_p = ref_p - 0.05 * ref_v
        assert np.allclose(p, ref_p, atol=1e-15)


def test_config_validation():
    with pytest.raises(ConfigError):
        SgdConfig(0.0)
    with pytest.raises(ConfigError):
        SgdConfig(0.1, momentum=1.0)
    with pytest.raises(ConfigError):
        SgdConfig(0.1, weight_decay=-0.1)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        sgd_step([np.zeros(2)], [np.zeros(3)], SgdConfig(0.1), SgdState())
    with pytest.raises(ShapeError):
        sgd_step([np.zeros(2)], [], SgdConfig(0.1), SgdState())


def test_state_reset_clears_velocity():
    p = np.array([0.0])
    state = SgdState()
    cfg = SgdConfig(0.1, momentum=0.9)
    sgd_step([p], [np.array([1.0])], cfg, state)
    state.reset()
    sgd_step([p], [np.array([1.0])], cfg, state)
    # second step after reset behaves like a first step from p=-0.1
    assert p[0] == pytest.approx(-0.2)


def test_adam_constant_gradient_steps_at_lr():
    # with constant gradient the bias-corrected moments are exactly 1, so
    # every step moves by lr/(1+eps); two hand-unrolled positions frozen here
    p = np.array([0.0])
    state = AdamState()
    cfg = AdamConfig(0.1)
    adam_step([p], [np.array([1.0])], cfg, state)
    assert p[0] == pytest.approx(-0.09999999900000002, abs=1e-15)
    adam_step([p], [np.array([1.0])], cfg, state)
    assert p[0] == pytest.approx(-0.19999999800000004, abs=1e-15)


def test_adam_step_is_gradient_scale_invariant():
    # m/sqrt(v) cancels any constant gradient scale
    p_small, p_big = np.array([0.0]), np.array([0.0])
    s_small, s_big = AdamState(), AdamState()
    cfg = AdamConfig(0.1)
    for _ in range(5):
        adam_step([p_small], [np.array([1e-3])], cfg, s_small)
        adam_step([p_big], [np.array([1e3])], cfg, s_big)
    # eps floors exact invariance: sqrt(vhat)+eps shifts the small-scale
    # trajectory by about eps/|g| = 1e-5 relative
    assert p_small[0] == pytest.approx(p_big[0], rel=1e-4)


def test_adam_matches_independent_recurrence():
    rng = np.random.default_rng(1)
    grads = rng.normal(size=(20, 3))
    p = np.zeros(3)
    state = AdamState()
    cfg = AdamConfig(0.05, beta1=0.8, beta2=0.95, weight_decay=0.01)
    # independent scalar-level unroll of the published update rule
    ref_p = np.zeros(3)
    ref_m = np.zeros(3)
    ref_v = np.zeros(3)
    for t, g in enumerate(grads, start=1):
        adam_step([p], [g.copy()], cfg, state)
        gw = g + 0.01 * ref_p
        ref_m = 0.8 * ref_m + 0.2 * gw
        ref_v = 0.95 * ref_v + 0.05 * gw * gw
        mhat = ref_m / (1.0 - 0.8 ** t)
        vhat = ref_v / (1.0 - 0.95 ** t)
        ref_p = ref_p - 0.05 * mhat / (np.sqrt(vhat) + 1e-8)
        assert np.allclose(p, ref_p, atol=1e-15)


def test_adam_config_validation():
    with pytest.raises(ConfigError):
        AdamConfig(0.0)
    with pytest.raises(ConfigError):
        AdamConfig(0.1, beta1=1.0)
    with pytest.raises(ConfigError):
        AdamConfig(0.1, beta2=-0.1)
    with pytest.raises(ConfigError):
        AdamConfig(0.1, eps=0.0)
    with pytest.raises(ConfigError):
        AdamConfig(0.1, weight_decay=-1.0)


def test_adam_shape_mismatch():
    with pytest.raises(ShapeError):
        adam_step([np.zeros(2)], [np.zeros(3)], AdamConfig(0.1), AdamState())


def test_adam_state_reset():
    p = np.array([0.0])
    state = AdamState()
    cfg = AdamConfig(0.1)
    adam_step([p], [np.array([1.0])], cfg, state)
    state.reset()
    adam_step([p], [np.array([1.0])], cfg, state)
    # fresh moments: second step is again a first step, from p=-lr
    assert p[0] == pytest.approx(2 * -0.09999999900000002, abs=1e-15)


def test_dispatch_by_config_type():
    assert isinstance(make_state(SgdConfig(0.1)), SgdState)
    assert isinstance(make_state(AdamConfig(0.1)), AdamState)
    p_sgd, p_adam = np.array([1.0]), np.array([1.0])
    apply_step([p_sgd], [np.array([2.0])], SgdConfig(1.0), make_state(SgdConfig(1.0)))
    assert p_sgd[0] == -1.0
    # first step at g=2: mhat=2, vhat=4, so p moves by lr*2/(2+eps)
    apply_step([p_adam], [np.array([2.0])], AdamConfig(0.1), make_state(AdamConfig(0.1)))
    assert p_adam[0] == pytest.approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8), abs=1e-15)
