import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mada.base_opt import BASE_KINDS, BaseHyperParams, BaseOptState, base_step, effective_lr
from mada.numkit import ContractError, NumericError, make_rng


def run(kind, grads, hp=None, alpha=0.1, x0=None):
    hp = hp or BaseHyperParams(beta1=0.9, beta2=0.99, beta3=0.3)
    dim = grads.shape[1]
    state = BaseOptState.zeros(dim)
    x = np.zeros(dim) if x0 is None else x0
    states = []
    for g in grads:
        x, state = base_step(kind, state, hp, x, g, alpha)
        states.append(state)
    return x, states


def test_adam_hand_example():
    hp = BaseHyperParams(beta1=0.5, beta2=0.5, eps=0.0)
    x, st_ = base_step("adam", BaseOptState.zeros(1), hp, np.array([1.0]), np.array([2.0]), 0.1)
    assert st_.m[0] == 1.0 and st_.v[0] == 2.0
    assert x[0] == pytest.approx(1 - 0.1 / math.sqrt(2), abs=1e-12)
    assert x[0] == pytest.approx(0.929289, abs=1e-6)


def test_avgrad_first_step_average_is_vbar():
    g = make_rng(0, "g").standard_normal((1, 5))
    _, (s,) = run("avgrad", g)
    assert np.array_equal(s.vtilde, s.vbar)
    assert np.array_equal(s.v, s.vbar)


def test_lion_hand_example():
    hp = BaseHyperParams(beta1_lion=0.9, beta2_lion=0.99)
    x, s = base_step("lion", BaseOptState.zeros(1), hp, np.array([0.0]), np.array([-3.0]), 0.25)
    assert x[0] == 0.25  # u = -0.3, step -alpha*sign(u)
    assert s.m_lion[0] == pytest.approx(-0.03, abs=1e-15)


def test_yogi_first_step_matches_adam():
    g = np.array([[1.5, -2.0, 0.3]])
    _, (sy,) = run("yogi", g)
    _, (sa,) = run("adam", g)
    assert np.array_equal(sy.v, sa.v)
    assert np.allclose(sy.v, 0.01 * g[0] ** 2, rtol=1e-15)


def test_adan_first_step_has_no_difference_term():
    g = np.array([[1.0, -4.0]])
    _, (s,) = run("adan", g)
    assert np.array_equal(s.n, np.zeros(2))


def test_sgdm_and_weight_decay():
    hp = BaseHyperParams(beta1=0.5, weight_decay=0.1)
    x, s = base_step("sgdm", BaseOptState.zeros(1), hp, np.array([2.0]), np.array([1.0]), 0.5)
    # decay first: 2 - 0.1*0.5*2 = 1.9, then m = 1
    assert x[0] == pytest.approx(1.9 - 0.5, abs=1e-15)


def test_bias_correction_flag():
    hp = BaseHyperParams(beta1=0.9, beta2=0.99, eps=0.0, bias_correction=True)
    x, _ = base_step("adam", BaseOptState.zeros(1), hp, np.array([0.0]), np.array([4.0]), 0.1)
    assert x[0] == pytest.approx(-0.1, abs=1e-12)


def test_effective_lr_examples():
    s = BaseOptState.zeros(2)
    s.v = np.array([4.0, 0.0])
    assert np.array_equal(effective_lr(s, 0.1), [0.05, 0.0])


def test_errors():
    hp = BaseHyperParams()
    s = BaseOptState.zeros(2)
    with pytest.raises(ContractError):
        base_step("adam", s, hp, np.zeros(2), np.zeros(3), 0.1)
    with pytest.raises(NumericError):
        base_step("adam", s, hp, np.zeros(2), np.array([np.nan, 0.0]), 0.1)
    with pytest.raises(ContractError):
        base_step("sophia", s, hp, np.zeros(2), np.zeros(2), 0.1)
    with pytest.raises(ContractError):
        BaseHyperParams(beta1=1.0)


streams = st.integers(0, 10_000).map(lambda s: make_rng(s, "stream").standard_normal((40, 4))
                                     * make_rng(s, "scale").uniform(0.01, 10, 4))


@settings(max_examples=40, deadline=None)
@given(streams, st.sampled_from(BASE_KINDS[1:6]))
def test_second_moments_non_negative(grads, kind):
    _, states = run(kind, grads)
    for s in states:
        assert np.all(s.v >= 0) and np.all(s.vbar >= 0)


@settings(max_examples=40, deadline=None)
@given(streams)
def test_amsgrad_max_non_decreasing(grads):
    _, states = run("amsgrad", grads)
    for a, b in zip(states, states[1:]):
        assert np.all(b.vmax >= a.vmax)


@settings(max_examples=40, deadline=None)
@given(streams)
def test_avgrad_average_equals_prefix_mean(grads):
    _, states = run("avgrad", grads)
    vbars = np.array([s.vbar for s in states])
    prefix = np.cumsum(vbars, axis=0) / np.arange(1, len(states) + 1)[:, None]
    got = np.array([s.vtilde for s in states])
    assert np.allclose(got, prefix, rtol=1e-12, atol=0)


def test_zero_eps_zero_gradient_is_finite():
    x, _ = base_step("adam", BaseOptState.zeros(2), BaseHyperParams(eps=0.0), np.ones(2), np.zeros(2), 0.1)
    assert np.array_equal(x, [1.0, 1.0])
