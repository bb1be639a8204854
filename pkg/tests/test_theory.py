import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mada import theory
from mada.numkit import ContractError, DomainError, make_rng


def defaults(**kw):
    return theory.BoundParams(**{**theory.DEFAULT_BOUND, "beta2": 0.9, "T": 10_000, **kw})


def test_bracket_examples():
    assert theory.rho_bracket(0.9, 0.9) == 0.0
    assert math.isclose(theory.rho_bracket(1.0, 0.9), 0.10536051565782628, rel_tol=1e-14)
    assert theory.rho_bracket(0.0, 0.9) == 0.0


@settings(max_examples=200)
@given(st.floats(0.0, 1.0), st.floats(0.01, 0.999))
def test_bracket_zero_iff_rho_at_most_beta2(rho, beta2):
    b = theory.rho_bracket(rho, beta2)
    assert (b == 0.0) == (rho <= beta2)
    assert b >= 0.0


def test_bracket_enters_bound_times_T():
    # the bracket contributes T * ln(1/0.9) inside the second term at rho = 1
    p = defaults(rho=1.0)
    base = 2.0 * p.R * p.d / (math.sqrt(1 - p.beta2) * p.T) * (2 * p.R + p.alpha * p.L)
    log_term = math.log1p(p.R**2 / (p.eps * (1 - p.beta2)))
    first = 2 * p.R * p.F_gap / (p.alpha * p.T * math.sqrt(1 - p.beta2))
    expected = first + base * (log_term + p.T * math.log(1 / 0.9))
    assert math.isclose(theory.thm3_bound(p), expected, rel_tol=1e-13)


@settings(max_examples=100)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(1, 1000), st.floats(1e-3, 1),
       st.floats(0.01, 0.999), st.floats(1e-10, 1e-2), st.floats(0, 10), st.integers(1, 10**6))
def test_rho_zero_recovers_avgrad_bound(R, L, d, alpha, beta2, eps, F_gap, T):
    p = theory.BoundParams(R=R, L=L, d=d, alpha=alpha, beta2=beta2, eps=eps, F_gap=F_gap, T=T)
    a, b = theory.thm3_bound(p), theory.thm12_bound(p)
    assert abs(a - b) <= 1e-12 * abs(b)


def test_beta2_zero_is_domain_error():
    p = defaults(beta2=0.0, rho=0.5)
    with pytest.raises(DomainError):
        theory.thm3_bound(p)
    with pytest.raises(DomainError):
        theory.rho_bracket(0.5, 0.0)


def test_bound_params_validation():
    with pytest.raises(DomainError):
        defaults(eps=0.0)
    with pytest.raises(DomainError):
        defaults(T=0)
    with pytest.raises(DomainError):
        defaults(rho=1.5)


def test_sweep_errors():
    with pytest.raises(ContractError):
        theory.thm3_sweep(defaults(), [])
    with pytest.raises(ContractError):
        theory.thm3_sweep(defaults(), [0.5, 1.2])


def test_default_grid_contains_beta2_exactly():
    grid = theory.default_rho_grid(11, 0.9)
    assert grid == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    assert 0.95 in theory.default_rho_grid(11, 0.95)


def test_argmin_at_beta2_large_T():
    sweep = theory.thm3_sweep(defaults(T=10_000), theory.default_rho_grid(11, 0.9))
    assert sweep.argmin == 0.9
    assert len(sweep.rows) == 11


def test_argmin_at_beta2_small_T():
    # stated shape; with the documented constants the formula puts the minimum at rho = 1
    sweep = theory.thm3_sweep(defaults(T=1_000), theory.default_rho_grid(11, 0.9))
    assert sweep.argmin == 0.9


def test_bound_non_decreasing_above_beta2():
    # stated shape; sqrt(rho + (1 - rho) T) collapses as rho -> 1, so the bound falls near 1
    p = defaults(T=10_000)
    grid = np.linspace(0.9, 1.0, 51)[1:-1]
    vals = [theory.thm3_bound(p.with_(rho=float(r))) for r in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_thm2_with_zero_momentum():
    # T~ = T, so the F_gap term matches the no-momentum bound exactly
    p1, p2 = defaults(beta1=0.0, F_gap=1.0), defaults(beta1=0.0, F_gap=3.0)
    slope_m = theory.thm12_bound(p2, True) - theory.thm12_bound(p1, True)
    slope = theory.thm12_bound(p2) - theory.thm12_bound(p1)
    assert math.isclose(slope_m, slope, rel_tol=1e-12)


def test_thm2_domain_error():
    with pytest.raises(DomainError):
        theory.thm12_bound(defaults(beta1=0.9, T=9), True)


@pytest.mark.parametrize("momentum", [False, True])
@pytest.mark.parametrize("T", [10_000, 100_000, 1_000_000])
def test_bounds_decay_like_log_over_sqrt(momentum, T):
    p = defaults(beta1=0.5 if momentum else 0.0, T=T)
    ratio = theory.thm12_bound(p.with_(T=4 * T), momentum) / theory.thm12_bound(p, momentum)
    assert ratio < 0.7


def test_thm1_finite_positive():
    v = theory.thm12_bound(theory.BoundParams(R=1, L=1, d=10, alpha=0.1, beta2=0.9, eps=1e-8,
                                              F_gap=1, T=10_000))
    assert math.isfinite(v) and v > 0


# ---------------------------------------------------------------- effective-lr monotonicity

def test_boundary_schedule_monotone_on_random_streams():
    # stated claim; the literal construction violates it on standard-normal streams
    first = theory.prop1_trials(200, 1000, dim=10, beta2=0.9, seed=0)
    assert int((first > 0).sum()) == 0


def test_pure_avgrad_monotone():
    first = theory.prop1_trials(500, 2000, dim=10, beta2=0.9, seed=1, rho_schedule=lambda t: 0.0)
    assert not first.any()
    rng = make_rng(2, "avgrad-stream")
    res = theory.prop1_check(0.9, lambda t: 0.0, 500, rng.standard_normal((500, 3)) * 10)
    assert res.monotone and res.condition_holds


def test_crafted_adam_stream_violates():
    res = theory.prop1_check(0.9, lambda t: 1.0, 50, theory.crafted_adam_stream())
    assert not res.monotone and res.first_violation is not None
    assert not res.condition_holds and res.first_condition_break == 1


def test_trials_agree_with_single_stream_check():
    sched = theory.prop1_rho(0.9)
    first = theory.prop1_trials(30, 300, dim=4, beta2=0.9, seed=5, rho_schedule=sched, chunk=30)
    rng = make_rng(5, "prop1", 0)
    streams = np.stack([rng.standard_normal((30, 4)) for _ in range(300)], axis=1)
    for i in range(30):
        res = theory.prop1_check(0.9, sched, 300, streams[i])
        assert (res.first_violation or 0) == first[i]


def test_zero_gradients_keep_zero_rate():
    res = theory.prop1_check(0.9, lambda t: 1.0, 20, np.zeros((20, 3)))
    assert res.monotone


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 1.0), st.floats(0.5, 0.99))
def test_sufficient_condition_implies_monotone(seed, frac, beta2):
    # stated invariant, checked on schedules at a fraction of the boundary
    bound = theory.prop1_rho(beta2)
    sched = lambda t: frac * bound(t)
    stream = make_rng(seed, "prop1-prop").standard_normal((300, 5))
    for eps in (0.0, 1e-8):
        res = theory.prop1_check(beta2, sched, 300, stream, eps=eps)
        assert res.condition_holds
        assert res.monotone, f"violation at step {res.first_violation}"
