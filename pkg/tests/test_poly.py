import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mada.base_opt import BaseHyperParams
from mada.numkit import ContractError, make_rng
from mada.poly import COEF_BOUNDS, COEF_NAMES, CoefficientVector, PolyState, freeze, poly_step, vertex
from mada.problems import make_problem
from mada.runner import BaseOptimizer


def trajectory(opt, problem, steps, alpha=1e-2, seed=0):
    x = problem.initial_point(seed)
    xs = []
    for t in range(1, steps + 1):
        x = opt.step(x, problem.eval(x, t, seed)[1], alpha)
        xs.append(x)
    return np.array(xs)


@pytest.mark.parametrize("kind,variant", [
    ("adam", "avgrad-interp"), ("avgrad", "avgrad-interp"), ("amsgrad", "max-interp"),
    ("yogi", "avgrad-interp"), ("adan", "avgrad-interp"), ("lion", "avgrad-interp"),
])
def test_vertex_recovery_quadratic(kind, variant):
    p = make_problem("quadratic", dim=40, seed=3)
    b3 = 0.4 if kind == "adan" else 0.0
    base = BaseOptimizer(kind, BaseHyperParams(beta1=0.9, beta2=0.99, beta3=b3), p.dim)
    poly = freeze(vertex(kind, 0.9, 0.99, beta3=b3), p.dim, variant)
    dev = np.max(np.abs(trajectory(base, p, 300) - trajectory(poly, p, 300)))
    assert dev <= 1e-12


def test_freeze_is_deterministic():
    p = make_problem("logistic-synth")
    q = CoefficientVector(beta1=0.8, beta2=0.9, beta3=0.2, rho=0.3, c=0.6, gamma=0.7)
    a = trajectory(freeze(q, p.dim), p, 200)
    b = trajectory(freeze(q, p.dim), p, 200)
    assert np.array_equal(a, b)


def test_interior_rho_differs_from_both_ends():
    p = make_problem("quadratic", dim=20, seed=1)
    runs = {r: trajectory(freeze(vertex("adam", 0.9, 0.99, rho=r), p.dim), p, 100) for r in (0.0, 0.5, 1.0)}
    for a, b in ((0.0, 0.5), (0.5, 1.0), (0.0, 1.0)):
        assert np.max(np.abs(runs[a][-1] - runs[b][-1])) > 1e-6


def test_gamma_zero_is_pure_sign_step():
    q = CoefficientVector(gamma=0.0)
    s = PolyState.zeros(3)
    g = np.array([2.0, -0.5, 0.0])
    x, _, tr = poly_step(s, q, np.zeros(3), g, 0.1)
    assert np.array_equal(x, -0.1 * np.sign(tr.u))
    assert np.array_equal(x, [-0.1, 0.1, 0.0])


def test_weight_decay_applied_first():
    q = vertex("adam")
    x0 = np.array([2.0])
    _, _, tr = poly_step(PolyState.zeros(1), q, x0, np.array([1.0]), 0.5, weight_decay=0.1)
    assert tr.x_decayed[0] == 2.0 - 0.1 * 0.5 * 2.0
    assert tr.x_prev[0] == 2.0


def test_first_step_has_no_difference_term():
    q = CoefficientVector(beta3=0.5)
    _, s, tr = poly_step(PolyState.zeros(2), q, np.zeros(2), np.array([1.0, -2.0]), 0.1)
    assert np.array_equal(tr.g_hat, [1.0, -2.0])
    assert np.array_equal(s.n, [0.0, 0.0])


def test_sign_of_zero_is_zero_in_yogi_term():
    q = vertex("yogi", 0.9, 0.5)
    s = PolyState.zeros(1)
    s.vbar = np.array([4.0])
    s.t = 3
    s.prev_grad = np.array([2.0])
    _, s2, tr = poly_step(s, q, np.zeros(1), np.array([2.0]), 0.1)
    assert tr.sign_yogi[0] == 0.0
    assert s2.vbar[0] == 4.0  # 0.5*4 + 0.5*(4 + 4*0)


def test_contract_errors():
    s = PolyState.zeros(2)
    with pytest.raises(ContractError):
        poly_step(s, CoefficientVector(), np.zeros(2), np.zeros(3), 0.1)
    with pytest.raises(ContractError):
        poly_step(s, CoefficientVector(beta2=0.3), np.zeros(2), np.zeros(2), 0.1)
    with pytest.raises(ContractError):
        PolyState.zeros(2, "median")


def test_clamp_bounds():
    c = CoefficientVector(beta1=1.5, beta2=0.1, rho=-2.0).clamp()
    assert (c.beta1, c.beta2, c.rho) == (0.99, 0.5, 0.0)
    c.check()


coef_strategy = st.builds(CoefficientVector, **{
    k: st.floats(lo, hi) for k, (lo, hi) in COEF_BOUNDS.items()})


@settings(max_examples=50, deadline=None)
@given(coef_strategy, st.sampled_from(["avgrad-interp", "max-interp"]))
def test_zero_gradients_keep_x_fixed(q, variant):
    s = PolyState.zeros(4, variant)
    x = np.array([0.3, -1.0, 2.0, 0.0])
    for _ in range(20):
        x_new, s, _ = poly_step(s, q, x, np.zeros(4), 0.1)
        assert np.array_equal(x_new, x)


@settings(max_examples=30, deadline=None)
@given(coef_strategy, st.integers(0, 1000))
def test_state_invariants(q, seed):
    rng = make_rng(seed, "poly-inv")
    grads = rng.standard_normal((60, 3)) * rng.uniform(0.01, 5, 3)
    for variant in ("avgrad-interp", "max-interp"):
        s = PolyState.zeros(3, variant)
        x = np.zeros(3)
        vbars, prev_max = [], np.zeros(3)
        for g in grads:
            x, s, tr = poly_step(s, q, x, g, 0.01)
            assert np.all(s.vbar >= 0) and np.all(s.vtilde >= 0) and np.all(s.vmax >= 0)
            vbars.append(s.vbar)
            if variant == "max-interp":
                assert np.all(s.vmax >= prev_max)
                prev_max = s.vmax
        if variant == "avgrad-interp":
            prefix = np.mean(vbars, axis=0)
            assert np.allclose(s.vtilde, prefix, rtol=1e-12, atol=1e-300)


def test_trace_reproducible():
    rng = make_rng(0, "trace")
    s = PolyState.zeros(5)
    q = CoefficientVector(beta3=0.3, rho=0.4, c=0.5, gamma=0.6)
    x, g = rng.standard_normal(5), rng.standard_normal(5)
    _, _, a = poly_step(s, q, x, g, 0.1)
    _, _, b = poly_step(s, q, x, g, 0.1)
    for name in a.__dataclass_fields__:
        va, vb = getattr(a, name), getattr(b, name)
        if isinstance(va, np.ndarray):
            assert np.array_equal(va, vb)
        else:
            assert va == vb


def test_coefficient_names_cover_vector():
    assert set(CoefficientVector().as_dict()) == set(COEF_NAMES)


def test_zero_eps_zero_gradient_is_finite():
    from mada.hyper import hypergrad

    x, _, tr = poly_step(PolyState.zeros(2), CoefficientVector(), np.ones(2), np.zeros(2), 0.1, eps=0.0)
    assert np.array_equal(x, [1.0, 1.0])
    assert all(np.isfinite(v) for v in hypergrad(tr, np.ones(2)).values())
