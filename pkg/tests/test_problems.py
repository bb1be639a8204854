import math

import numpy as np
import pytest

from mada.numkit import ContractError, DomainError, central_diff, make_rng
from mada.problems import (
    Quadratic, TinyMlpSpec, evaluate, make_problem, mlp_eval, mlp_loss_grad, reddi_average_regret,
    reddi_grad,
)


def fd_rel_error(problem, x, t=1, seed=0, n_coords=20, rng=None):
    """Worst coordinate-wise relative error of the analytic gradient vs central differences."""
    rng = rng or make_rng(0, "fd-coords")
    _, g = problem.eval(x, t, seed)
    coords = rng.choice(problem.dim, size=min(n_coords, problem.dim), replace=False)
    floor = 1e-4 * max(float(np.max(np.abs(g))), 1e-12)
    worst = 0.0
    for i in coords:
        def f(v, i=i):
            xx = x.copy()
            xx[i] = v
            return problem.eval(xx, t, seed)[0]
        fd = central_diff(f, float(x[i]), 1e-5)
        worst = max(worst, abs(fd - g[i]) / max(abs(fd), abs(g[i]), floor))
    return worst


def test_quadratic_example():
    q = Quadratic(2 * np.eye(2))
    loss, grad = q.eval(np.array([3.0, -1.0]), 1, 0)
    assert loss == 10.0
    assert np.array_equal(grad, [6.0, -2.0])


def test_rosenbrock_minimum():
    p = make_problem("rosenbrock", a=1.0, b=100.0)
    loss, grad = p.eval(np.array([1.0, 1.0]), 1, 0)
    assert loss == 0.0
    assert np.array_equal(grad, [0.0, 0.0])


@pytest.mark.parametrize("kind,params", [
    ("quadratic", {"dim": 30, "noise": 0.0}),
    ("rosenbrock", {"dim": 6}),
    ("logistic-synth", {"dim": 12}),
    ("tiny-mlp", {}),
])
def test_gradients_match_finite_differences(kind, params):
    p = make_problem(kind, **params)
    rng = make_rng(1, "fd-points", kind)
    for k in range(10):
        x = p.initial_point(k) + 0.3 * rng.standard_normal(p.dim)
        assert fd_rel_error(p, x, t=k + 1, seed=k, rng=rng) <= 1e-6


@pytest.mark.parametrize("kind", ["logistic-synth", "tiny-mlp", "quadratic"])
def test_stochastic_eval_deterministic(kind):
    p = make_problem(kind, noise=0.5) if kind == "quadratic" else make_problem(kind)
    x = p.initial_point(3)
    a = p.eval(x, 17, 5)
    b = p.eval(x, 17, 5)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])
    c = p.eval(x, 18, 5)
    assert not np.array_equal(a[1], c[1])


def test_deterministic_kinds_ignore_seed():
    for p in (make_problem("quadratic", dim=5), make_problem("rosenbrock")):
        x = p.initial_point(0)
        assert np.array_equal(p.eval(x, 3, 0)[1], p.eval(x, 3, 99)[1])


def test_evaluate_checks_shape_and_box():
    p = make_problem("quadratic", dim=3)
    with pytest.raises(ContractError):
        evaluate(p, np.zeros(4))
    r = make_problem("reddi-online")
    with pytest.raises(DomainError):
        evaluate(r, np.array([1.5]))


@pytest.mark.parametrize("t,expected", [(1, 1010.0), (2, -10.0), (102, 1010.0), (101, -10.0)])
def test_reddi_grad(t, expected):
    assert reddi_grad(t, 0.5 if t < 100 else -1.0) == expected


def test_reddi_grad_periodic():
    for t in range(1, 500):
        assert reddi_grad(t, 0.0) == reddi_grad(t + 101, 0.0)


def test_reddi_grad_rejects_outside_box():
    with pytest.raises(DomainError):
        reddi_grad(1, 1.01)


def test_average_regret_examples():
    assert np.array_equal(reddi_average_regret([-1, -1, -1]), [0, 0, 0])
    assert np.array_equal(reddi_average_regret([1]), [2020.0])
    # g_1(0) - g_1(-1) = 1010, then (1010 - 10) / 2
    assert np.array_equal(reddi_average_regret([0, 0]), [1010.0, 500.0])


def test_average_regret_can_be_negative():
    # playing -1 is only optimal on average; after a big step it loses to x = 1 for a while
    assert reddi_average_regret([-1, 1])[-1] == -10.0


def test_average_regret_empty():
    with pytest.raises(ContractError):
        reddi_average_regret([])


def test_mlp_zero_weights_give_log2():
    spec = TinyMlpSpec(batch_size=64)
    idx = np.concatenate([np.flatnonzero(spec.y == 0)[:32], np.flatnonzero(spec.y == 1)[:32]])
    loss, _ = mlp_loss_grad(spec, np.zeros(spec.n_params), spec.X[idx], spec.y[idx])
    assert abs(loss - math.log(2)) <= 1e-12


def test_mlp_duplicate_batch_invariance():
    spec = TinyMlpSpec()
    w = make_rng(0, "w").standard_normal(spec.n_params) * 0.3
    X, y = spec.X[:40], spec.y[:40]
    a = mlp_loss_grad(spec, w, X, y)
    b = mlp_loss_grad(spec, w, np.concatenate([X, X]), np.concatenate([y, y]))
    assert a[0] == pytest.approx(b[0], rel=1e-14)
    assert np.allclose(a[1], b[1], rtol=1e-13, atol=1e-16)


def test_mlp_wrong_parameter_count():
    spec = TinyMlpSpec()
    with pytest.raises(ContractError):
        mlp_eval(spec, np.zeros(spec.n_params + 1), 1, 0)


def test_mlp_dataset_fixed_by_seed():
    a, b, c = TinyMlpSpec(data_seed=4), TinyMlpSpec(data_seed=4), TinyMlpSpec(data_seed=5)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    assert not np.array_equal(a.X, c.X)


def test_unknown_kind():
    with pytest.raises(ContractError):
        make_problem("sphere")
