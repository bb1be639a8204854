"""Finite-difference verification of the analytic one-step hyper-gradients.

The next-step losses used are the coordinate functionals ``f(x) = x_i``,
one per coordinate, so each comparison is one entry of the Jacobian
``d x_t / d q``.  A single random-direction loss would sum these entries
with mixed signs, and the cancellation turns the finite-difference
truncation error into a large *relative* error of the sum.  Random states
are resampled if a ``sign`` or ``max`` argument sits within ``KINK_GAP`` of
its switching point, where the difference quotient straddles a kink.
"""

from dataclasses import replace

import numpy as np

from .hyper import LEARNED, hypergrad
from .numkit import central_diff, make_rng
from .poly import CoefficientVector, PolyState, poly_step

KINK_GAP = 1e-3


def random_case(rng, dim=8, variant="avgrad-interp", alpha=0.1, eps=1e-8):
    """Random entering state, interior coefficients, iterate and gradient."""
    while True:
        state = PolyState(
            t=int(rng.integers(1, 200)),
            m=0.5 * rng.standard_normal(dim),
            n=0.5 * rng.standard_normal(dim),
            m_lion=rng.standard_normal(dim),
            vbar=rng.uniform(0.1, 2.0, dim),
            vtilde=rng.uniform(0.1, 2.0, dim),
            vmax=rng.uniform(0.1, 2.0, dim),
            prev_grad=0.5 * rng.standard_normal(dim),
            v=np.zeros(dim),
            variant=variant,
        )
        q = CoefficientVector(
            beta1=rng.uniform(0.05, 0.95), beta2=rng.uniform(0.55, 0.95),
            beta3=rng.uniform(0.05, 0.95), rho=rng.uniform(0.05, 0.95),
            c=rng.uniform(0.05, 0.95), gamma=rng.uniform(0.05, 0.95),
            beta1_lion=rng.uniform(0.05, 0.95), beta2_lion=rng.uniform(0.05, 0.95))
        x = 0.01 * rng.standard_normal(dim)
        g = 0.5 * rng.standard_normal(dim)
        _, _, tr = poly_step(state, q, x, g, alpha, eps)
        gaps = [np.abs(tr.g_hat**2 - tr.vbar_prev), np.abs(tr.u)]
        if variant == "max-interp":
            gaps.append(np.abs(tr.vbar - tr.other_prev))
        if min(float(a.min()) for a in gaps) > KINK_GAP:
            return state, q, x, g


def check_case(state, q, x, g, alpha=0.1, eps=1e-8, h=1e-5):
    """Analytic vs. central-difference ``d x_t[i] / d q`` for every learned coefficient.

    Returns ``{name: (analytic, numeric)}`` with arrays over coordinates.
    """
    _, _, trace = poly_step(state, q, x, g, alpha, eps)
    dim = x.shape[0]
    analytic = {name: np.empty(dim) for name in LEARNED}
    for i, e in enumerate(np.eye(dim)):
        hg = hypergrad(trace, e)
        for name in LEARNED:
            analytic[name][i] = hg[name]

    out = {}
    for name in LEARNED:
        base = getattr(q, name)
        numeric = np.empty(dim)
        for i in range(dim):
            def f(val, name=name, i=i):
                return poly_step(state, replace(q, **{name: val}), x, g, alpha, eps, check=False)[0][i]
            numeric[i] = central_diff(f, base, h)
        out[name] = (analytic[name], numeric)
    return out


def relative_error(analytic, numeric, floor=1e-5):
    # with h = 1e-5 the quotient carries ~ulp(x)/h ~ 1e-12 of round-off, so entries
    # below the floor (exact zeros such as rho where the max routes to vbar) are
    # held to an absolute 1e-6 * floor instead
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def run_check(n_states=50, seed=0, variants=("avgrad-interp", "max-interp"), h=1e-5):
    """Max relative error per (variant, coefficient) over ``n_states`` random states."""
    worst = {}
    for variant in variants:
        rng = make_rng(seed, "hypergrad-check", variant)
        for _ in range(n_states):
            res = check_case(*random_case(rng, variant=variant), h=h)
            for name, (a, fd) in res.items():
                err = relative_error(a, fd)
                worst[(variant, name)] = max(worst.get((variant, name), 0.0), err)
    return worst
