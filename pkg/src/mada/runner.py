"""Training loop shared by fixed, frozen and coefficient-learning runs."""

import time

import numpy as np

from .base_opt import BASE_KINDS, BaseHyperParams, BaseOptState, base_step, effective_lr
from .numkit import ContractError
from .poly import COEF_NAMES, CoefficientVector, PolyState, poly_step, vertex
from .problems import reddi_average_regret
from .records import COLUMNS, RunRecord


def default_stride(steps):
    return 1 if steps <= 10_000 else 10


class BaseOptimizer:
    def __init__(self, kind, hp, dim):
        if kind not in BASE_KINDS:
            raise ContractError(f"unknown optimizer kind {kind!r}")
        self.kind, self.hp = kind, hp
        self.state = BaseOptState.zeros(dim)
        corner = {"sgdm": None, "adan": "adan"}.get(kind, kind)
        if corner is None:
            self.q = None
        else:
            self.q = vertex(corner, beta1=hp.beta1, beta2=hp.beta2, beta3=hp.beta3,
                            beta1_lion=hp.beta1_lion, beta2_lion=hp.beta2_lion)

    def step(self, x, g, alpha):
        x_new, self.state = base_step(self.kind, self.state, self.hp, x, g, alpha)
        return x_new


class PolyOptimizer:
    """Fixed-coefficient parameterized optimizer (also the frozen replay path)."""

    def __init__(self, q, dim, variant="avgrad-interp", eps=1e-8, weight_decay=0.0):
        self.q = q.check()
        self.state = PolyState.zeros(dim, variant)
        self.eps, self.weight_decay = eps, weight_decay

    def step(self, x, g, alpha):
        x_new, self.state, _ = poly_step(self.state, self.q, x, g, alpha, self.eps,
                                         self.weight_decay)
        return x_new


def run_optimizer(problem, schedule, steps, seed, opt, x0=None, record_stride=None):
    """Run ``steps`` iterations of ``opt`` on ``problem``; returns ``(x_final, RunRecord)``.

    Step ``t`` evaluates ``f_t`` at ``x_{t-1}``; constrained problems are
    projected back onto their box after every step.
    """
    stride = record_stride or default_stride(steps)
    x = problem.initial_point(seed) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    rows = []
    track_x = problem.kind == "reddi-online"
    played = np.empty(steps) if track_x else None
    extras_x = []
    started = time.perf_counter()
    loss = float("nan")
    notify = getattr(opt, "note_projection", None)

    for t in range(1, steps + 1):
        loss, g = problem.eval(x, t, seed)
        alpha = schedule(t)
        if track_x:
            played[t - 1] = x[0]
        x_raw = opt.step(x, g, alpha)
        if problem.box is not None:
            x = problem.project(x_raw)
            if notify is not None:
                notify(x_raw, x)
        else:
            x = x_raw
        if t % stride == 0 or t == steps:
            eff = effective_lr(opt.state, alpha)
            q = opt.q.as_tuple() if opt.q is not None else (float("nan"),) * len(COEF_NAMES)
            rows.append((t, loss, alpha, float(np.linalg.norm(g)), *q,
                         float(eff.min()), float(eff.max())))
            if track_x:
                extras_x.append(float(x[0]))

    columns = {name: np.array([r[j] for r in rows]) for j, name in enumerate(COLUMNS)}
    columns["step"] = columns["step"].astype(np.int64)
    extras = {}
    if track_x:
        regret = reddi_average_regret(played)
        extras = {"step": columns["step"].copy(), "x": np.array(extras_x),
                  "avg_regret": regret[columns["step"] - 1]}

    final_loss = problem.full_loss(x) if hasattr(problem, "full_loss") else loss
    summary = {
        "steps": steps,
        "seed": seed,
        "final_loss": float(final_loss),
        "final_q": opt.q.as_dict() if opt.q is not None else None,
        "final_x": [float(v) for v in x] if x.size <= 16 else None,
        "wall_clock": time.perf_counter() - started,
    }
    return x, RunRecord(columns, summary, extras)


def make_optimizer(spec, dim):
    """Build an optimizer from ``spec``: a dict with ``kind`` in {base, poly, mada}."""
    from .hyper import MadaOptimizer

    kind = spec["kind"]
    eps = spec.get("eps", 1e-8)
    wd = spec.get("weight_decay", 0.0)
    q = spec.get("q", CoefficientVector())
    if kind == "base":
        hp = BaseHyperParams(beta1=q.beta1, beta2=q.beta2, beta3=q.beta3, eps=eps,
                             weight_decay=wd, beta1_lion=q.beta1_lion, beta2_lion=q.beta2_lion)
        return BaseOptimizer(spec["base"], hp, dim)
    if kind == "poly":
        return PolyOptimizer(q, dim, spec.get("variant", "avgrad-interp"), eps, wd)
    if kind == "mada":
        return MadaOptimizer(q, spec["hyper"], dim, spec.get("variant", "avgrad-interp"), eps, wd)
    raise ContractError(f"unknown optimizer kind {kind!r}")
