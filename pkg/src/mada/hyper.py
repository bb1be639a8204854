"""One-step hyper-gradients and the online coefficient-learning loop.

``hypergrad`` differentiates ``f_{t+1}(x_t)`` with respect to each
coefficient by the chain rule through the single update that produced
``x_t``; everything entering that update (moments, running average/max,
previous gradient) is treated as a constant.  ``sign`` contributes zero
derivative and ``max`` routes its derivative to the larger argument.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .numkit import ContractError
from .poly import COEF_BOUNDS, COEF_NAMES, CoefficientVector, PolyState, poly_step

LEARNED = ("beta1", "beta2", "beta3", "rho", "c", "gamma")
BETA_GROUP = ("beta1", "beta2")


def _curvature_weight(tr):
    # d x_new / d v = alpha * gamma * num / (2 sqrt(v) (sqrt(v)+eps)^2), 0 where v == 0
    sq = tr.denom - tr.eps
    w = np.zeros_like(tr.v)
    pos = tr.v > 0
    w[pos] = tr.num[pos] / (2.0 * sq[pos] * tr.denom[pos] ** 2)
    return w


def _shared_path(tr):
    """d v / d vbar along the fresh path and along the average/max path."""
    rho = tr.q.rho
    if tr.variant == "avgrad-interp":
        return rho, (1.0 - rho) / tr.t
    return rho, (1.0 - rho) * tr.route


def beta2_path_terms(trace, grad_next):
    """Per-coordinate beta2 hyper-gradient split into (direct vbar path, average/max path)."""
    tr = trace
    scale = tr.alpha * tr.q.gamma * grad_next * _curvature_weight(tr)
    d_vbar = tr.vbar_prev - tr.g_tilde2
    direct, via_other = _shared_path(tr)
    return scale * direct * d_vbar, scale * via_other * d_vbar


def hypergrad(trace, grad_next, alpha=None, eps=None):
    """d f_{t+1}(x_t) / d q for every coefficient, as a dict keyed by coefficient name."""
    tr = trace
    G = np.asarray(grad_next, dtype=np.float64)
    if G.shape != tr.x_new.shape:
        raise ContractError(f"grad_next shape {G.shape} does not match trace step {tr.t} shape {tr.x_new.shape}")
    if (alpha is not None and alpha != tr.alpha) or (eps is not None and eps != tr.eps):
        raise ContractError(f"alpha/eps differ from those used at step {tr.t}")

    q = tr.q
    use_max = tr.variant == "max-interp"
    sums = _hyper_kernel(G, tr.t, use_max, q.beta2, q.beta3, q.rho, q.c, tr.m_prev, tr.n_prev,
                         tr.vbar_prev, tr.g, tr.dg, tr.n, tr.u, tr.g_hat, tr.sign_yogi,
                         tr.g_tilde2, tr.vbar, tr.v_other, tr.v, tr.num, tr.denom, tr.route, tr.eps)
    ag = tr.alpha * q.gamma
    return {
        "beta1": float(-ag * sums[0]),
        "beta2": float(ag * sums[1]),
        "beta3": float(-ag * sums[2]),
        "rho": float(ag * sums[3]),
        "c": float(ag * sums[4]),
        "gamma": float(-tr.alpha * sums[5]),
        "beta1_lion": 0.0,
        "beta2_lion": 0.0,
    }


@njit(cache=True)
def _hyper_kernel(G, t, use_max, b2, b3, rho, c, m_prev, n_prev, vbar_prev, g, dg, n, u,
                  g_hat, sgn, g_tilde2, vbar, v_other, v, num, denom, route, eps):
    """Per-coefficient sums of ``G_i * d x_new_i / d q`` without the common ``alpha*gamma``."""
    out = np.zeros(6)
    for i in range(G.size):
        Gi = G[i]
        # d x_new / d v, without the alpha*gamma factor; 0 where v == 0
        w = num[i] / (2.0 * (denom[i] - eps) * denom[i] ** 2) if v[i] > 0 else 0.0
        inv = 1.0 / denom[i] if denom[i] > 0 else 0.0
        if use_max:
            kv = rho + (1.0 - rho) * (1.0 if route[i] else 0.0)
        else:
            kv = rho + (1.0 - rho) / t
        gh2 = g_hat[i] * g_hat[i]
        d_gt2_c = gh2 - (vbar_prev[i] + gh2 * sgn[i])
        d_gt2_b3 = (c + (1 - c) * sgn[i]) * 2.0 * g_hat[i] * dg[i]
        d_num_b3 = n[i] + b3 * (n_prev[i] - dg[i])
        out[0] += Gi * ((m_prev[i] - g[i]) * inv)
        out[1] += Gi * (w * kv * (vbar_prev[i] - g_tilde2[i]))
        out[2] += Gi * (d_num_b3 * inv - w * kv * (1 - b2) * d_gt2_b3)
        out[3] += Gi * (w * (vbar[i] - v_other[i]))
        out[4] += Gi * (w * kv * (1 - b2) * d_gt2_c)
        out[5] += Gi * (num[i] * inv - np.sign(u[i]))
    return out


@dataclass
class HyperConfig:
    hyper_lr_betas: float = 2.5e-3
    hyper_lr_other: float = 2.5e-3
    hyper_momentum: float = 0.5
    momentum_enabled: dict = field(default_factory=lambda: {k: k != "gamma" for k in LEARNED})
    lr_overrides: dict = field(default_factory=dict)
    freeze_steps: int = 0
    bounds: dict = field(default_factory=lambda: dict(COEF_BOUNDS))

    def __post_init__(self):
        if self.hyper_lr_betas < 0 or self.hyper_lr_other < 0:
            raise ContractError("hyper learning rates must be >= 0")
        if not 0.0 <= self.hyper_momentum < 1.0:
            raise ContractError("hyper_momentum must lie in [0, 1)")
        if self.freeze_steps < 0:
            raise ContractError("freeze_steps must be >= 0")
        unknown = set(self.lr_overrides) - set(LEARNED)
        if unknown:
            raise ContractError(f"cannot set a hyper learning rate for {sorted(unknown)}")

    def lr(self, name):
        if name in self.lr_overrides:
            return self.lr_overrides[name]
        return self.hyper_lr_betas if name in BETA_GROUP else self.hyper_lr_other


@dataclass
class HyperState:
    q: CoefficientVector
    buffers: dict = field(default_factory=lambda: {k: 0.0 for k in LEARNED})


def hyper_update(hs, grads, cfg, t):
    """Projected SGD-with-momentum step on the learned coefficients."""
    if t <= cfg.freeze_steps:
        return hs
    q = hs.q.as_dict()
    buffers = dict(hs.buffers)
    for name in LEARNED:
        g = grads.get(name, 0.0)
        if cfg.momentum_enabled.get(name, True) and cfg.hyper_momentum:
            buffers[name] = cfg.hyper_momentum * buffers[name] + g
            g = buffers[name]
        lo, hi = cfg.bounds[name]
        q[name] = float(min(max(q[name] - cfg.lr(name) * g, lo), hi))
    return HyperState(CoefficientVector(**q), buffers)


class MadaOptimizer:
    """Parameterized optimizer whose coefficients follow projected hyper-gradient descent.

    ``step`` consumes ``g_t = grad f_t(x_{t-1})``: the model step uses the
    coefficients from before this call, and the same ``g_t`` then serves as
    ``grad f_t`` at the point produced by the previous step for the
    coefficient update.
    """

    def __init__(self, q0, cfg, dim, variant="avgrad-interp", eps=1e-8, weight_decay=0.0,
                 projection_aware=True):
        q0.check(cfg.bounds)
        self.cfg = cfg
        self.hyper = HyperState(q0)
        self.state = PolyState.zeros(dim, variant)
        self.eps, self.weight_decay = eps, weight_decay
        self.projection_aware = projection_aware
        self.trace = None
        self.inside = None
        self.observer = None  # optional callable(trace, grad_next), for diagnostics

    @property
    def q(self):
        return self.hyper.q

    def step(self, x, g, alpha):
        grads = None
        if self.trace is not None:
            G = g if self.inside is None else g * self.inside
            grads = hypergrad(self.trace, G)
            if self.observer is not None:
                self.observer(self.trace, G)
        x_new, self.state, self.trace = poly_step(self.state, self.hyper.q, x, g, alpha,
                                                  self.eps, self.weight_decay)
        if grads is not None:
            self.hyper = hyper_update(self.hyper, grads, self.cfg, self.state.t)
        return x_new

    def note_projection(self, x_raw, x_projected):
        # a clipped coordinate no longer depends on q
        if self.projection_aware:
            self.inside = (x_raw == x_projected).astype(np.float64)


def run_mada(problem, schedule, q0, cfg, steps, seed, variant="avgrad-interp", eps=1e-8,
             weight_decay=0.0, x0=None, record_stride=None):
    """Run the coefficient-learning loop; returns ``(x_final, q_final, RunRecord)``."""
    from .runner import run_optimizer

    if steps <= cfg.freeze_steps:
        raise ContractError("steps must exceed freeze_steps")
    opt = MadaOptimizer(q0, cfg, problem.dim, variant, eps, weight_decay)
    x, record = run_optimizer(problem, schedule, steps, seed, opt, x0=x0,
                              record_stride=record_stride)
    return x, opt.q, record


def extract_fs(record):
    """Final learned coefficients of a recorded run (for a frozen re-run)."""
    if record.n_rows == 0:
        raise ContractError("record has no coefficient snapshots")
    return CoefficientVector(**{k: float(record.columns[k][-1]) for k in COEF_NAMES})
