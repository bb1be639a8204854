"""The parameterized optimizer.

A single update rule whose coefficient vector ``q`` spans a box of
optimizers.  Corners of the box reproduce Adam, AVGrad (or AMSGrad in the
``max-interp`` variant), Yogi, Adan and Lion; interior points interpolate
between them.  ``poly_step`` also returns a :class:`StepTrace` holding every
intermediate that :func:`mada.hyper.hypergrad` needs.
"""

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .numkit import ContractError, NumericError

VARIANTS = ("avgrad-interp", "max-interp")

COEF_NAMES = ("beta1", "beta2", "beta3", "rho", "c", "gamma", "beta1_lion", "beta2_lion")
COEF_BOUNDS = {
    "beta1": (0.0, 0.99),
    "beta2": (0.5, 0.99),
    "beta3": (0.0, 0.99),
    "rho": (0.0, 1.0),
    "c": (0.0, 1.0),
    "gamma": (0.0, 1.0),
    "beta1_lion": (0.0, 1.0),
    "beta2_lion": (0.0, 1.0),
}


@dataclass(frozen=True)
class CoefficientVector:
    beta1: float = 0.9
    beta2: float = 0.95
    beta3: float = 0.0
    rho: float = 1.0
    c: float = 1.0
    gamma: float = 1.0
    beta1_lion: float = 0.9
    beta2_lion: float = 0.99

    def check(self, bounds=COEF_BOUNDS):
        for name in COEF_NAMES:
            lo, hi = bounds[name]
            val = getattr(self, name)
            if not lo <= val <= hi:
                raise ContractError(f"coefficient {name}={val} outside [{lo}, {hi}]")
        return self

    def clamp(self, bounds=COEF_BOUNDS):
        return CoefficientVector(**{
            k: min(max(getattr(self, k), bounds[k][0]), bounds[k][1]) for k in COEF_NAMES})

    def as_tuple(self):
        return tuple(getattr(self, k) for k in COEF_NAMES)

    def as_dict(self):
        return {k: getattr(self, k) for k in COEF_NAMES}

    def with_(self, **kw):
        return replace(self, **kw)


def vertex(name, beta1=0.9, beta2=0.99, beta3=0.0, **kw):
    """Coefficients of a named corner of the polytope.

    ``avgrad`` and ``amsgrad`` share a corner; which optimizer it reproduces
    depends on the second-moment variant.
    """
    corners = {
        "adam": dict(beta3=0.0, c=1.0, rho=1.0, gamma=1.0),
        "avgrad": dict(beta3=0.0, c=1.0, rho=0.0, gamma=1.0),
        "amsgrad": dict(beta3=0.0, c=1.0, rho=0.0, gamma=1.0),
        "yogi": dict(beta3=0.0, c=0.0, rho=1.0, gamma=1.0),
        "adan": dict(beta3=beta3, c=1.0, rho=1.0, gamma=1.0),
        "lion": dict(beta3=0.0, c=1.0, rho=1.0, gamma=0.0),
    }
    if name not in corners:
        raise ContractError(f"no vertex named {name!r}")
    return CoefficientVector(beta1=beta1, beta2=beta2, **{**corners[name], **kw})


@dataclass
class PolyState:
    t: int
    m: np.ndarray
    n: np.ndarray
    m_lion: np.ndarray
    vbar: np.ndarray
    vtilde: np.ndarray
    vmax: np.ndarray
    prev_grad: np.ndarray
    v: np.ndarray
    variant: str = "avgrad-interp"

    @classmethod
    def zeros(cls, dim, variant="avgrad-interp"):
        if variant not in VARIANTS:
            raise ContractError(f"unknown variant {variant!r}")
        z = np.zeros(dim)
        return cls(0, z, z, z, z, z, z, z, z, variant)

    @property
    def dim(self):
        return self.m.shape[0]


@dataclass
class StepTrace:
    """Intermediates of one ``poly_step``.

    ``*_prev`` fields are the state entering the step; ``v_other`` is the
    running average (avgrad-interp) or running max (max-interp).
    ``route`` is True where the max took the fresh ``vbar`` (always True in
    the avgrad-interp variant, where it is unused).
    """

    t: int
    variant: str
    q: CoefficientVector
    alpha: float
    eps: float
    weight_decay: float
    x_prev: np.ndarray
    x_decayed: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    m_prev: np.ndarray
    n_prev: np.ndarray
    vbar_prev: np.ndarray
    other_prev: np.ndarray
    m: np.ndarray
    n: np.ndarray
    u: np.ndarray
    g_hat: np.ndarray
    sign_yogi: np.ndarray
    g_tilde2: np.ndarray
    vbar: np.ndarray
    v_other: np.ndarray
    v: np.ndarray
    num: np.ndarray
    denom: np.ndarray
    route: np.ndarray
    x_new: np.ndarray


@njit(cache=True)
def _poly_kernel(t, use_max, b1, b2, b3, rho, c, gamma, bl1, bl2, alpha, eps, wd,
                 x, g, m_prev, n_prev, ml_prev, vp_prev, other_prev, g_last):
    # rows: x_dec dg m n u m_lion g_hat sign g_tilde2 vbar v_other v num denom route x_new
    out = np.empty((16, x.size))
    for i in range(x.size):
        gi = g[i]
        x_dec = x[i] - wd * alpha * x[i]
        dg = gi - (gi if t == 1 else g_last[i])
        m = b1 * m_prev[i] + (1 - b1) * gi
        n = b3 * n_prev[i] + (1 - b3) * dg
        u = bl1 * ml_prev[i] + (1 - bl1) * gi
        m_lion = bl2 * ml_prev[i] + (1 - bl2) * gi

        vp = vp_prev[i]
        g_hat = gi + b3 * dg
        gh2 = g_hat * g_hat
        sgn = np.sign(gh2 - vp)
        g_tilde2 = c * gh2 + (1 - c) * (vp + gh2 * sgn)
        vbar = b2 * vp + (1 - b2) * g_tilde2

        if use_max:
            route = 1.0 if vbar > other_prev[i] else 0.0
            v_other = max(other_prev[i], vbar)
        else:
            route = 1.0
            v_other = (vbar + (t - 1) * other_prev[i]) / t
        v = rho * vbar + (1 - rho) * v_other

        num = m + b3 * n
        denom = np.sqrt(v) + eps
        adaptive = num / denom if denom > 0 else 0.0  # 0/0 -> 0 when eps = 0
        x_new = x_dec - alpha * (gamma * adaptive + (1 - gamma) * np.sign(u))

        out[0, i] = x_dec
        out[1, i] = dg
        out[2, i] = m
        out[3, i] = n
        out[4, i] = u
        out[5, i] = m_lion
        out[6, i] = g_hat
        out[7, i] = sgn
        out[8, i] = g_tilde2
        out[9, i] = vbar
        out[10, i] = v_other
        out[11, i] = v
        out[12, i] = num
        out[13, i] = denom
        out[14, i] = route
        out[15, i] = x_new
    return out


def poly_step(state, q, x, g, alpha, eps=1e-8, weight_decay=0.0, check=True):
    """Apply one parameterized update; returns ``(x_new, new_state, trace)``.

    Per coordinate, with ``g_prev = g`` on the first step::

        m = b1 m + (1-b1) g              n = b3 n + (1-b3)(g - g_prev)
        g_hat = g + b3 (g - g_prev)      s = sign(g_hat^2 - vbar)
        g_tilde2 = c g_hat^2 + (1-c)(vbar + g_hat^2 s)
        vbar = b2 vbar + (1-b2) g_tilde2
        v_other = running mean of vbar (avgrad-interp) or running max (max-interp)
        v = rho vbar + (1-rho) v_other
        x = x - wd alpha x - alpha (gamma (m + b3 n)/(sqrt(v)+eps) + (1-gamma) sign(u))

    where ``u`` is the Lion interpolation of its own moment and ``g``.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if x.shape != (state.dim,) or g.shape != x.shape:
        raise ContractError(f"dimension mismatch: state {state.dim}, x {x.shape}, g {g.shape}")
    if check:
        q.check()
        if not np.isfinite(g).all():
            raise NumericError("non-finite gradient")

    t = state.t + 1
    use_max = state.variant == "max-interp"
    other_prev = state.vmax if use_max else state.vtilde
    blk = _poly_kernel(t, use_max, q.beta1, q.beta2, q.beta3, q.rho, q.c, q.gamma,
                       q.beta1_lion, q.beta2_lion, float(alpha), float(eps), float(weight_decay),
                       x, g, state.m, state.n, state.m_lion, state.vbar, other_prev,
                       state.prev_grad)
    (x_dec, dg, m, n, u, m_lion, g_hat, sgn, g_tilde2, vbar, v_other, v, num, denom,
     route, x_new) = blk
    new_state = PolyState(t, m, n, m_lion, vbar,
                          state.vtilde if use_max else v_other,
                          v_other if use_max else state.vmax,
                          g, v, state.variant)
    trace = StepTrace(t, state.variant, q, alpha, eps, weight_decay, x, x_dec, g, dg,
                      state.m, state.n, state.vbar, other_prev, m, n, u, g_hat, sgn, g_tilde2,
                      vbar, v_other, v, num, denom, route > 0, x_new)
    return x_new, new_state, trace


class FrozenOptimizer:
    """Stepping handle that applies ``poly_step`` with a fixed ``q``."""

    def __init__(self, q, dim, variant="avgrad-interp", eps=1e-8, weight_decay=0.0):
        self.q = q.check()
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = PolyState.zeros(dim, variant)

    def step(self, x, g, alpha):
        x_new, self.state, _ = poly_step(self.state, self.q, x, g, alpha,
                                         self.eps, self.weight_decay)
        return x_new


def freeze(q, dim, variant="avgrad-interp", eps=1e-8, weight_decay=0.0):
    return FrozenOptimizer(q, dim, variant, eps, weight_decay)

