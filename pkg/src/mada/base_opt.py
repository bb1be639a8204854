"""Standalone reference optimizers.

Each kind advances a :class:`BaseOptState` by one step through the same
``base_step`` call.  No bias correction unless asked for; weight decay is
decoupled and applied before the update.  These are deliberately written
independently of :mod:`mada.poly` so they can serve as its oracles.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .numkit import ContractError, NumericError

BASE_KINDS = ("sgdm", "adam", "amsgrad", "avgrad", "yogi", "adan", "lion")


@dataclass(frozen=True)
class BaseHyperParams:
    beta1: float = 0.9
    beta2: float = 0.999
    beta3: float = 0.0
    eps: float = 1e-8
    weight_decay: float = 0.0
    beta1_lion: float = 0.9
    beta2_lion: float = 0.99
    bias_correction: bool = False

    def __post_init__(self):
        for name in ("beta1", "beta2", "beta3", "beta1_lion", "beta2_lion"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ContractError(f"{name} must lie in [0, 1)")
        if self.eps < 0 or self.weight_decay < 0:
            raise ContractError("need eps >= 0 and weight_decay >= 0")


@dataclass
class BaseOptState:
    t: int
    m: np.ndarray
    vbar: np.ndarray
    v: np.ndarray
    vmax: np.ndarray
    vtilde: np.ndarray
    mbar: np.ndarray
    n: np.ndarray
    prev_grad: np.ndarray
    m_lion: np.ndarray

    @classmethod
    def zeros(cls, dim):
        z = np.zeros(dim)
        return cls(0, z, z, z, z, z, z, z, z, z)

    @property
    def dim(self):
        return self.m.shape[0]


def base_step(kind, state, hp, x, g, alpha):
    """One update of optimizer ``kind``; returns ``(x_new, new_state)``."""
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if x.shape != (state.dim,) or g.shape != x.shape:
        raise ContractError(f"dimension mismatch: state {state.dim}, x {x.shape}, g {g.shape}")
    if not np.isfinite(g).all():
        raise NumericError("non-finite gradient")
    if kind not in BASE_KINDS:
        raise ContractError(f"unknown optimizer kind {kind!r}")

    t = state.t + 1
    blk = _base_kernel(BASE_KINDS.index(kind), t, hp.beta1, hp.beta2, hp.beta3, hp.beta1_lion,
                       hp.beta2_lion, hp.eps, hp.weight_decay, hp.bias_correction, float(alpha),
                       x, g, state.m, state.vbar, state.v, state.vmax, state.vtilde, state.mbar,
                       state.n, state.prev_grad, state.m_lion)
    x_new, m, vbar, v, vmax, vtilde, mbar, n, prev_grad, m_lion = blk
    return x_new, BaseOptState(t, m, vbar, v, vmax, vtilde, mbar, n, prev_grad, m_lion)


# kind codes follow BASE_KINDS
_SGDM, _ADAM, _AMSGRAD, _AVGRAD, _YOGI, _ADAN, _LION = range(7)


@njit(cache=True)
def _base_kernel(kind, t, b1, b2, b3, bl1, bl2, eps, wd, bias_correction, alpha,
                 x, g, m0, vbar0, v0, vmax0, vtilde0, mbar0, n0, prev0, ml0):
    # rows: x_new m vbar v vmax vtilde mbar n prev_grad m_lion
    out = np.empty((10, x.size))
    for i in range(x.size):
        gi = g[i]
        xi = x[i] - wd * alpha * x[i]
        m, vbar, v, vmax, vtilde = m0[i], vbar0[i], v0[i], vmax0[i], vtilde0[i]
        mbar, n, prev, ml = mbar0[i], n0[i], prev0[i], ml0[i]

        if kind == _SGDM:
            m = b1 * m + gi
            x_new = xi - alpha * m
        elif kind == _LION:
            u = bl1 * ml + (1 - bl1) * gi
            ml = bl2 * ml + (1 - bl2) * gi
            x_new = xi - alpha * np.sign(u)
        else:
            if kind == _ADAN:
                dg = gi - (gi if t == 1 else prev)
                mbar = b1 * mbar + (1 - b1) * gi
                n = b3 * n + (1 - b3) * dg
                m = mbar + b3 * n
                gh = gi + b3 * dg
                vbar = b2 * vbar + (1 - b2) * (gh * gh)
                v = vbar
                prev = gi
            else:
                m = b1 * m + (1 - b1) * gi
                g2 = gi * gi
                if kind == _YOGI:
                    vbar = b2 * vbar + (1 - b2) * (vbar + g2 * np.sign(g2 - vbar))
                else:
                    vbar = b2 * vbar + (1 - b2) * g2
                if kind == _AMSGRAD:
                    vmax = max(vmax, vbar)
                    v = vmax
                elif kind == _AVGRAD:
                    vtilde = (vbar + (t - 1) * vtilde) / t
                    v = vtilde
                else:
                    v = vbar
            step_m, step_v = m, v
            if bias_correction:
                step_m = m / (1 - b1**t)
                step_v = v / (1 - b2**t)
            denom = np.sqrt(step_v) + eps
            x_new = xi - alpha * (step_m / denom) if denom > 0 else xi  # 0/0 -> 0 when eps = 0

        out[0, i] = x_new
        out[1, i] = m
        out[2, i] = vbar
        out[3, i] = v
        out[4, i] = vmax
        out[5, i] = vtilde
        out[6, i] = mbar
        out[7, i] = n
        out[8, i] = prev
        out[9, i] = ml
    return out


def effective_lr(state, alpha):
    """Per-coordinate ``alpha / sqrt(v)``, with untouched (v == 0) coordinates reported as 0."""
    v = state.v
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = alpha / np.sqrt(v[pos])
    return out
