"""Closed-form convergence bounds and the effective learning-rate monotonicity check.

The bounds are evaluated exactly as stated; nothing here estimates constants
from data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .numkit import ContractError, DomainError

# Default constants used for the ρ-sweep shape checks.
DEFAULT_BOUND = dict(R=1.0, L=1.0, d=1, alpha=0.1, eps=1e-8, F_gap=1.0)


@dataclass(frozen=True)
class BoundParams:
    R: float = 1.0
    L: float = 1.0
    d: int = 1
    alpha: float = 0.1
    beta1: float = 0.0
    beta2: float = 0.9
    eps: float = 1e-8
    F_gap: float = 1.0
    T: int = 10_000
    rho: float = 0.0

    def __post_init__(self):
        if not (self.R > 0 and self.L > 0 and self.alpha > 0 and self.eps > 0):
            raise DomainError("R, L, alpha and eps must be positive")
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be an integer >= 1, got {self.d}")
        if int(self.T) != self.T or self.T < 1:
            raise DomainError(f"T must be an integer >= 1, got {self.T}")
        if not 0.0 <= self.beta1 < 1.0:
            raise DomainError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise DomainError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if self.F_gap < 0:
            raise DomainError("F_gap must be non-negative")
        if not 0.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [0, 1], got {self.rho}")

    def with_(self, **kw) -> "BoundParams":
        return replace(self, **kw)


def rho_bracket(rho: float, beta2: float) -> float:
    """[ln(ρ/β₂)]₊ with the value 0 at ρ = 0."""
    if beta2 <= 0:
        raise DomainError("beta2 must be positive for the interpolation bound")
    if rho <= 0:
        return 0.0
    return max(math.log(rho / beta2), 0.0)


def thm3_bound(p: BoundParams) -> float:
    """Bound on the average squared gradient norm of the Adam/AVGrad interpolation.

    Uses ρ_t = ρ/t, α_t = α/√t, no momentum.
    """
    if p.beta2 == 0:
        raise DomainError("beta2 = 0 makes ln(rho/beta2) undefined")
    T = float(p.T)
    q = p.rho + (1.0 - p.rho) * T
    sb = math.sqrt(1.0 - p.beta2)
    sq = math.sqrt(q)
    first = 2.0 * p.R * sq * p.F_gap / (p.alpha * T * sb)
    log_term = math.log1p(p.R**2 * q / (p.eps * (1.0 - p.beta2)))
    second = (2.0 * p.R * sq * p.d / (sb * T)) * (2.0 * p.R + p.alpha * p.L) * (
        log_term + T * rho_bracket(p.rho, p.beta2)
    )
    return first + second


@dataclass(frozen=True)
class Sweep:
    rows: list
    argmin: float
    min_bound: float


def thm3_sweep(p: BoundParams, rho_grid: Iterable[float]) -> Sweep:
    """Evaluate thm3_bound along a grid of ρ values; p.rho is ignored."""
    grid = [float(r) for r in rho_grid]
    if not grid:
        raise ContractError("rho grid is empty")
    rows = []
    for r in grid:
        if not 0.0 <= r <= 1.0:
            raise ContractError(f"rho grid value {r} outside [0, 1]")
        rows.append((r, thm3_bound(p.with_(rho=r))))
    i = int(np.argmin([b for _, b in rows]))
    return Sweep(rows=rows, argmin=rows[i][0], min_bound=rows[i][1])


def default_rho_grid(n: int = 11, beta2: Optional[float] = None) -> list:
    """Evenly spaced ρ values on [0, 1], rounded to avoid 0.9000000000000001, plus β₂."""
    grid = [round(float(r), 12) for r in np.linspace(0.0, 1.0, n)]
    if beta2 is not None and beta2 not in grid:
        grid.append(float(beta2))
    return sorted(set(grid))


def thm12_bound(p: BoundParams, with_momentum: bool = False) -> float:
    """AVGrad bound without momentum, or with momentum β₁ via the C and T̃ form."""
    T = float(p.T)
    sb = math.sqrt(1.0 - p.beta2)
    log_term = math.log1p(p.R**2 * T / ((1.0 - p.beta2) * p.eps))
    if not with_momentum:
        first = 2.0 * p.R * p.F_gap / (p.alpha * math.sqrt(T) * sb)
        second = 2.0 * p.R * p.d / (math.sqrt(T) * sb) * (2.0 * p.R + p.alpha * p.L) * log_term
        return first + second
    b1 = p.beta1
    t_tilde = T - b1 / (1.0 - b1)
    if t_tilde <= 0:
        raise DomainError(f"T - beta1/(1-beta1) = {t_tilde} must be positive")
    C = (
        p.alpha * p.R * p.L / (sb * (1.0 - b1))
        + 2.0 * b1 * p.alpha**2 * p.L**2 / ((1.0 - p.beta2) * (1.0 - b1) ** 3)
        + 12.0 * p.R**2 / math.sqrt(1.0 - b1)
    )
    first = 2.0 * (1.0 - b1) * p.R * math.sqrt(T) * p.F_gap / (p.alpha * sb * t_tilde)
    second = C * math.sqrt(T) * p.d / t_tilde * log_term
    return first + second


# ---------------------------------------------------------------------------
# Effective learning-rate monotonicity


def prop1_rho(beta2: float) -> Callable[[int], float]:
    """The boundary schedule ρ_t = 1/(t(1−β₂)+1)."""
    return lambda t: 1.0 / (t * (1.0 - beta2) + 1.0)


@dataclass(frozen=True)
class Prop1Result:
    monotone: bool
    first_violation: Optional[int]
    condition_holds: bool
    first_condition_break: Optional[int]

    @property
    def holds(self) -> bool:
        return self.monotone


# Relative slack for calling an increase real rather than round-off.
MONO_RTOL = 1e-12


def _lr_increased(prev_lr, lr):
    return lr > prev_lr * (1.0 + MONO_RTOL)


def prop1_check(
    beta2: float,
    rho_schedule: Callable[[int], float],
    T: int,
    stream,
    alpha: float = 1.0,
    eps: float = 0.0,
) -> Prop1Result:
    """Simulate v_t = ρ_t v̄_t + (1−ρ_t) ṽ_t and test α_t/(√v_t+ε) for elementwise non-increase.

    `stream` is either a (T, dim) array or a callable t -> gradient. Coordinates
    whose v is still 0 have effective rate 0 by convention, and the transition
    out of that state is not counted as an increase.
    """
    condition_holds, first_break = True, None
    bound = prop1_rho(beta2)
    vbar = vtil = prev_lr = prev_v = None
    first_violation = None
    for t in range(1, T + 1):
        g = np.asarray(stream[t - 1] if not callable(stream) else stream(t), dtype=float)
        if vbar is None:
            vbar = np.zeros_like(g)
            vtil = np.zeros_like(g)
        rho = float(rho_schedule(t))
        if condition_holds and rho > bound(t):
            condition_holds, first_break = False, t
        vbar = beta2 * vbar + (1.0 - beta2) * g * g
        vtil = (vbar + (t - 1) * vtil) / t
        v = rho * vbar + (1.0 - rho) * vtil
        lr = _effective(alpha / math.sqrt(t), v, eps)
        if prev_lr is not None and first_violation is None:
            live = prev_v > 0
            if np.any(_lr_increased(prev_lr[live], lr[live])):
                first_violation = t
        prev_lr, prev_v = lr, v
    return Prop1Result(first_violation is None, first_violation, condition_holds, first_break)


def _effective(a, v, eps):
    out = np.zeros_like(v)
    nz = v > 0
    out[nz] = a / (np.sqrt(v[nz]) + eps)
    return out


def prop1_trials(
    n_trials: int,
    T: int,
    dim: int = 10,
    beta2: float = 0.9,
    seed: int = 0,
    eps: float = 0.0,
    rho_schedule: Optional[Callable[[int], float]] = None,
    chunk: int = 20_000,
) -> np.ndarray:
    """Run many standard-normal gradient streams at once.

    Returns the first violation step per trial (0 if the trial stayed monotone).
    A stream stops being simulated at its first violation, which is all the
    verdict needs.
    """
    from .numkit import make_rng

    if rho_schedule is None:
        rho_schedule = prop1_rho(beta2)
    first = np.zeros(n_trials, dtype=np.int64)
    for start in range(0, n_trials, chunk):
        idx = np.arange(start, min(start + chunk, n_trials))
        rng = make_rng(seed, "prop1", start)
        n = idx.size
        vbar = np.zeros((n, dim))
        vtil = np.zeros((n, dim))
        prev_lr = np.zeros((n, dim))
        prev_v = np.zeros((n, dim))
        alive = np.arange(n)
        for t in range(1, T + 1):
            if alive.size == 0:
                break
            # Draw for every stream of the chunk so streams do not depend on who is alive.
            g = rng.standard_normal((n, dim))[alive]
            rho = float(rho_schedule(t))
            vb = beta2 * vbar[alive] + (1.0 - beta2) * g * g
            vt = (vb + (t - 1) * vtil[alive]) / t
            v = rho * vb + (1.0 - rho) * vt
            lr = np.where(v > 0, (1.0 / math.sqrt(t)) / (np.sqrt(v) + eps), 0.0)
            if t > 1:
                bad = ((prev_v[alive] > 0) & _lr_increased(prev_lr[alive], lr)).any(axis=1)
            else:
                bad = np.zeros(alive.size, dtype=bool)
            vbar[alive], vtil[alive], prev_lr[alive], prev_v[alive] = vb, vt, lr, v
            if bad.any():
                first[idx[alive[bad]]] = t
                alive = alive[~bad]
    return first


def crafted_adam_stream(big: float = 1.0, small: float = 1e-3, n_big: int = 1, T: int = 50, dim: int = 1):
    """Large gradients followed by tiny ones: Adam's v̄ decays and its effective rate rises."""
    g = np.full((T, dim), small)
    g[:n_big] = big
    return g
