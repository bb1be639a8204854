"""Shared numeric helpers: learning-rate schedules, seeded RNG streams and
central finite differences."""

import math
import zlib
from dataclasses import dataclass

import numpy as np

SCHEDULE_KINDS = ("constant", "inv-sqrt", "cosine-warmup")


class NumericError(ArithmeticError):
    pass


class ContractError(ValueError):
    """Caller violated a documented precondition (shapes, sizes, empties)."""


class DomainError(ValueError):
    """Value outside the set an operation is defined on."""


@dataclass(frozen=True)
class Schedule:
    kind: str = "constant"
    peak: float = 1e-3
    final: float = 0.0
    warmup_steps: int = 0
    total_steps: int = 1

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.peak > 0:
            raise ValueError("schedule peak must be > 0")
        if self.final < 0:
            raise ValueError("schedule final must be >= 0")
        if self.warmup_steps < 0 or self.total_steps < 1:
            raise ValueError("bad schedule step counts")
        if self.kind == "cosine-warmup" and self.warmup_steps >= self.total_steps:
            raise ValueError("warmup_steps must be < total_steps")

    def __call__(self, t):
        return schedule_at(self, t)


def schedule_at(s, t):
    """Learning rate at 1-based step ``t``."""
    if t < 1:
        raise IndexError(f"step index must be >= 1, got {t}")
    if s.kind == "constant":
        return s.peak
    if s.kind == "inv-sqrt":
        return s.peak / math.sqrt(t)
    if t > s.total_steps:
        raise IndexError(f"step {t} beyond total_steps={s.total_steps}")
    if t <= s.warmup_steps:
        return s.peak * t / s.warmup_steps
    frac = (t - s.warmup_steps) / (s.total_steps - s.warmup_steps)
    return s.final + 0.5 * (s.peak - s.final) * (1.0 + math.cos(math.pi * frac))


def _label_word(label):
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    return zlib.crc32(str(label).encode())


def make_rng(seed, *labels):
    """Independent generator for ``(seed, *labels)``.

    Labels may be strings or integers (typically a step index); the same
    arguments always give a bit-identical stream.
    """
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    words += [_label_word(lab) for lab in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def central_diff(f, x0, h=1e-5):
    if not h > 0:
        raise ValueError("h must be > 0")
    fp = f(x0 + h)
    fm = f(x0 - h)
    if not (math.isfinite(fp) and math.isfinite(fm)):
        raise NumericError(f"non-finite function value near x0={x0}")
    return (fp - fm) / (2.0 * h)

