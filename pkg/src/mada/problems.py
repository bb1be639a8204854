"""Differentiable objective oracles.

Every problem maps ``(x, t, seed)`` to ``(loss, grad)`` with an exact
analytic gradient.  Deterministic problems ignore ``t`` and ``seed``;
stochastic ones draw their minibatch from ``make_rng(seed, t)`` so a call
is a pure function of its arguments.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .numkit import ContractError, DomainError, make_rng

PROBLEM_KINDS = ("quadratic", "rosenbrock", "logistic-synth", "reddi-online", "tiny-mlp")


class Problem:
    kind = None
    dim = 0
    box = None  # optional (lo, hi) applied to every coordinate

    def eval(self, x, t, seed):
        raise NotImplementedError

    def initial_point(self, seed):
        return np.zeros(self.dim)

    def project(self, x):
        if self.box is None:
            return x
        return np.minimum(np.maximum(x, self.box[0]), self.box[1])


def evaluate(p, x, t=1, seed=0):
    """Checked entry point: ``(loss, grad)`` of ``p`` at ``x`` for step ``t``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.dim,):
        raise ContractError(f"{p.kind}: expected point of length {p.dim}, got shape {x.shape}")
    if p.box is not None and (np.any(x < p.box[0]) or np.any(x > p.box[1])):
        raise DomainError(f"{p.kind}: point outside box {p.box}")
    return p.eval(x, t, seed)


class Quadratic(Problem):
    """``0.5 (x - c)^T A (x - c)`` with optional additive gradient noise."""

    kind = "quadratic"

    def __init__(self, hessian, center=None, noise=0.0):
        self.A = np.asarray(hessian, dtype=np.float64)
        self.dim = self.A.shape[0]
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=np.float64)
        self.noise = float(noise)

    @classmethod
    def random(cls, dim, seed=0, cond=100.0, noise=0.0):
        rng = make_rng(seed, "quadratic")
        Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eig = np.geomspace(1.0, cond, dim) / math.sqrt(cond)
        A = (Q * eig) @ Q.T
        A = 0.5 * (A + A.T)
        return cls(A, center=rng.standard_normal(dim), noise=noise)

    def eval(self, x, t, seed):
        d = x - self.center
        Ad = self.A @ d
        loss = 0.5 * float(d @ Ad)
        if self.noise:
            Ad = Ad + self.noise * make_rng(seed, "quadratic-noise", t).standard_normal(self.dim)
        return loss, Ad

    def initial_point(self, seed):
        return make_rng(seed, "x0").standard_normal(self.dim)


class Rosenbrock(Problem):
    kind = "rosenbrock"

    def __init__(self, dim=2, a=1.0, b=100.0):
        if dim < 2:
            raise ContractError("rosenbrock needs dim >= 2")
        self.dim, self.a, self.b = dim, float(a), float(b)

    def eval(self, x, t, seed):
        x0, x1 = x[:-1], x[1:]
        r = x1 - x0**2
        loss = float(np.sum(self.b * r**2 + (self.a - x0) ** 2))
        grad = np.zeros_like(x)
        grad[:-1] = -4.0 * self.b * x0 * r - 2.0 * (self.a - x0)
        grad[1:] += 2.0 * self.b * r
        return loss, grad

    def initial_point(self, seed):
        x = np.ones(self.dim)
        x[0::2] = -1.2
        return x


class LogisticSynth(Problem):
    """Binary logistic regression on two Gaussian clusters at +-separation/2
    along a random unit direction; labels in {-1, +1}."""

    kind = "logistic-synth"

    def __init__(self, dim=10, n_samples=512, separation=2.0, batch_size=32, l2=1e-3, data_seed=0):
        rng = make_rng(data_seed, "logistic-data")
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        y = np.where(rng.random(n_samples) < 0.5, -1.0, 1.0)
        X = rng.standard_normal((n_samples, dim)) + 0.5 * separation * y[:, None] * direction
        self.dim, self.X, self.y = dim, X, y
        self.batch_size = batch_size
        self.l2 = float(l2)

    def batch(self, t, seed):
        n = self.y.shape[0]
        if not self.batch_size or self.batch_size >= n:
            return self.X, self.y
        idx = make_rng(seed, "logistic-batch", t).integers(0, n, self.batch_size)
        return self.X[idx], self.y[idx]

    def eval(self, x, t, seed):
        X, y = self.batch(t, seed)
        z = -y * (X @ x)
        # softplus(z) and its derivative sigmoid(z), both overflow-safe
        loss = float(np.mean(np.logaddexp(0.0, z))) + 0.5 * self.l2 * float(x @ x)
        s = 0.5 * (1.0 + np.tanh(0.5 * z))
        grad = X.T @ (-y * s) / y.shape[0] + self.l2 * x
        return loss, grad


REDDI_PERIOD = 101
REDDI_BIG = 1010.0
REDDI_SMALL = -10.0


def reddi_grad(t, x):
    """Gradient of the adversarial linear loss at step ``t`` (x only checked)."""
    if t < 1:
        raise ContractError("step index must be >= 1")
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [-1, 1]")
    return REDDI_BIG if t % REDDI_PERIOD == 1 else REDDI_SMALL


def reddi_average_regret(history):
    """Running average of ``g_t(x_t) - g_t(-1)``; ``history[0]`` is played at t=1."""
    xs = np.asarray(history, dtype=np.float64)
    if xs.size == 0:
        raise ContractError("empty history")
    if np.any(np.abs(xs) > 1.0):
        raise DomainError("history leaves [-1, 1]")
    t = np.arange(1, xs.size + 1)
    coef = np.where(t % REDDI_PERIOD == 1, REDDI_BIG, REDDI_SMALL)
    return np.cumsum(coef * (xs + 1.0)) / t


class ReddiOnline(Problem):
    kind = "reddi-online"
    dim = 1
    box = (-1.0, 1.0)

    def __init__(self, x0=1.0):
        self.x0 = float(x0)

    def eval(self, x, t, seed):
        coef = reddi_grad(t, float(x[0]))
        return coef * float(x[0]), np.array([coef])

    def initial_point(self, seed):
        return np.array([self.x0])


@dataclass
class TinyMlpSpec:
    layer_widths: tuple = (2, 16, 16, 2)
    n_samples: int = 512
    separation: float = 2.0
    label_noise: float = 0.05
    batch_size: int = 64
    data_seed: int = 0
    X: np.ndarray = field(default=None, repr=False)
    y: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.layer_widths = tuple(int(w) for w in self.layer_widths)
        if len(self.layer_widths) < 2 or self.layer_widths[0] != 2:
            raise ContractError("layer_widths must start with input width 2 and have >= 2 entries")
        if self.X is None:
            self.X, self.y = xor_clouds(self.n_samples, self.separation, self.label_noise,
                                        self.data_seed, self.layer_widths[-1])

    @property
    def n_params(self):
        w = self.layer_widths
        return sum((a + 1) * b for a, b in zip(w[:-1], w[1:]))


def xor_clouds(n, separation, label_noise, seed, n_classes=2):
    """Four Gaussian blobs at (+-s/2, +-s/2); class is the XOR of the quadrant signs."""
    rng = make_rng(seed, "mlp-data")
    quad = rng.integers(0, 4, n)
    sx = np.where(quad & 1, 1.0, -1.0)
    sy = np.where(quad & 2, 1.0, -1.0)
    X = 0.5 * separation * np.stack([sx, sy], axis=1) + 0.5 * rng.standard_normal((n, 2))
    y = ((sx * sy) > 0).astype(np.int64)
    flip = rng.random(n) < label_noise
    y = np.where(flip, 1 - y, y) % n_classes
    return X, y


def unpack_mlp(spec, w):
    layers, k = [], 0
    for a, b in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        W = w[k:k + a * b].reshape(a, b)
        k += a * b
        layers.append((W, w[k:k + b]))
        k += b
    return layers


def mlp_loss_grad(spec, w, X, y):
    """Mean softmax cross-entropy of a tanh MLP on ``(X, y)`` and its exact gradient."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (spec.n_params,):
        raise ContractError(f"tiny-mlp expects {spec.n_params} parameters, got shape {w.shape}")
    layers = unpack_mlp(spec, w)
    acts = [X]
    h = X
    for i, (W, b) in enumerate(layers):
        h = h @ W + b
        if i < len(layers) - 1:
            h = np.tanh(h)
        acts.append(h)
    logits = acts[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    n = X.shape[0]
    loss = float(np.mean(logz - shifted[np.arange(n), y]))

    delta = np.exp(shifted - logz[:, None])
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads = []
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        grads.append((acts[i].T @ delta, delta.sum(axis=0)))
        if i > 0:
            delta = (delta @ W.T) * (1.0 - acts[i] ** 2)
    grad = np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in reversed(grads)])
    return loss, grad


def mlp_eval(spec, w, t, seed):
    n = spec.y.shape[0]
    if spec.batch_size and spec.batch_size < n:
        idx = make_rng(seed, "mlp-batch", t).integers(0, n, spec.batch_size)
        return mlp_loss_grad(spec, w, spec.X[idx], spec.y[idx])
    return mlp_loss_grad(spec, w, spec.X, spec.y)


class TinyMlp(Problem):
    kind = "tiny-mlp"

    def __init__(self, spec=None, **kw):
        self.spec = spec if spec is not None else TinyMlpSpec(**kw)
        self.dim = self.spec.n_params

    def eval(self, x, t, seed):
        return mlp_eval(self.spec, x, t, seed)

    def full_loss(self, x):
        return mlp_loss_grad(self.spec, x, self.spec.X, self.spec.y)[0]

    def initial_point(self, seed):
        rng = make_rng(seed, "mlp-init")
        parts = []
        for a, b in zip(self.spec.layer_widths[:-1], self.spec.layer_widths[1:]):
            lim = math.sqrt(6.0 / (a + b))
            parts += [rng.uniform(-lim, lim, a * b), np.zeros(b)]
        return np.concatenate(parts)


def make_problem(kind, **params):
    """Build a problem from its kind name and keyword parameters."""
    if kind == "quadratic":
        if "hessian" in params:
            return Quadratic(params["hessian"], params.get("center"), params.get("noise", 0.0))
        return Quadratic.random(int(params.get("dim", 10)), seed=int(params.get("seed", 0)),
                                cond=float(params.get("cond", 100.0)),
                                noise=float(params.get("noise", 0.0)))
    if kind == "rosenbrock":
        return Rosenbrock(int(params.get("dim", 2)), params.get("a", 1.0), params.get("b", 100.0))
    if kind == "logistic-synth":
        return LogisticSynth(dim=int(params.get("dim", 10)),
                             n_samples=int(params.get("n_samples", 512)),
                             separation=float(params.get("separation", 2.0)),
                             batch_size=int(params.get("batch_size", 32)),
                             l2=float(params.get("l2", 1e-3)),
                             data_seed=int(params.get("seed", 0)))
    if kind == "reddi-online":
        return ReddiOnline(x0=float(params.get("x0", 1.0)))
    if kind == "tiny-mlp":
        widths = params.get("widths", (2, 16, 16, 2))
        if isinstance(widths, str):
            widths = [int(w) for w in widths.replace(",", " ").split()]
        return TinyMlp(layer_widths=widths,
                       n_samples=int(params.get("n_samples", 512)),
                       separation=float(params.get("separation", 2.0)),
                       label_noise=float(params.get("label_noise", 0.05)),
                       batch_size=int(params.get("batch_size", 64)),
                       data_seed=int(params.get("seed", 0)))
    raise ContractError(f"unknown problem kind {kind!r}")
