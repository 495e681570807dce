"""Dense numerical kernel: matrix product, activations with derivatives,
inverted dropout, categorical cross-entropy, and a finite-difference
gradient checker.

Everything operates on float64 numpy arrays. The matrix product accumulates
the inner dimension left to right so results are bitwise reproducible and
match a scalar triple-loop evaluation exactly.
"""

from __future__ import annotations

import numpy as np

ACTIVATIONS = ("softmax", "sigmoid", "relu", "tanh")

CCE_EPS = 1e-7


class ShapeError(ValueError):
    pass


class RngStream:
    """Seeded PCG64 stream; identical keys give identical sequences anywhere.

    The key is a tuple of non-negative integers fed to numpy's SeedSequence,
    so substreams are cheap to derive and collision-resistant.
    """

    def __init__(self, *key: int):
        self.key = tuple(int(k) for k in key)
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.key)))

    def uniform(self, low, high, shape):
        return self.gen.uniform(low, high, size=shape)

    def random(self, shape):
        return self.gen.random(size=shape)

    def permutation(self, n):
        return self.gen.permutation(n)


def check_finite(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite entries in {what}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with a fixed left-to-right summation order.

    Accumulates rank-1 terms over the inner dimension in index order, which
    is the same floating-point order as the naive triple loop.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += a[:, k : k + 1] * b[k : k + 1, :]
    return out


def activate(kind: str, x: np.ndarray) -> np.ndarray:
    """Apply an activation; softmax is row-wise with max subtraction."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "softmax":
        z = x - np.max(x, axis=-1, keepdims=True)
        e = np.exp(z)
        return e / np.sum(e, axis=-1, keepdims=True)
    raise ValueError(f"unknown activation {kind!r}")


def activate_grad(kind: str, y: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Backprop through an activation given its forward output y.

    relu uses y > 0, so the subgradient at exactly 0 is 0. softmax is the
    full row-wise Jacobian-vector product y * (u - <u, y>).
    """
    y = np.asarray(y, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if y.shape != upstream.shape:
        raise ShapeError(f"shape mismatch: {y.shape} vs {upstream.shape}")
    if kind == "sigmoid":
        return upstream * y * (1.0 - y)
    if kind == "tanh":
        return upstream * (1.0 - y * y)
    if kind == "relu":
        return upstream * (y > 0.0)
    if kind == "softmax":
        dot = np.sum(upstream * y, axis=-1, keepdims=True)
        return y * (upstream - dot)
    raise ValueError(f"unknown activation {kind!r}")


def categorical_cross_entropy(probs: np.ndarray, targets: np.ndarray):
    """Mean negative log-likelihood of the true class, with clipping.

    True-class values are clipped into [eps, 1-eps] before the log, so heads
    that emit values outside (0, 1) (relu, tanh) still produce a finite
    loss. The gradient is taken w.r.t. `probs` and is zero wherever the clip
    is active. Returns (loss, grad).
    """
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape or probs.ndim != 2:
        raise ShapeError(f"shape mismatch: {probs.shape} vs {targets.shape}")
    if not np.all((targets == 0.0) | (targets == 1.0)) or not np.all(
        np.sum(targets, axis=1) == 1.0
    ):
        raise ValueError("targets must be one-hot rows")
    n = probs.shape[0]
    p_true = np.sum(probs * targets, axis=1)
    clipped = np.clip(p_true, CCE_EPS, 1.0 - CCE_EPS)
    loss = -np.mean(np.log(clipped))
    active = (p_true > CCE_EPS) & (p_true < 1.0 - CCE_EPS)
    d_true = np.where(active, -1.0 / (n * clipped), 0.0)
    grad = targets * d_true[:, None]
    return loss, grad


def dropout_mask(shape, rate: float, rng: RngStream) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with probability rate, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate out of range: {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def dropout(x: np.ndarray, rate: float, rng: RngStream, training: bool) -> np.ndarray:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate out of range: {rate}")
    if not training or rate == 0.0:
        return np.array(x, dtype=np.float64, copy=True)
    return x * dropout_mask(np.shape(x), rate, rng)


def grad_check(loss_fn, params: dict, analytic: dict, h: float = 1e-5, tol: float = 1e-4):
    """Compare analytic gradients against central finite differences.

    loss_fn takes the params dict and returns a scalar; it must be
    deterministic. Returns {block: (max_rel_err, passed)} plus an "all"
    entry with the overall verdict.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    report = {}
    worst = 0.0
    for name, theta in params.items():
        a = np.asarray(analytic[name], dtype=np.float64)
        max_err = 0.0
        flat = theta.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn(params)
            flat[i] = orig - h
            down = loss_fn(params)
            flat[i] = orig
            num = (up - down) / (2.0 * h)
            err = abs(a_flat[i] - num) / max(abs(a_flat[i]), abs(num), 1e-8)
            max_err = max(max_err, err)
        report[name] = (max_err, max_err <= tol)
        worst = max(worst, max_err)
    report["all"] = (worst, worst <= tol)
    return report
