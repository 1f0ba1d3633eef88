"""Dense float64 vector/matrix helpers, activations, and seeded randomness.

Vectors are 1-D float64 numpy arrays, matrices are 2-D row-major float64
arrays. Shape-checked operations raise ValueError naming both shapes.
All functions are pure; ``Rng`` is the only stateful object and is owned
by a single caller.
"""

from __future__ import annotations

import numpy as np

# Type aliases used across the package.
Vec = np.ndarray  # 1-D float64
Mat = np.ndarray  # 2-D float64, row-major


def vec(values) -> Vec:
    """Build a 1-D float64 vector."""
    return np.asarray(values, dtype=np.float64).reshape(-1)


def matrix(values) -> Mat:
    """Build a 2-D float64 matrix."""
    out = np.asarray(values, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {out.shape}")
    return out


def matvec(m: Mat, v: Vec) -> Vec:
    """Matrix-vector product."""
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(
            f"matvec shape mismatch: matrix {m.shape} times vector {v.shape}"
        )
    return m @ v


def concat(a: Vec, b: Vec) -> Vec:
    """Concatenate two vectors, a's elements first."""
    return np.concatenate((np.asarray(a, dtype=np.float64).reshape(-1),
                           np.asarray(b, dtype=np.float64).reshape(-1)))


def sigmoid(v: Vec) -> Vec:
    """Elementwise logistic function, overflow-safe on both tails."""
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    e = np.exp(v[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def tanh_act(v: Vec) -> Vec:
    """Elementwise hyperbolic tangent."""
    return np.tanh(np.asarray(v, dtype=np.float64))


def softplus(v: Vec) -> Vec:
    """Elementwise log(1 + e^x), overflow-safe."""
    v = np.asarray(v, dtype=np.float64)
    return np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))


def softmax(scores: Vec) -> Vec:
    """Softmax with max-subtraction; requires a nonempty input."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("softmax requires a nonempty input")
    shifted = scores - scores.max()
    e = np.exp(shifted)
    return e / e.sum()


def hadamard(a: Vec, b: Vec) -> Vec:
    """Elementwise product of two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


class Rng:
    """Counter-based deterministic random generator (Philox), single owner.

    The same seed produces the same draw sequence on every run and
    platform; no global random state is touched anywhere.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def uniform(self, low: float, high: float, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def lognormal(self, mean: float = 0.0, sigma: float = 1.0, size=None):
        return self._gen.lognormal(mean, sigma, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, n, size=None, replace=True, p=None):
        return self._gen.choice(n, size=size, replace=replace, p=p)


def init_uniform(rng: Rng, rows: int, cols: int, scale: float) -> Mat:
    """Matrix of i.i.d. uniform entries in [-scale, +scale]."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    return rng.uniform(-scale, scale, (rows, cols))
