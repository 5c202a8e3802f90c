"""Gauss-Legendre rules and shifted Legendre polynomials on [0, 1]."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights on [0,1] (shape (n,)) or [0,1]^2 (shape (n, 2))."""

    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


def _legendre_and_derivative(n, x):
    # standard Legendre P_n on [-1,1] by the three-term recurrence
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def _gauss_nodes(n):
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def gauss_rule(n):
    """n-point Gauss-Legendre rule on [0, 1], exact up to degree 2n-1."""
    if n < 1:
        raise ValueError("gauss_rule needs n >= 1, got %r" % (n,))
    x, w = _gauss_nodes(int(n))
    pts = 0.5 * (x + 1.0)
    wts = 0.5 * w
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts)


def tensor_rule(n):
    """Tensor product of gauss_rule(n) with itself on [0,1]^2.

    Points are ordered with the first coordinate running fastest.
    """
    g = gauss_rule(n)
    X, Y = np.meshgrid(g.points, g.points, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    wts = np.outer(g.weights, g.weights).ravel()
    return QuadratureRule(pts, wts)


def legendre_eval(q, t, derivative=False):
    """Shifted Legendre polynomials L_0..L_q on [0,1].

    Returns an array of shape (q+1,) + shape(t). With ``derivative=True`` a
    pair (values, derivatives) is returned.
    """
    t = np.asarray(t, dtype=float)
    s = 2.0 * t - 1.0
    vals = np.empty((q + 1,) + t.shape)
    ders = np.empty((q + 1,) + t.shape)
    vals[0] = 1.0
    ders[0] = 0.0
    if q >= 1:
        vals[1] = s
        ders[1] = 2.0
    for k in range(2, q + 1):
        vals[k] = ((2 * k - 1) * s * vals[k - 1] - (k - 1) * vals[k - 2]) / k
        # d/dt P_k(s) with ds/dt = 2
        ders[k] = ders[k - 2] + 2.0 * (2 * k - 1) * vals[k - 1]
    if derivative:
        return vals, ders
    return vals
