"""Compactly supported test functions and the quadrature helpers used with them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["TestFunction", "bump", "random_bumps", "gauss_legendre_panels"]


@dataclass(frozen=True)
class TestFunction:
    """A smooth function with compact support ``[a, b]`` and its derivative."""

    __test__ = False  # keep pytest from collecting this class

    f: Callable
    df: Callable
    a: float
    b: float
    sup: float

    def __call__(self, x):
        return self.f(x)


def bump(center: float, half_width: float, amplitude: float = 1.0) -> TestFunction:
    """``amplitude * exp(1 - 1/(1 - s^2))`` with ``s = (x - center)/half_width``."""
    if half_width <= 0:
        raise ValueError("half_width must be positive")
    c, w, A = float(center), float(half_width), float(amplitude)

    def f(x):
        s = (np.asarray(x, dtype=float) - c) / w
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        si = s[inside]
        out[inside] = A * np.exp(1.0 - 1.0 / (1.0 - si * si))
        return float(out) if out.ndim == 0 else out

    def df(x):
        s = (np.asarray(x, dtype=float) - c) / w
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        si = s[inside]
        q = 1.0 - si * si
        out[inside] = A * np.exp(1.0 - 1.0 / q) * (-2.0 * si / (q * q)) / w
        return float(out) if out.ndim == 0 else out

    return TestFunction(f, df, c - w, c + w, abs(A))


def random_bumps(rng: np.random.Generator, n: int, lo: float, hi: float,
                 width=(0.2, 1.0), amplitude=(-2.0, 2.0)) -> list[TestFunction]:
    out = []
    for _ in range(n):
        w = rng.uniform(*width)
        c = rng.uniform(lo + w, hi - w)
        out.append(bump(c, w, rng.uniform(*amplitude)))
    return out


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_panels(breaks, order=16, max_width=math.inf):
    """Nodes and weights of composite Gauss-Legendre quadrature.

    ``breaks`` are panel boundaries (sorted, duplicates removed); panels wider
    than ``max_width`` are subdivided evenly.
    """
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    s, w = _GL_CACHE[order]
    breaks = np.unique(np.asarray(breaks, dtype=float))
    edges = [breaks[0]]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((hi - lo) / max_width))) if math.isfinite(max_width) else 1
        edges.extend(np.linspace(lo, hi, n + 1)[1:])
    edges = np.asarray(edges)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi + lo) + 0.5 * (hi - lo) * s
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()
