"""Exact reference profiles: interval indicators and piecewise-linear data.

Everything here uses only comparisons and field operations, so
:class:`fractions.Fraction` inputs give exact results.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from importlib import resources
from typing import NamedTuple

import numpy as np

from .datum import PiecewiseLinear
from .errors import CausticHit

__all__ = [
    "StepZDProfile",
    "SemigroupGap",
    "step_profile",
    "zd_unit_step",
    "zd_step",
    "zd_piecewise_linear",
    "tent",
    "semigroup_gap",
    "GOLDEN_TIMES",
    "golden_grid",
    "golden_table",
    "golden_csv",
    "load_golden",
]


class StepZDProfile(NamedTuple):
    """Affine pieces ``(lo, hi, intercept, slope)`` on ``]lo, hi]``; zero elsewhere."""

    t: float
    pieces: list

    @property
    def breakpoints(self) -> list:
        pts = []
        for lo, hi, _, _ in self.pieces:
            pts.extend([lo, hi])
        return sorted(set(pts))

    def mass(self):
        # exact integral of the affine pieces
        return sum((hi - lo) * (c + m * (lo + hi) / 2) for lo, hi, c, m in self.pieces)


def step_profile(t) -> StepZDProfile:
    """Profile of the limit for the indicator of ``]-1, 1[`` at ``t > 0``."""
    if not t > 0:
        raise ValueError("the profile table is stated for t > 0")
    two_t = 2 * t
    if t <= 1:
        pieces = [(-1, two_t - 1, 1 / two_t, 1 / two_t),
                  (two_t - 1, 1, 1, 0),
                  (1, two_t + 1, 1 + 1 / two_t, -1 / two_t)]
    else:
        pieces = [(-1, 1, 1 / two_t, 1 / two_t),
                  (1, two_t - 1, 1 / t, 0),
                  (two_t - 1, two_t + 1, 1 + 1 / two_t, -1 / two_t)]
    return StepZDProfile(t, pieces)


def zd_unit_step(t, x):
    """Limit for the indicator of ``]-1, 1[``, with the half-open conventions of the table.

    Negative times use ``ZD(-t, -x) = ZD(t, x)``; ``t = 0`` returns the datum.
    """
    if t == 0:
        return 1 if -1 < x < 1 else 0
    if t < 0:
        t, x = -t, -x
    if x <= -1 or x > 2 * t + 1:
        return 0
    if t <= 1:
        if x <= 2 * t - 1:
            return (x + 1) / (2 * t)
        if x <= 1:
            return 1
        return 1 - (x - 1) / (2 * t)
    if x <= 1:
        return (x + 1) / (2 * t)
    if x <= 2 * t - 1:
        return 1 / t
    return 1 - (x - 1) / (2 * t)


def zd_step(t, x, left=-1, right=1, height=1):
    """Limit for ``height`` times the indicator of ``]left, right[``.

    Reduced to the unit interval by ``x -> (x - c)/r``, ``t -> t height / r``
    with centre ``c`` and half-length ``r``.
    """
    if not right > left:
        raise ValueError("need left < right")
    if height == 0:
        return 0
    c = (left + right) / 2
    r = (right - left) / 2
    return height * zd_unit_step(t * height / r, (x - c) / r)


def _pl_parts(u):
    if isinstance(u, PiecewiseLinear):
        return [float(b) for b in u.breakpoints], [float(v) for v in u.values]
    b, v = u
    return list(b), list(v)


def zd_piecewise_linear(u, t, x):
    """Alternating sum over the exact roots of ``y + 2t u(y) = x``.

    ``u`` is a :class:`PiecewiseLinear` or a ``(breakpoints, values)`` pair
    (use Fractions for exact arithmetic); it vanishes outside its
    breakpoints.  Raises :class:`CausticHit` when ``x`` is a critical value.
    """
    b, v = _pl_parts(u)
    if t == 0:
        for i in range(len(b) - 1):
            if b[i] <= x < b[i + 1]:
                return v[i] + (v[i + 1] - v[i]) * (x - b[i]) / (b[i + 1] - b[i])
        return v[-1] if x == b[-1] else 0
    # (root, value) pairs; affine pieces are half-open [b_i, b_{i+1})
    hits = []
    if x < b[0]:
        hits.append((x, 0))
    for i in range(len(b) - 1):
        m = (v[i + 1] - v[i]) / (b[i + 1] - b[i])
        slope = 1 + 2 * t * m
        f0 = b[i] + 2 * t * v[i]
        if slope == 0:
            if x == f0:
                raise CausticHit(f"x={x} lies on a flat piece of the characteristic map")
            continue
        y = b[i] + (x - f0) / slope
        if b[i] <= y < b[i + 1]:
            hits.append((y, v[i] + m * (y - b[i])))
    f_end = b[-1] + 2 * t * v[-1]
    if x == f_end:
        hits.append((b[-1], v[-1]))
    if x > b[-1]:
        hits.append((x, 0))
    hits.sort(key=lambda p: p[0])
    if len(hits) % 2 == 0:
        raise CausticHit(f"x={x} is a critical value at t={t}")
    total = 0
    for k, (_, val) in enumerate(hits):
        total = total + val if k % 2 == 0 else total - val
    return total


def tent():
    """Breakpoints and values of the limit of the unit step at time 1, exactly."""
    return [Fraction(-1), Fraction(1), Fraction(3)], [Fraction(0), Fraction(1), Fraction(0)]


class SemigroupGap(NamedTuple):
    x_witness: float
    gap: float


def _gap_at(s, x):
    return abs(zd_piecewise_linear(tent(), s, x) - zd_unit_step(1 + s, x))


def semigroup_gap(s, x=None, n: int = 6001) -> SemigroupGap:
    """``|ZD[ZD[step](1)](s) - ZD[step](1 + s)|``.

    With ``x`` given, the gap at that point; otherwise the largest gap over
    a uniform grid of ``[-2, 4]`` enriched with the kinks of both profiles.
    Exact when ``s`` and ``x`` are Fractions.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in ]0, 1[")
    if x is not None:
        return SemigroupGap(x, _gap_at(s, x))
    exact = isinstance(s, Fraction)
    grid = [Fraction(-2) + Fraction(6 * k, n - 1) for k in range(n)] if exact \
        else list(np.linspace(-2.0, 4.0, n))
    grid += [-1, 1, 3, 2 * s + 1, 2 * (1 + s) - 1]
    best = max(grid, key=lambda xx: _gap_at(s, xx))
    return SemigroupGap(best, _gap_at(s, best))


# {{{ golden fixture

GOLDEN_TIMES = (-2.0, -0.5, 0.25, 0.5, 1.0, 2.0, 5.0)


def golden_grid() -> np.ndarray:
    # dyadic pitch so every breakpoint of every profile is a node
    return np.arange(-160, 161) / 16.0


def golden_table():
    rows = []
    for t in GOLDEN_TIMES:
        for x in golden_grid():
            rows.append((t, float(x), float(zd_unit_step(t, float(x)))))
    return rows


def golden_csv() -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "value"])
    for t, x, val in golden_table():
        w.writerow([f"{t:.17g}", f"{x:.17g}", f"{val:.17g}"])
    return buf.getvalue()


def load_golden(text: str | None = None):
    """Rows ``(t, x, value)`` of the shipped step fixture (or of ``text``)."""
    if text is None:
        text = resources.files("zdlimit").joinpath("data/step_golden.csv").read_text()
    return [(float(r["t"]), float(r["x"]), float(r["value"]))
            for r in csv.DictReader(io.StringIO(text))]

# }}}
