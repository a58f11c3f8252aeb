"""Closed-form limit for rational data through the characteristic polynomial.

For ``u0 = P/Q`` with simple poles ``p_j`` (``Im p_j > 0``) and their
conjugates, the roots of ``(y - x) Q(y) + 2t P(y)`` that move into the upper
half-plane when ``x`` does are exactly the ``N + 1`` nodes of a small
Cauchy-type linear system whose first unknown ``lam`` gives the limit as
``-2 Re lam``.  Solving that system in closed form reduces ``lam`` to a sum
of roots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .characteristics import TOL_CAUSTIC, ZDField
from .datum import Rational
from .errors import CausticHit

__all__ = [
    "REAL_TOL",
    "REPEAT_TOL",
    "SIGMA",
    "CharPoly",
    "RootClassification",
    "LambdaSystem",
    "char_poly",
    "classify_roots",
    "lambda_direct",
    "lambda_system",
    "numerator_residual",
    "cauchy_vandermonde_matrices",
    "cauchy_vandermonde_ratio",
    "zd_rational",
    "zd_rational_grid",
]

REAL_TOL = 1e-9
REPEAT_TOL = 1e-8
SIGMA = 1e-6
MAX_POLES = 12


@dataclass
class CharPoly:
    """``(y - x) Q(y) + 2t P(y)``, coefficients highest degree first (monic)."""

    coeffs: np.ndarray
    t: float
    x: complex

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, y):
        return np.polyval(self.coeffs, y)

    def roots(self) -> np.ndarray:
        """Companion-matrix roots polished by two Newton steps."""
        r = np.roots(self.coeffs).astype(complex)
        dc = np.polyder(self.coeffs)
        for _ in range(2):
            dp = np.polyval(dc, r)
            step = np.where(dp != 0, np.polyval(self.coeffs, r) / np.where(dp != 0, dp, 1), 0)
            r = r - step
        return r


@dataclass
class RootClassification:
    real_roots: np.ndarray
    upper_roots: np.ndarray
    lower_roots: np.ndarray
    selected: np.ndarray
    deriv_signs: np.ndarray
    reclassified: bool = False

    @property
    def ell(self) -> int:
        return (self.real_roots.size - 1) // 2

    @property
    def all_roots(self) -> np.ndarray:
        return np.concatenate([self.real_roots, self.upper_roots, self.lower_roots])


class LambdaSystem(NamedTuple):
    lam: complex
    mu: np.ndarray
    condition: float


def _check_size(d: Rational):
    if d.N > MAX_POLES:
        raise ValueError(f"at most {MAX_POLES} pole pairs are supported, got {d.N}")


def char_poly(d: Rational, t: float, x: complex) -> CharPoly:
    _check_size(d)
    Q = np.asarray(d.denominator(), dtype=complex)
    P = np.asarray(d.numerator(), dtype=complex)
    lead = np.polymul([1.0, -x], Q)
    tail = np.concatenate([np.zeros(lead.size - P.size, dtype=complex), 2.0 * t * P])
    coeffs = lead + tail
    if np.isreal(x) and np.all(np.abs(coeffs.imag) <= 1e-12 * (1 + np.abs(coeffs.real))):
        coeffs = coeffs.real.astype(complex)
    return CharPoly(coeffs, float(t), x)


def _check_simple(roots):
    if roots.size > 1:
        gaps = np.abs(roots[:, None] - roots[None, :])
        gaps[np.diag_indices_from(gaps)] = np.inf
        if np.min(gaps) <= REPEAT_TOL:
            raise CausticHit("characteristic polynomial has a repeated root")


def _upper_mask(roots, t, d):
    # real roots move up iff 1 + 2t u0'(y) > 0
    real = np.abs(roots.imag) <= REAL_TOL * (1.0 + np.abs(roots.real))
    g = 1.0 + 2.0 * t * d.deriv(roots.real)
    return np.where(real, g > 0, roots.imag > 0), real


def classify_roots(cp: CharPoly, d: Rational, t: float, x: float) -> RootClassification:
    """Split the roots into real / upper / lower and select the ``N + 1`` upward movers."""
    roots = cp.roots()
    _check_simple(roots)
    upper, real = _upper_mask(roots, t, d)

    # cross-check: at x + i sigma the selected roots are those with Im > 0
    reclassified = False
    if t != 0:
        shifted = char_poly(d, t, x + 1j * SIGMA).roots()
        rows, cols = linear_sum_assignment(np.abs(roots[:, None] - shifted[None, :]))
        moved_up = np.zeros(roots.size, dtype=bool)
        moved_up[rows] = shifted[cols].imag > 0
        if not np.array_equal(moved_up, upper):
            upper = moved_up
            reclassified = True

    n_sel = (roots.size + 1) // 2
    if int(upper.sum()) != n_sel:
        raise CausticHit(f"selected {int(upper.sum())} roots instead of {n_sel}")

    real_roots = np.sort(roots[real].real)
    nonreal = roots[~real]
    upper_roots = nonreal[nonreal.imag > 0]
    lower_roots = nonreal[nonreal.imag < 0]
    upper_roots = upper_roots[np.argsort(upper_roots.real)]
    lower_roots = lower_roots[np.argsort(lower_roots.real)]
    selected = roots[upper]
    selected = selected[np.lexsort((selected.imag, selected.real))]
    signs = np.where(1.0 + 2.0 * t * d.deriv(real_roots) > 0, 1, -1)
    return RootClassification(real_roots, upper_roots, lower_roots, selected, signs,
                              reclassified)


def _selected_roots(d: Rational, t: float, x: float) -> np.ndarray:
    return classify_roots(char_poly(d, t, x), d, t, x).selected


def lambda_direct(d: Rational, t: float, x: float) -> complex:
    """``(sum of selected roots - sum p_j - x) / (2t)``."""
    if t == 0:
        raise ValueError("t = 0: the limit is u0 itself")
    sel = _selected_roots(d, t, x)
    return complex((np.sum(sel) - np.sum(d.poles) - x) / (2.0 * t))


def lambda_system(d: Rational, t: float, x: float) -> LambdaSystem:
    """Solve ``lam + sum_j mu_j / (y - p_j) = (y - x)/(2t)`` at the selected roots."""
    if t == 0:
        raise ValueError("t = 0: the limit is u0 itself")
    sel = _selected_roots(d, t, x)
    gaps = np.abs(sel[:, None] - d.poles[None, :]) if d.N else np.ones((sel.size, 0))
    if gaps.size and np.min(gaps) <= REPEAT_TOL:
        raise CausticHit("a selected root coincides with a pole")
    M = np.ones((sel.size, d.N + 1), dtype=complex)
    if d.N:
        M[:, 1:] = 1.0 / (sel[:, None] - d.poles[None, :])
    rhs = (sel - x) / (2.0 * t)
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1e13:
        raise CausticHit(f"singular node system (condition {cond:.3g})")
    sol = np.linalg.solve(M, rhs)
    return LambdaSystem(complex(sol[0]), sol[1:], cond)


def numerator_residual(d: Rational, lam: complex, mu, nodes) -> np.ndarray:
    """``u0(y) + lam + sum mu_j/(y - p_j)`` at complex ``nodes``."""
    nodes = np.asarray(nodes, dtype=complex)
    out = d.complex_value(nodes) + lam
    for m, p in zip(np.asarray(mu), d.poles):
        out = out + m / (nodes - p)
    return out


def _check_distinct(z, p):
    pts = np.concatenate([z, p])
    if pts.size > 1:
        gaps = np.abs(pts[:, None] - pts[None, :])
        gaps[np.diag_indices_from(gaps)] = np.inf
        scale = max(1.0, float(np.max(np.abs(pts))))
        if np.min(gaps) <= 1e-14 * scale:
            raise ValueError("nodes must be pairwise distinct")


def cauchy_vandermonde_matrices(z, p):
    """The two bordered Cauchy matrices whose determinant ratio is ``sum z - sum p``.

    Both have columns ``1/(z_a - p_j)``; the first column is ``z`` in the
    numerator matrix and ones in the denominator matrix.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if z.size != p.size + 1:
        raise ValueError("need one more z than p")
    _check_distinct(z, p)
    C = 1.0 / (z[:, None] - p[None, :])
    return np.column_stack([z, C]), np.column_stack([np.ones_like(z), C])


def cauchy_vandermonde_ratio(z, p) -> complex:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if z.size != p.size + 1:
        raise ValueError("need one more z than p")
    _check_distinct(z, p)
    return complex(np.sum(z) - np.sum(p))


def zd_rational(d: Rational, t: float, x: float) -> float:
    """``-2 Re lam``; at ``t = 0`` simply ``u0(x)``."""
    if t == 0:
        return float(d.value(x))
    return -2.0 * lambda_direct(d, t, x).real


def zd_rational_grid(d: Rational, t: float, grid) -> ZDField:
    """Evaluate on a grid; caustic points take the right limit and are flagged."""
    grid = np.asarray(grid, dtype=float)
    vals = np.empty(grid.size)
    ell = np.empty(grid.size, dtype=int)
    flags = np.zeros(grid.size, dtype=bool)
    for i, x in enumerate(grid):
        xe = x
        for _ in range(8):
            try:
                cls = classify_roots(char_poly(d, t, xe), d, t, xe)
                break
            except CausticHit:
                flags[i] = True
                xe += 2.0 * TOL_CAUSTIC
        else:
            raise CausticHit(f"could not leave the caustic at x={x}")
        ell[i] = cls.ell
        if t == 0:
            vals[i] = d.value(x)
        else:
            vals[i] = -(np.sum(cls.selected) - np.sum(d.poles) - xe).real / t
    return ZDField(t, grid, vals, "rational", ell, flags)
