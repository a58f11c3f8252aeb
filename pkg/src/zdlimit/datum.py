"""Initial data u0 in L2 ∩ L∞ and the operations the backends need on them.

Five representations are supported:

* :class:`SampledC1` -- cubic Hermite interpolant of samples and derivatives,
* :class:`Rational` -- ``sum_j c_j/(y - p_j) + conj(c_j)/(y - conj(p_j))``,
* :class:`Step` -- ``height`` times the indicator of ``]left, right[``,
* :class:`PiecewiseLinear` -- linear interpolation, zero outside the breakpoints,
* :class:`Mollified` -- a smoothed version of any of the above.

All values are immutable after construction.  Every datum exposes
``segments()``, a list of :class:`Segment` describing where ``u0'`` may vary;
between (and outside) segments the datum is affine, which is what the
characteristic root scan relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from .errors import NotC1Error

__all__ = [
    "InitialDatum",
    "SampledC1",
    "Rational",
    "Step",
    "PiecewiseLinear",
    "Mollified",
    "Segment",
    "Norms",
    "evaluate",
    "evaluate_deriv",
    "norms",
    "mollify",
    "zero_datum",
    "sampled_from_function",
    "from_dict",
    "to_dict",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


class Segment(NamedTuple):
    """Interval on which ``u0'`` may vary.

    ``h`` is the largest grid pitch that resolves the datum's features there
    and ``dmax`` bounds ``|u0'|`` on the interval.
    """

    a: float
    b: float
    h: float
    dmax: float


class Norms(NamedTuple):
    l2: float
    linf: float


# {{{ smoothing profiles

def smootherstep(s):
    """C2 ramp from 0 to 1 on [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def smootherstep_deriv(s):
    s = np.clip(s, 0.0, 1.0)
    return 30.0 * s * s * (1.0 - s) ** 2


SMOOTHERSTEP_MAX_SLOPE = 1.875


def bump_kernel(s):
    """Normalized polynomial bump ``35/32 (1 - s^2)^3`` supported on [-1, 1]."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, 35.0 / 32.0 * (1.0 - s * s) ** 3, 0.0)


def _kernel_cdf(z):
    z = np.clip(np.asarray(z, dtype=float), -1.0, 1.0)
    z2 = z * z
    return 0.5 + 35.0 / 32.0 * z * (1.0 - z2 + 0.6 * z2 * z2 - z2 * z2 * z2 / 7.0)


_R_OFFSET = 0.5 - 0.25 + 0.1 - 1.0 / 56.0


def _kernel_ramp(z):
    # R(z) = int K(s) (z - s)_+ ds, the second antiderivative of the kernel
    z = np.asarray(z, dtype=float)
    zc = np.clip(z, -1.0, 1.0)
    z2 = zc * zc
    inner = 0.5 * (zc + 1.0) + 35.0 / 32.0 * (
        z2 / 2.0 - z2 * z2 / 4.0 + z2 ** 3 / 10.0 - z2 ** 4 / 56.0 - _R_OFFSET)
    return np.where(z >= 1.0, z, np.where(z <= -1.0, 0.0, inner))

# }}}


def _as_array(y):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("evaluation point must be finite")
    return y


def _scalar_or_array(out, y):
    return float(out) if np.ndim(y) == 0 else out


class InitialDatum:
    """Common interface of all initial-data representations."""

    #: whether ``deriv`` is defined everywhere
    differentiable = True

    def value(self, y):
        raise NotImplementedError

    def deriv(self, y):
        raise NotImplementedError

    def __call__(self, y):
        return self.value(y)

    def support(self):
        """Closed interval outside which the datum vanishes, or ``None``."""
        raise NotImplementedError

    def segments(self) -> list[Segment]:
        raise NotImplementedError

    def bounds(self) -> tuple[float, float]:
        """``(inf u0, sup u0)`` over the real line."""
        raise NotImplementedError

    def deriv_bound(self) -> float:
        raise NotImplementedError

    def linf(self) -> float:
        lo, hi = self.bounds()
        return max(abs(lo), abs(hi))

    def knots(self) -> np.ndarray:
        """Abscissae worth splitting quadratures at."""
        pts = []
        for seg in self.segments():
            pts.extend([seg.a, seg.b])
        pts = np.asarray([p for p in pts if np.isfinite(p)], dtype=float)
        return np.unique(pts)

    def is_zero(self) -> bool:
        return False

    def is_even(self, tol=1e-12) -> bool:
        ys = np.linspace(0.0, 10.0, 201)
        return bool(np.max(np.abs(self.value(ys) - self.value(-ys))) <= tol)


# {{{ sampled

@dataclass(frozen=True, eq=False)
class SampledC1(InitialDatum):
    """Cubic Hermite interpolant through ``(nodes, values, derivs)``.

    The datum is exactly zero outside ``[nodes[0], nodes[-1]]`` and beyond
    ``decay_bound``.
    """

    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    decay_bound: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        derivs = np.asarray(self.derivs, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("need at least two nodes")
        if not (nodes.shape == values.shape == derivs.shape):
            raise ValueError("nodes, values and derivs must have equal length")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(values))
                and np.all(np.isfinite(derivs))):
            raise ValueError("sampled datum must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        bound = self.decay_bound
        if bound is None:
            bound = max(abs(nodes[0]), abs(nodes[-1]))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivs", derivs)
        object.__setattr__(self, "decay_bound", float(bound))
        spline = CubicHermiteSpline(nodes, values, derivs, extrapolate=False)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_dspline", spline.derivative())
        object.__setattr__(self, "_lo", max(nodes[0], -bound))
        object.__setattr__(self, "_hi", min(nodes[-1], bound))
        object.__setattr__(self, "_bounds", self._exact_bounds())
        object.__setattr__(self, "_dbound", self._exact_deriv_bound())

    def _inside(self, y):
        return (y >= self._lo) & (y <= self._hi)

    def value(self, y):
        y = _as_array(y)
        inside = self._inside(y)
        out = np.zeros_like(y)
        if np.any(inside):
            out[inside] = self._spline(y[inside])
        return _scalar_or_array(out, y)

    def deriv(self, y):
        y = _as_array(y)
        inside = self._inside(y)
        out = np.zeros_like(y)
        if np.any(inside):
            out[inside] = self._dspline(y[inside])
        return _scalar_or_array(out, y)

    def _clip(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts[(pts >= self._lo) & (pts <= self._hi)]

    def _exact_bounds(self):
        # the derivative of a cubic piece is quadratic: its roots give the extrema
        crit = self._clip(self._dspline.roots(extrapolate=False))
        pts = np.concatenate([crit, self._clip(self.nodes), [self._lo, self._hi]])
        vals = np.concatenate([self._spline(pts), [0.0]])
        return float(np.min(vals)), float(np.max(vals))

    def _exact_deriv_bound(self):
        crit = self._clip(self._spline.derivative(2).roots(extrapolate=False))
        pts = np.concatenate([crit, self._clip(self.nodes), [self._lo, self._hi]])
        return float(np.max(np.abs(self._dspline(pts))))

    def bounds(self):
        return self._bounds

    def deriv_bound(self):
        return self._dbound

    def support(self):
        return (float(self._lo), float(self._hi))

    def segments(self):
        h = float(np.min(np.diff(self.nodes)))
        return [Segment(float(self._lo), float(self._hi), h, self._dbound)]

    def knots(self):
        return self._clip(self.nodes)

    def is_zero(self):
        return not (np.any(self.values) or np.any(self.derivs))


def sampled_from_function(func, dfunc, lo, hi, n, decay_bound=None) -> SampledC1:
    """Sample ``func`` and its derivative ``dfunc`` on ``n`` uniform nodes."""
    nodes = np.linspace(lo, hi, n)
    return SampledC1(nodes, func(nodes), dfunc(nodes), decay_bound)

# }}}


# {{{ rational

@dataclass(frozen=True, eq=False)
class Rational(InitialDatum):
    """Real rational datum with simple poles ``poles`` in the upper half-plane."""

    poles: np.ndarray
    residues: np.ndarray

    def __post_init__(self):
        poles = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        residues = np.atleast_1d(np.asarray(self.residues, dtype=complex))
        if poles.shape != residues.shape or poles.ndim != 1:
            raise ValueError("poles and residues must be 1-d of equal length")
        if np.any(poles.imag <= 0):
            raise ValueError("poles must lie in the open upper half-plane")
        if poles.size > 1:
            gaps = np.abs(poles[:, None] - poles[None, :])
            gaps[np.diag_indices_from(gaps)] = np.inf
            if np.min(gaps) == 0.0:
                raise ValueError("poles must be pairwise distinct")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", residues)
        object.__setattr__(self, "_cache", {})

    @property
    def N(self) -> int:
        return int(self.poles.size)

    def complex_value(self, z):
        """Analytic continuation ``sum c/(z-p) + conj(c)/(z-conj(p))``."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for p, c in zip(self.poles, self.residues):
            out += c / (z - p) + np.conj(c) / (z - np.conj(p))
        return out

    def complex_deriv(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for p, c in zip(self.poles, self.residues):
            out -= c / (z - p) ** 2 + np.conj(c) / (z - np.conj(p)) ** 2
        return out

    def hardy_part(self, z):
        """Szegő projection ``sum conj(c)/(z - conj(p))``, holomorphic for Im z > 0."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for p, c in zip(self.poles, self.residues):
            out += np.conj(c) / (z - np.conj(p))
        return out

    def value(self, y):
        y = _as_array(y)
        out = np.zeros_like(y)
        for p, c in zip(self.poles, self.residues):
            out += 2.0 * np.real(c / (y - p))
        return _scalar_or_array(out, y)

    def deriv(self, y):
        y = _as_array(y)
        out = np.zeros_like(y)
        for p, c in zip(self.poles, self.residues):
            out -= 2.0 * np.real(c / (y - p) ** 2)
        return _scalar_or_array(out, y)

    # polynomial form u0 = P/Q, coefficients highest degree first
    def denominator(self) -> np.ndarray:
        if "Q" not in self._cache:
            roots = np.concatenate([self.poles, np.conj(self.poles)])
            self._cache["Q"] = np.real_if_close(np.poly(roots), tol=1e6)
        return self._cache["Q"]

    def numerator(self) -> np.ndarray:
        if "P" not in self._cache:
            P = np.zeros(max(2 * self.N, 1), dtype=complex)
            for j, (p, c) in enumerate(zip(self.poles, self.residues)):
                others = np.concatenate([np.delete(self.poles, j), np.conj(self.poles)])
                P += c * _pad(np.poly(others), 2 * self.N)
                others = np.concatenate([self.poles, np.delete(np.conj(self.poles), j)])
                P += np.conj(c) * _pad(np.poly(others), 2 * self.N)
            self._cache["P"] = np.real_if_close(P, tol=1e6)
        return self._cache["P"]

    def _critical_abscissae(self, order):
        # real zeros of the numerator of u0' (order 1) or u0'' (order 2)
        P = np.asarray(self.numerator(), dtype=complex)[::-1]
        Q = np.asarray(self.denominator(), dtype=complex)[::-1]
        dQ = npoly.polyder(Q)
        # u0' = N1/Q^2
        num = npoly.polysub(npoly.polymul(npoly.polyder(P), Q), npoly.polymul(P, dQ))
        if order == 2:
            # u0'' = (N1' Q - 2 N1 Q')/Q^3
            num = npoly.polysub(npoly.polymul(npoly.polyder(num), Q),
                                2.0 * npoly.polymul(num, dQ))
        num = np.trim_zeros(np.real_if_close(num, tol=1e6), "b")
        if num.size <= 1:
            return np.zeros(0)
        roots = npoly.polyroots(num)
        return roots[np.abs(roots.imag) <= 1e-7 * (1.0 + np.abs(roots.real))].real

    def bounds(self):
        if "bounds" not in self._cache:
            if self.N == 0:
                self._cache["bounds"] = (0.0, 0.0)
            else:
                pts = np.concatenate([self._critical_abscissae(1), [0.0]])
                vals = np.concatenate([self.value(pts), [0.0]])
                self._cache["bounds"] = (float(vals.min()), float(vals.max()))
        return self._cache["bounds"]

    def deriv_bound(self):
        if "dbound" not in self._cache:
            if self.N == 0:
                self._cache["dbound"] = 0.0
            else:
                pts = np.concatenate([self._critical_abscissae(2), [0.0]])
                self._cache["dbound"] = float(np.max(np.abs(self.deriv(pts))))
        return self._cache["dbound"]

    def support(self):
        return None

    def segments(self):
        if self.N == 0:
            return []
        h = float(np.min(self.poles.imag)) / 8.0
        return [Segment(-math.inf, math.inf, h, self.deriv_bound())]

    def knots(self):
        return np.unique(self.poles.real)

    def is_zero(self):
        return self.N == 0 or not np.any(self.residues)

    def decay_radius(self, level):
        """Radius beyond which ``|u0'| < level``."""
        if self.N == 0:
            return 0.0
        a = float(np.max(np.abs(self.poles)))
        return a + math.sqrt(2.0 * float(np.sum(np.abs(self.residues))) / level)

    @classmethod
    def from_polynomials(cls, P, Q, split=1e-6):
        """Build from real polynomials ``P/Q`` (highest degree first).

        Repeated poles are split by ``split`` in distinct directions so the
        simple-pole representation applies.
        """
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        if Q[0] == 0 or (Q.size - 1) % 2:
            raise ValueError("denominator must have even degree")
        Q = Q / Q[0]
        P = P / 1.0
        roots = np.roots(Q)
        upper = np.sort_complex(roots[roots.imag > 0])
        if upper.size * 2 != Q.size - 1:
            raise ValueError("denominator has real roots")
        upper = split_poles(upper, split)
        # product of pole differences: differences of nearby floats are exact,
        # whereas Q' evaluated at a split pole cancels catastrophically
        everything = np.concatenate([upper, np.conj(upper)])
        residues = np.empty(upper.size, dtype=complex)
        for j, p in enumerate(upper):
            others = np.delete(everything, j)
            residues[j] = np.polyval(P, p) / np.prod(p - others)
        return cls(upper, residues)


def split_poles(poles, split=1e-6, tol=1e-7):
    """Perturb clustered poles by ``split`` in distinct directions."""
    original = np.array(poles, dtype=complex)
    poles = original.copy()
    n = poles.size
    for i in range(n):
        close = [j for j in range(i) if abs(original[j] - original[i]) <= tol]
        if close:
            angle = 2.0 * math.pi * len(close) / (len(close) + 2)
            poles[i] = poles[i] + split * complex(math.cos(angle), math.sin(angle))
    return poles


def _pad(coeffs, n):
    coeffs = np.asarray(coeffs)
    return np.concatenate([np.zeros(n - coeffs.size, dtype=coeffs.dtype), coeffs])

# }}}


# {{{ step and piecewise linear

@dataclass(frozen=True)
class Step(InitialDatum):
    """``height`` times the indicator function of the open interval ``]left, right[``."""

    left: float = -1.0
    right: float = 1.0
    height: float = 1.0

    differentiable = False

    def __post_init__(self):
        if not (math.isfinite(self.left) and math.isfinite(self.right)
                and math.isfinite(self.height)):
            raise ValueError("step parameters must be finite")
        if self.right <= self.left:
            raise ValueError("need left < right")

    def value(self, y):
        y = _as_array(y)
        out = np.where((y > self.left) & (y < self.right), float(self.height), 0.0)
        return _scalar_or_array(out, y)

    def deriv(self, y):
        raise NotC1Error("a step datum has no derivative; mollify it first")

    def bounds(self):
        return (min(0.0, self.height), max(0.0, self.height))

    def deriv_bound(self):
        return math.inf

    def support(self):
        return (self.left, self.right)

    def segments(self):
        return [Segment(self.left, self.left, 0.0, math.inf),
                Segment(self.right, self.right, 0.0, math.inf)]

    def is_zero(self):
        return self.height == 0.0


@dataclass(frozen=True, eq=False)
class PiecewiseLinear(InitialDatum):
    """Linear interpolation of ``values`` at ``breakpoints``; zero outside them."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.shape != v.shape or b.size < 2:
            raise ValueError("need matching 1-d breakpoints and values (>= 2)")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise ValueError("piecewise linear datum must be finite")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    def value(self, y):
        y = _as_array(y)
        b = self.breakpoints
        out = np.where((y >= b[0]) & (y <= b[-1]), np.interp(y, b, self.values), 0.0)
        return _scalar_or_array(out, y)

    def deriv(self, y):
        # right derivative at the kinks
        y = _as_array(y)
        b = self.breakpoints
        idx = np.searchsorted(b, y, side="right") - 1
        inside = (idx >= 0) & (idx < b.size - 1)
        out = np.zeros_like(y)
        out[inside] = self.slopes[idx[inside]]
        return _scalar_or_array(out, y)

    def bounds(self):
        return (min(0.0, float(self.values.min())), max(0.0, float(self.values.max())))

    def deriv_bound(self):
        return float(np.max(np.abs(self.slopes)))

    def support(self):
        return (float(self.breakpoints[0]), float(self.breakpoints[-1]))

    def segments(self):
        return [Segment(float(b), float(b), 0.0, self.deriv_bound())
                for b in self.breakpoints]

    def knots(self):
        return self.breakpoints.copy()

    def is_zero(self):
        return not np.any(self.values)

    def ramp_decomposition(self):
        """Coefficients ``(a_i, jump_0, jump_n)`` with
        ``u = sum a_i (y - b_i)_+ + jump_0 H(y - b_0) + jump_n H(y - b_n)``."""
        m = np.concatenate([[0.0], self.slopes, [0.0]])
        return np.diff(m), float(self.values[0]), -float(self.values[-1])

# }}}


# {{{ mollified

@dataclass(frozen=True, eq=False)
class Mollified(InitialDatum):
    """Smoothed datum at width ``delta``.

    A :class:`Step` base gets the outward ramp profile: zero outside
    ``[left - delta, right + delta]``, equal to ``height`` on
    ``[left, right]`` and strictly monotone (C2 smootherstep) on the two
    ramps.  Any other base is convolved with the compactly supported bump
    :func:`bump_kernel` scaled to width ``delta``.
    """

    base: InitialDatum
    delta: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError("delta must be positive")
        object.__setattr__(self, "_cache", {})

    @property
    def kind(self) -> str:
        if isinstance(self.base, Step):
            return "ramp"
        if isinstance(self.base, PiecewiseLinear):
            return "exact"
        return "quadrature"

    # ramp profile
    def _ramp(self, y, deriv):
        st, d = self.base, self.delta
        out = np.zeros_like(y)
        left = (y >= st.left - d) & (y < st.left)
        right = (y > st.right) & (y <= st.right + d)
        mid = (y >= st.left) & (y <= st.right)
        sl = (y[left] - (st.left - d)) / d
        sr = (st.right + d - y[right]) / d
        if deriv:
            out[left] = st.height * smootherstep_deriv(sl) / d
            out[right] = -st.height * smootherstep_deriv(sr) / d
        else:
            out[left] = st.height * smootherstep(sl)
            out[right] = st.height * smootherstep(sr)
            out[mid] = st.height
        return out

    def _exact(self, y, deriv):
        pl, d = self.base, self.delta
        a, j0, jn = pl.ramp_decomposition()
        b = pl.breakpoints
        z = (y[..., None] - b) / d
        if deriv:
            out = _kernel_cdf(z) @ a
            out += (j0 * bump_kernel(z[..., 0]) + jn * bump_kernel(z[..., -1])) / d
        else:
            out = d * (_kernel_ramp(z) @ a)
            out += j0 * _kernel_cdf(z[..., 0]) + jn * _kernel_cdf(z[..., -1])
        return out

    def _quadrature(self, y, deriv):
        f = self.base.deriv if deriv else self.base.value
        w = _GL_WEIGHTS * bump_kernel(_GL_NODES)
        pts = y[..., None] - self.delta * _GL_NODES
        return f(pts) @ w

    def _eval(self, y, deriv):
        y = _as_array(y)
        if self.kind == "ramp":
            out = self._ramp(np.atleast_1d(y), deriv).reshape(y.shape)
        elif self.kind == "exact":
            out = self._exact(y, deriv)
        else:
            out = self._quadrature(y, deriv)
        return _scalar_or_array(out, y)

    def value(self, y):
        return self._eval(y, False)

    def deriv(self, y):
        return self._eval(y, True)

    def support(self):
        s = self.base.support()
        if s is None:
            return None
        return (s[0] - self.delta, s[1] + self.delta)

    def segments(self):
        d = self.delta
        if self.kind == "ramp":
            st = self.base
            dmax = SMOOTHERSTEP_MAX_SLOPE * abs(st.height) / d
            return [Segment(st.left - d, st.left, d / 32.0, dmax),
                    Segment(st.right, st.right + d, d / 32.0, dmax)]
        if self.kind == "exact":
            dmax = self.base.deriv_bound()
            segs = []
            for b in self.base.breakpoints:
                segs.append(Segment(float(b) - d, float(b) + d, d / 32.0,
                                    dmax + 2.0 * self.base.linf() / d))
            return _merge_segments(segs)
        segs = [Segment(s.a - d, s.b + d, min(s.h, d / 8.0) if s.h > 0 else d / 8.0,
                        s.dmax if math.isfinite(s.dmax) else 2.0 * self.base.linf() / d)
                for s in self.base.segments()]
        return _merge_segments(segs)

    def bounds(self):
        if "bounds" not in self._cache:
            if self.kind == "ramp":
                self._cache["bounds"] = self.base.bounds()
            else:
                self._cache["bounds"] = _scan_bounds(self)
        return self._cache["bounds"]

    def deriv_bound(self):
        if "dbound" not in self._cache:
            self._cache["dbound"] = max((s.dmax for s in self.segments()), default=0.0)
        return self._cache["dbound"]

    def is_zero(self):
        return self.base.is_zero()


def _merge_segments(segs):
    segs = sorted(segs)
    out = []
    for s in segs:
        if out and s.a <= out[-1].b:
            last = out[-1]
            out[-1] = Segment(last.a, max(last.b, s.b), min(last.h, s.h), max(last.dmax, s.dmax))
        else:
            out.append(s)
    return out


def _scan_bounds(d: InitialDatum):
    nodes = _dense_nodes(d)
    vals = d.value(nodes)
    out = []
    for sign in (1.0, -1.0):
        i = int(np.argmin(sign * vals))
        lo, hi = nodes[max(i - 1, 0)], nodes[min(i + 1, nodes.size - 1)]
        best = sign * vals[i]
        if hi > lo:
            res = optimize.minimize_scalar(lambda y: sign * d.value(y), bounds=(lo, hi),
                                           method="bounded", options={"xatol": 1e-12})
            best = min(best, float(res.fun))
        out.append(sign * best)
    return (min(out[0], 0.0), max(out[1], 0.0))


def _dense_nodes(d: InitialDatum, span=None):
    pieces = []
    for s in d.segments():
        a, b = s.a, s.b
        if not math.isfinite(a) or not math.isfinite(b):
            r = span if span is not None else 50.0
            a, b = max(a, -r), min(b, r)
        if b <= a:
            pieces.append(np.array([a]))
            continue
        h = s.h if s.h > 0 else (b - a) / 64.0
        n = int(min(max(math.ceil((b - a) / h), 64), 200_000))
        pieces.append(np.linspace(a, b, n + 1))
    if not pieces:
        return np.array([0.0])
    return np.unique(np.concatenate(pieces))

# }}}


# {{{ module-level operations

def zero_datum() -> Rational:
    return Rational(np.zeros(0, dtype=complex), np.zeros(0, dtype=complex))


def evaluate(d: InitialDatum, y):
    """``u0(y)``; non-finite input raises :class:`ValueError`."""
    return d.value(y)


def evaluate_deriv(d: InitialDatum, y):
    """``u0'(y)``; raises :class:`NotC1Error` for data without a derivative."""
    if not d.differentiable:
        raise NotC1Error(f"{type(d).__name__} datum has no derivative")
    return d.deriv(y)


def norms(d: InitialDatum) -> Norms:
    if d.is_zero():
        return Norms(0.0, 0.0)
    linf = d.linf()
    supp = d.support()
    if supp is None:
        f = lambda y: d.value(y) ** 2
        pts = np.sort(np.asarray(d.knots(), dtype=float))
        cut = [float(pts.min()) - 10.0, float(pts.max()) + 10.0] if pts.size else [-10.0, 10.0]
        mid, _ = integrate.quad(f, cut[0], cut[1], points=pts, limit=500,
                                epsabs=1e-13, epsrel=1e-12)
        left, _ = integrate.quad(f, -np.inf, cut[0], epsabs=1e-13, epsrel=1e-12)
        right, _ = integrate.quad(f, cut[1], np.inf, epsabs=1e-13, epsrel=1e-12)
        l2sq = mid + left + right
    else:
        l2sq = l2_distance_sq(d, None, supp)
    return Norms(math.sqrt(max(l2sq, 0.0)), linf)


def l2_distance_sq(d1: InitialDatum, d2: InitialDatum | None, interval=None) -> float:
    """``||d1 - d2||^2`` by adaptive quadrature split at both data's knots."""
    pts = list(d1.knots())
    supports = [d1.support()]
    if d2 is not None:
        pts += list(d2.knots())
        supports.append(d2.support())
    if interval is None:
        if any(s is None for s in supports):
            raise ValueError("pass an interval for non-compact data")
        interval = (min(s[0] for s in supports), max(s[1] for s in supports))
    a, b = interval
    pts = np.unique([p for p in pts if a <= p <= b] + [a, b])
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if d2 is None:
            f = lambda y: d1.value(y) ** 2
        else:
            f = lambda y: (d1.value(y) - d2.value(y)) ** 2
        val, _ = integrate.quad(f, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)
        total += val
    return total


def mollify(d: InitialDatum, delta: float) -> InitialDatum:
    if not delta > 0:
        raise ValueError("delta must be positive")
    if d.is_zero():
        return d
    return Mollified(d, float(delta))

# }}}


# {{{ JSON descriptors

def _cplx(z):
    return [float(np.real(z)), float(np.imag(z))]


def to_dict(d: InitialDatum) -> dict:
    if isinstance(d, Step):
        return {"type": "step", "left": d.left, "right": d.right, "height": d.height}
    if isinstance(d, Rational):
        if d.N == 0:
            return {"type": "zero"}
        return {"type": "rational", "poles": [_cplx(p) for p in d.poles],
                "residues": [_cplx(c) for c in d.residues]}
    if isinstance(d, SampledC1):
        return {"type": "sampled", "nodes": d.nodes.tolist(), "values": d.values.tolist(),
                "derivs": d.derivs.tolist(), "decay_bound": d.decay_bound}
    if isinstance(d, PiecewiseLinear):
        return {"type": "piecewise_linear", "breakpoints": d.breakpoints.tolist(),
                "values": d.values.tolist()}
    if isinstance(d, Mollified):
        return {"type": "mollified", "base": to_dict(d.base), "delta": d.delta}
    raise TypeError(f"cannot serialize {type(d).__name__}")


def from_dict(desc: dict) -> InitialDatum:
    kind = desc.get("type")
    if kind == "zero":
        return zero_datum()
    if kind == "step":
        return Step(float(desc.get("left", -1.0)), float(desc.get("right", 1.0)),
                    float(desc.get("height", 1.0)))
    if kind == "rational":
        poles = [complex(*p) for p in desc["poles"]]
        residues = [complex(*c) for c in desc["residues"]]
        return Rational(np.array(poles, dtype=complex), np.array(residues, dtype=complex))
    if kind == "sampled":
        return SampledC1(np.asarray(desc["nodes"]), np.asarray(desc["values"]),
                         np.asarray(desc["derivs"]), desc.get("decay_bound"))
    if kind == "piecewise_linear":
        return PiecewiseLinear(np.asarray(desc["breakpoints"]), np.asarray(desc["values"]))
    if kind == "mollified":
        return Mollified(from_dict(desc["base"]), float(desc["delta"]))
    raise ValueError(f"unknown datum type {kind!r}")

# }}}
