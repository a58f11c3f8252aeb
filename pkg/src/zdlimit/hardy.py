"""Resolvent formula for the limit, discretized on the Fourier half-line.

Hardy-space functions are represented by samples of their Fourier transform
``f^(xi) = int exp(-i x xi) f(x) dx`` on a uniform grid of ``[0, Xi]``.
On that side

* ``(G - x)^{-1}`` is the Volterra operator
  ``h^(xi) = i int_xi^Xi f^(eta) exp(i x (eta - xi)) d eta`` (``Im x > 0``);
* the Toeplitz operator of a real symbol ``b`` is the truncated convolution
  ``(T_b f)^(xi) = (1/2pi) int_0^Xi b^(xi - eta) f^(eta) d eta``.

Both are discretized with Gregory's end-corrected trapezoidal weights.  The
Hardy part of the limit at ``x`` in the upper half-plane is
``f^(0+) / (2 pi i)`` where ``(G + 2t T_{u0} - x) f = Pi u0``; its real part
on a horizontal line gives the Poisson smoothing of the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from .characteristics import ZDField
from .datum import InitialDatum, Rational
from .errors import SolveFailure
from .testfunctions import gauss_legendre_panels

__all__ = [
    "SIGMA_MIN",
    "TOL_TRUNC",
    "DEFAULT_MODES",
    "HalfLineSpectrum",
    "ResolventProblem",
    "gregory_weights",
    "fourier_transform",
    "spectral_cutoff",
    "auto_cutoff",
    "fourier_plus",
    "g_resolvent",
    "toeplitz_apply",
    "solve_resolvent",
    "resolvent_residual",
    "pi_u",
    "boundary_trace",
    "poisson_extension",
]

SIGMA_MIN = 1e-3
TOL_TRUNC = 1e-8
DEFAULT_MODES = 2048
_XI_CAP = 400.0


# {{{ quadrature weights

_CLOSED_NC = {
    1: [1 / 2, 1 / 2],
    2: [1 / 3, 4 / 3, 1 / 3],
    3: [3 / 8, 9 / 8, 9 / 8, 3 / 8],
    4: [14 / 45, 64 / 45, 24 / 45, 64 / 45, 14 / 45],
}
_GREGORY_ENDS = np.array([3 / 8, 7 / 6, 23 / 24])


def gregory_weights(n: int, h: float) -> np.ndarray:
    """Weights on ``n + 1`` equispaced nodes, exact for cubics once ``n >= 2``.

    Closed Newton-Cotes for ``n < 5``, the trapezoidal rule with third-order
    Gregory end corrections otherwise.
    """
    if n == 0:
        return np.zeros(1)
    if n < 5:
        return h * np.asarray(_CLOSED_NC[n])
    w = np.ones(n + 1)
    w[:3] = _GREGORY_ENDS
    w[-3:] = _GREGORY_ENDS[::-1]
    return h * w


def _triangular_weights(m: int, h: float):
    """Row ``i`` of ``left`` integrates over ``[xi_0, xi_i]``, of ``right`` over ``[xi_i, xi_{m-1}]``."""
    left = np.zeros((m, m))
    right = np.zeros((m, m))
    for i in range(m):
        left[i, :i + 1] = gregory_weights(i, h)
        right[i, i:] = gregory_weights(m - 1 - i, h)
    return left, right

# }}}


# {{{ transforms

def fourier_transform(d: InitialDatum, xi, side: int = 1) -> np.ndarray:
    """``u0^(xi) = int exp(-i xi y) u0(y) dy``.

    For rational data the closed form has a jump at ``xi = 0`` when
    ``u0`` is not integrable; ``side`` picks the one-sided value there.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.zeros(xi.shape, dtype=complex)
    if d.is_zero():
        return out
    if isinstance(d, Rational):
        pos = (xi > 0) | ((xi == 0) & (side > 0))
        for p, c in zip(d.poles, d.residues):
            # residues in the lower (xi > 0) or upper (xi < 0) half-plane
            out[pos] += -2j * math.pi * np.conj(c) * np.exp(-1j * np.conj(p) * xi[pos])
            out[~pos] += 2j * math.pi * c * np.exp(-1j * p * xi[~pos])
        return out
    supp = d.support()
    if supp is None:
        raise SolveFailure("need compact support or a rational datum for the transform")
    knots = d.knots()
    breaks = np.unique(np.concatenate([[supp[0], supp[1]], knots if knots.size <= 64 else []]))
    width = min(0.25, 2.0 / max(1.0, float(np.max(np.abs(xi)))))
    for seg in d.segments():
        if seg.h > 0 and math.isfinite(seg.h):
            width = min(width, 4.0 * seg.h)
    nodes, w = gauss_legendre_panels(breaks, 16, width)
    vals = w * d.value(nodes)
    for k in range(0, xi.size, 512):
        chunk = xi[k:k + 512]
        out[k:k + 512] = np.exp(-1j * np.outer(chunk, nodes)) @ vals
    return out


def spectral_cutoff(d: InitialDatum, tol: float = TOL_TRUNC) -> float:
    """``Xi`` such that ``int_Xi^inf |u0^| <= tol``."""
    if d.is_zero():
        return 1.0
    if isinstance(d, Rational):
        a = float(np.min(d.poles.imag))
        mass = 2.0 * math.pi * float(np.sum(np.abs(d.residues)))
        return max(1.0, math.log(max(mass / (a * tol), 1.0 + 1e-12)) / a)
    # widen the window until the last quarter of it carries a negligible tail
    cap = 25.0
    while True:
        xi = np.linspace(0.0, cap, int(20 * cap) + 1)
        mag = np.abs(fourier_transform(d, xi))
        tail = integrate.cumulative_trapezoid(mag[::-1], dx=xi[1] - xi[0], initial=0.0)[::-1]
        settled = tail[int(0.75 * xi.size)] <= 1e-2 * tol
        ok = np.nonzero(tail <= tol)[0]
        if settled and ok.size:
            return max(1.0, float(xi[ok[0]]))
        if cap >= _XI_CAP:
            raise SolveFailure(f"|u0^| tail above {tol:g} up to xi={_XI_CAP:g}")
        cap = min(2.0 * cap, _XI_CAP)


def auto_cutoff(d: InitialDatum, height: float, t: float = 1.0,
                modes: int = DEFAULT_MODES, tol: float = TOL_TRUNC) -> float:
    """Truncation for evaluation at ``Im x = height``.

    The data cutoff alone suffices where the resolvent decays fast; near folds
    it decays only like ``exp(-height xi)``, so the grid is stretched towards
    ``10/height`` as far as the pitch ``spectral_cutoff/200`` allows.  At
    ``t = 0`` the solution decays with the data and no stretch is needed.
    """
    base = spectral_cutoff(d, tol)
    if t == 0:
        return base
    return max(base, min(10.0 / height, (modes - 1) * base / 200.0))


@dataclass
class HalfLineSpectrum:
    """Samples of a Fourier transform on a uniform grid of ``[0, Xi]``."""

    xi: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.xi[1] - self.xi[0])

    @property
    def zero_limit(self) -> complex:
        """``f^(0+)`` by quadratic extrapolation from the three smallest nodes."""
        x0, x1, x2 = self.xi[:3]
        f0, f1, f2 = self.values[:3]
        l0 = (0 - x1) * (0 - x2) / ((x0 - x1) * (x0 - x2))
        l1 = (0 - x0) * (0 - x2) / ((x1 - x0) * (x1 - x2))
        l2 = (0 - x0) * (0 - x1) / ((x2 - x0) * (x2 - x1))
        return complex(l0 * f0 + l1 * f1 + l2 * f2)

    def l2_norm(self) -> float:
        """``(1/2pi) int |f^|^2`` to the power 1/2, i.e. the physical-side L2 norm."""
        w = gregory_weights(self.xi.size - 1, self.h)
        return math.sqrt(float(np.sum(w * np.abs(self.values) ** 2)) / (2.0 * math.pi))

    def to_csv(self) -> str:
        lines = ["xi,re,im"]
        for x, v in zip(self.xi, self.values):
            lines.append(f"{x:.17g},{v.real:.17g},{v.imag:.17g}")
        return "\n".join(lines) + "\n"


def half_line_grid(xi_max: float, modes: int = DEFAULT_MODES) -> np.ndarray:
    if modes < 3:
        raise ValueError("need at least three frequency nodes")
    return np.linspace(0.0, xi_max, modes)


def fourier_plus(d: InitialDatum, grid) -> HalfLineSpectrum:
    """Transform of the Szegő projection: ``u0^`` restricted to ``xi >= 0``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0):
        raise ValueError("half-line grid must be nonnegative")
    return HalfLineSpectrum(grid, fourier_transform(d, grid, side=1))

# }}}


# {{{ operators

class _Operators:
    """Matrices of ``(G - x)^{-1}`` and ``T_{u0}`` on one grid (cached per datum)."""

    def __init__(self, d: InitialDatum, xi: np.ndarray):
        self.d = d
        self.xi = xi
        m = xi.size
        h = float(xi[1] - xi[0])
        self.left, self.right = _triangular_weights(m, h)
        k = np.arange(m) * h
        col = fourier_transform(d, k, side=1)       # u0^(xi_i - xi_0)
        row = fourier_transform(d, -k, side=-1)     # u0^(xi_0 - xi_j)
        # the Toeplitz kernel has a kink (or jump) on the diagonal: integrate each side
        below = linalg.toeplitz(col, np.concatenate([[col[0]], row[1:]]))
        above = linalg.toeplitz(np.concatenate([[row[0]], col[1:]]), row)
        self.T = (self.left * below + self.right * above) / (2.0 * math.pi)
        self._diff = np.maximum(xi[None, :] - xi[:, None], 0.0)

    def K(self, x: complex) -> np.ndarray:
        return 1j * self.right * np.exp(1j * x * self._diff)


_OPS_CACHE: dict = {}


def _operators(d: InitialDatum, xi: np.ndarray) -> _Operators:
    key = (id(d), xi.size, float(xi[-1]))
    ops = _OPS_CACHE.get(key)
    if ops is None or ops.d is not d:
        if len(_OPS_CACHE) > 4:
            _OPS_CACHE.clear()
        ops = _Operators(d, xi)
        _OPS_CACHE[key] = ops
    return ops


def _volterra_matrix(xi, x):
    h = float(xi[1] - xi[0])
    _, right = _triangular_weights(xi.size, h)
    return 1j * right * np.exp(1j * x * np.maximum(xi[None, :] - xi[:, None], 0.0))


def g_resolvent(f: HalfLineSpectrum, x: complex) -> HalfLineSpectrum:
    """``(G - x)^{-1} f`` via the damped tail integral."""
    x = complex(x)
    if x.imag < SIGMA_MIN:
        raise ValueError(f"need Im x >= {SIGMA_MIN}")
    return HalfLineSpectrum(f.xi, _volterra_matrix(f.xi, x) @ f.values)


def toeplitz_apply(d: InitialDatum, f: HalfLineSpectrum) -> HalfLineSpectrum:
    """``T_{u0} f`` as a truncated convolution on the grid of ``f``."""
    return HalfLineSpectrum(f.xi, _operators(d, f.xi).T @ f.values)

# }}}


# {{{ resolvent problems

@dataclass
class ResolventProblem:
    """``(G + 2t T_{u0} - x) f = Pi u0`` on a truncated half-line grid."""

    datum: InitialDatum
    t: float
    x: complex
    xi: np.ndarray

    @classmethod
    def build(cls, d: InitialDatum, t: float, x: complex, modes: int = DEFAULT_MODES,
              xi_max: float | None = None) -> "ResolventProblem":
        x = complex(x)
        if x.imag < SIGMA_MIN:
            raise ValueError(f"need Im x >= {SIGMA_MIN}, got {x.imag:g}")
        if xi_max is None:
            xi_max = auto_cutoff(d, x.imag, t, modes)
        return cls(d, float(t), x, half_line_grid(xi_max, modes))

    @property
    def rhs(self) -> np.ndarray:
        return fourier_transform(self.datum, self.xi, side=1)

    def matrices(self):
        ops = _operators(self.datum, self.xi)
        K = ops.K(self.x)
        A = np.eye(self.xi.size, dtype=complex) + 2.0 * self.t * (K @ ops.T)
        return A, K, ops.T


def _condition_and_solve(A, b):
    lu, piv = linalg.lu_factor(A, check_finite=False)
    gecon = linalg.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(A, 1), norm="1")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if not math.isfinite(cond) or cond > 1e13:
        raise SolveFailure(f"resolvent system is ill-conditioned ({cond:.3g})", condition=cond)
    return linalg.lu_solve((lu, piv), b, check_finite=False), cond


def solve_resolvent(rp: ResolventProblem, method: str = "dense",
                    maxiter: int = 2000, tol: float = 1e-14) -> HalfLineSpectrum:
    """Solve the preconditioned system ``(I + 2t K_x T) f = K_x Pi u0``.

    ``method="neumann"`` iterates ``f <- K_x (Pi u0 - 2t T f)``, which
    contracts when ``Im x > 2|t| ||u0||_inf``.
    """
    g = rp.rhs
    if rp.t == 0.0:
        f = _operators(rp.datum, rp.xi).K(rp.x) @ g
        return HalfLineSpectrum(rp.xi, f, {"method": "direct", "condition": 1.0})
    A, K, T = rp.matrices()
    b = K @ g
    if method == "dense":
        f, cond = _condition_and_solve(A, b)
        return HalfLineSpectrum(rp.xi, f, {"method": "dense", "condition": cond})
    if method != "neumann":
        raise ValueError(f"unknown method {method!r}")
    KT = 2.0 * rp.t * (K @ T)
    f = b.copy()
    for it in range(maxiter):
        f_new = b - KT @ f
        delta = np.linalg.norm(f_new - f)
        f = f_new
        size = np.linalg.norm(f)
        # the norm overflows before the entries do
        if not (math.isfinite(delta) and math.isfinite(size)):
            break
        if delta <= tol * max(size, 1e-300):
            return HalfLineSpectrum(rp.xi, f, {"method": "neumann", "iterations": it + 1})
    raise SolveFailure("fixed-point iteration did not converge; Im x is too small "
                       "for the perturbative regime")


def resolvent_residual(rp: ResolventProblem, f: HalfLineSpectrum) -> float:
    """Relative residual of ``f + 2t K_x T f = K_x Pi u0``."""
    A, K, _ = rp.matrices()
    b = K @ rp.rhs
    scale = max(np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(A @ f.values - b) / scale)


def pi_u(d: InitialDatum, t: float, x: complex, modes: int = DEFAULT_MODES,
         method: str = "dense", xi_max: float | None = None) -> complex:
    """Hardy part of the limit at ``x`` in the upper half-plane."""
    if d.is_zero():
        return 0j
    rp = ResolventProblem.build(d, t, x, modes, xi_max)
    f = solve_resolvent(rp, method)
    return f.zero_limit / (2j * math.pi)


def boundary_trace(d: InitialDatum, t: float, xgrid, sigma: float,
                   modes: int = DEFAULT_MODES, xi_max: float | None = None,
                   method: str = "sweep") -> ZDField:
    """``2 Re Pi u(t, x + i sigma)`` on ``xgrid``: the Poisson smoothing of the limit.

    ``method="sweep"`` fixes one discrete operator ``L`` (built at a
    reference point far up the half-plane), reduces
    ``(I + 2t K_0 T)^{-1} K_0`` to Hessenberg form once and then solves one
    banded system per ``x``.  ``method="dense"`` solves each point anew.
    """
    xgrid = np.asarray(xgrid, dtype=float)
    if sigma < SIGMA_MIN:
        raise ValueError(f"sigma must be at least {SIGMA_MIN}")
    meta = {"sigma": sigma, "modes": modes, "method": method}
    if d.is_zero() or xgrid.size == 0:
        return ZDField(t, xgrid, np.zeros(xgrid.size), "hardy", meta=meta)
    if xi_max is None:
        xi_max = auto_cutoff(d, sigma, t, modes)
    xi = half_line_grid(xi_max, modes)
    meta["xi_max"] = xi_max
    if method == "dense":
        vals = np.array([2.0 * pi_u(d, t, x + 1j * sigma, modes, "dense", xi_max).real
                         for x in xgrid])
        return ZDField(t, xgrid, vals, "hardy", meta=meta)
    if method != "sweep":
        raise ValueError(f"unknown method {method!r}")

    ops = _operators(d, xi)
    x0 = complex(0.5 * (xgrid[0] + xgrid[-1]), 1.0 + 4.0 * abs(t) * d.linf())
    K0 = ops.K(x0)
    A = np.eye(xi.size, dtype=complex) + 2.0 * t * (K0 @ ops.T)
    g = fourier_transform(d, xi, side=1)
    # K0 (L - x) = A - (x - x0) K0  with L the discrete G + 2t T
    lu = linalg.lu_factor(A, check_finite=False)
    C = linalg.lu_solve(lu, K0, check_finite=False)
    v = linalg.lu_solve(lu, K0 @ g, check_finite=False)
    H, Q = linalg.hessenberg(C, calc_q=True, check_finite=False)
    w = Q.conj().T @ v
    q0 = Q[0, :]
    m = xi.size
    # band storage of H: one subdiagonal, m - 1 superdiagonals
    ab = np.zeros((m + 1, m), dtype=complex)
    rows, cols = np.triu_indices(m, -1)
    keep = rows <= cols + 1
    rows, cols = rows[keep], cols[keep]
    ab[m - 1 + rows - cols, cols] = H[rows, cols]
    vals = np.empty(xgrid.size)
    for k, x in enumerate(xgrid):
        z = complex(x, sigma) - x0
        band = -z * ab
        band[m - 1] += 1.0
        y = linalg.solve_banded((1, m - 1), band, w, check_finite=False)
        vals[k] = 2.0 * ((q0 @ y) / (2j * math.pi)).real
    return ZDField(t, xgrid, vals, "hardy", meta=meta)

# }}}


def poisson_extension(func, x, sigma: float, lo: float = -200.0, hi: float = 200.0,
                      points=None) -> np.ndarray:
    """``int sigma / (pi ((x - y)^2 + sigma^2)) func(y) dy`` at each ``x``.

    ``func`` must be negligible outside ``[lo, hi]`` relative to the tolerance
    wanted; the integral is split at ``x`` and at ``points``.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.size)
    extra = [] if points is None else list(points)
    for i, xv in enumerate(xs):
        pts = sorted({p for p in extra + [xv - sigma, xv, xv + sigma] if lo < p < hi})
        val, _ = integrate.quad(
            lambda y: sigma / (math.pi * ((xv - y) ** 2 + sigma ** 2)) * func(y),
            lo, hi, points=pts, limit=400, epsabs=1e-11, epsrel=1e-11)
        out[i] = val
    return out
