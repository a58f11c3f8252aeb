"""Weak zero-dispersion limit of C1 data through the characteristic fan.

For ``t`` fixed the map ``f_t(y) = y + 2 t u0(y)`` is scanned on a grid fine
enough that it is monotone between consecutive critical points.  Every real
root of ``f_t(y) = x`` is then bracketed on one monotone piece and polished
by safeguarded Newton iteration, and the limit is the alternating sum
``sum_k (-1)^k u0(y_k)`` over the ascending roots.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .datum import InitialDatum
from .errors import CausticHit, NotC1Error, SolveFailure
from .testfunctions import TestFunction, bump, gauss_legendre_panels

__all__ = [
    "TOL_ROOT",
    "TOL_MERGE",
    "TOL_CAUSTIC",
    "CharacteristicFan",
    "CausticSet",
    "ZDField",
    "FanSolver",
    "critical_values",
    "solve_fan",
    "zd_pointwise",
    "zd_grid",
    "zd_integral",
    "weak_pairing",
    "pushforward_pairing",
    "burgers_weak_residual",
]

TOL_ROOT = 1e-12
TOL_MERGE = 1e-8
TOL_CAUSTIC = 1e-8


# {{{ result types

@dataclass
class CharacteristicFan:
    """Ascending real roots of ``y + 2 t u0(y) = x``.

    ``caustic`` is set when ``x`` was within tolerance of a critical value;
    the roots are then those of the right limit ``x + 0``.
    """

    t: float
    x: float
    roots: np.ndarray
    deriv_signs: np.ndarray
    caustic: bool = False

    @property
    def ell(self) -> int:
        return (len(self.roots) - 1) // 2

    def alternating_sum(self, d: InitialDatum) -> float:
        if len(self.roots) == 0:
            return 0.0
        signs = (-1.0) ** np.arange(len(self.roots))
        return float(np.sum(signs * np.atleast_1d(d.value(self.roots))))


@dataclass
class CausticSet:
    """Critical values of ``f_t`` and the fan size on each complementary interval."""

    t: float
    values: np.ndarray
    components: list  # (lo, hi, ell) with lo/hi possibly infinite

    def ell_at(self, x: float) -> int:
        for lo, hi, ell in self.components:
            if lo < x < hi:
                return ell
        raise CausticHit(f"x={x} is a critical value")

    def to_dict(self) -> dict:
        def end(v):
            return None if not math.isfinite(v) else float(v)

        return {
            "t": float(self.t),
            "values": [float(v) for v in self.values],
            "components": [{"lo": end(lo), "hi": end(hi), "ell": int(ell)}
                           for lo, hi, ell in self.components],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "CausticSet":
        comps = [(-math.inf if c["lo"] is None else c["lo"],
                  math.inf if c["hi"] is None else c["hi"], c["ell"])
                 for c in data["components"]]
        return cls(data["t"], np.asarray(data["values"], dtype=float), comps)


@dataclass
class ZDField:
    """Samples of the weak limit on an ascending grid, tagged by backend."""

    t: float
    grid: np.ndarray
    values: np.ndarray
    backend: str
    ell: np.ndarray | None = None
    caustic: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have the same shape")
        n = self.grid.size
        self.ell = (np.full(n, -1, dtype=int) if self.ell is None
                    else np.asarray(self.ell, dtype=int))
        self.caustic = (np.zeros(n, dtype=bool) if self.caustic is None
                        else np.asarray(self.caustic, dtype=bool))

    def within_bounds(self, d: InitialDatum, tol=1e-9) -> bool:
        lo, hi = d.bounds()
        return bool(np.all(self.values >= lo - tol) and np.all(self.values <= hi + tol))

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value", "ell", "caustic_flag"])
        for x, v, l, c in zip(self.grid, self.values, self.ell, self.caustic):
            w.writerow([f"{x:.17g}", f"{v:.17g}", int(l), int(c)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str, t: float, backend: str) -> "ZDField":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(t, [float(r["x"]) for r in rows], [float(r["value"]) for r in rows],
                   backend, [int(r["ell"]) for r in rows],
                   [bool(int(r["caustic_flag"])) for r in rows])

# }}}


# {{{ solver

def _exterior_nodes(start, stop):
    """Geometrically spaced nodes from ``start`` outwards past ``stop``."""
    direction = 1.0 if stop > start else -1.0
    dist = abs(stop - start)
    k = max(1, int(math.ceil(math.log2(dist + 1.0))) + 1)
    return start + direction * (np.exp2(np.arange(1, k + 1)) - 1.0)


class FanSolver:
    """Reusable root finder for ``y + 2 t u0(y) = x`` at a fixed time.

    Construction locates the critical points of ``f_t``; queries at many
    ``x`` are then vectorized.
    """

    def __init__(self, d: InitialDatum, t: float, tol_root=TOL_ROOT,
                 tol_caustic=TOL_CAUSTIC, tol_merge=TOL_MERGE):
        if not d.differentiable:
            raise NotC1Error(f"{type(d).__name__} data is not C1; mollify it first")
        self.d = d
        self.t = float(t)
        self.tol_root = tol_root
        self.tol_caustic = tol_caustic
        self.tol_merge = tol_merge
        self.amplitude = d.linf()
        self._core = self._scan_nodes()
        self._find_critical_points()
        self._caustics = None

    # construction

    def _scan_nodes(self) -> np.ndarray:
        t, d = self.t, self.d
        pieces = []
        for seg in d.segments():
            a, b = seg.a, seg.b
            if not (math.isfinite(a) and math.isfinite(b)):
                # only rational data reach here: beyond this radius g > 0
                r = d.decay_radius(1.0 / (2.0 * abs(t))) if t != 0 else 1.0
                r = max(r, 1.0)
                a, b = max(a, -r), min(b, r)
            if b <= a:
                pieces.append(np.array([a]))
                continue
            pitch = 1.0 / (8.0 * (1.0 + 2.0 * abs(t) * seg.dmax))
            if seg.h > 0:
                pitch = min(pitch, seg.h)
            n = int(math.ceil((b - a) / pitch))
            if n > 2_000_000:
                raise SolveFailure(f"scan grid would need {n} cells")
            pieces.append(np.linspace(a, b, n + 1))
        if not pieces:
            return np.zeros(0)
        return np.unique(np.concatenate(pieces))

    def _g(self, y):
        return 1.0 + 2.0 * self.t * np.asarray(self.d.deriv(y), dtype=float)

    def _f(self, y):
        return y + 2.0 * self.t * np.asarray(self.d.value(y), dtype=float)

    def _find_critical_points(self):
        y = self._core
        crit = np.zeros(0)
        if self.t != 0.0 and y.size > 1:
            pos = self._g(y) > 0
            idx = np.nonzero(pos[:-1] != pos[1:])[0]
            lo, hi = y[idx].copy(), y[idx + 1].copy()
            plo = pos[idx]
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                same = (self._g(mid) > 0) == plo
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
                if np.all(hi - lo <= 1e-15 * (1.0 + np.abs(lo))):
                    break
            crit = np.unique(0.5 * (lo + hi))
        self.critical_points = crit
        self.critical_values_raw = self._f(crit) if crit.size else crit
        nodes = np.union1d(y, crit)
        self._nodes = nodes
        self._fnodes = self._f(nodes) if nodes.size else nodes
        self._crit_idx = np.searchsorted(nodes, crit)

    # caustics

    def merged_critical_values(self) -> np.ndarray:
        v = np.sort(self.critical_values_raw)
        if v.size == 0:
            return v
        keep = [v[0]]
        for val in v[1:]:
            if val - keep[-1] > self.tol_merge:
                keep.append(val)
        return np.asarray(keep)

    def caustic_set(self) -> CausticSet:
        if self._caustics is None:
            vals = self.merged_critical_values()
            ends = np.concatenate([[-math.inf], vals, [math.inf]])
            probes = []
            for lo, hi in zip(ends[:-1], ends[1:]):
                if math.isinf(lo) and math.isinf(hi):
                    probes.append(0.0)
                elif math.isinf(lo):
                    probes.append(hi - 1.0)
                elif math.isinf(hi):
                    probes.append(lo + 1.0)
                else:
                    probes.append(0.5 * (lo + hi))
            fans = self.fans(np.asarray(probes))
            comps = [(float(lo), float(hi), fan.ell)
                     for lo, hi, fan in zip(ends[:-1], ends[1:], fans)]
            self._caustics = CausticSet(self.t, vals, comps)
        return self._caustics

    def _shift_off_caustics(self, xs):
        vals = self.merged_critical_values()
        flags = np.zeros(xs.shape, dtype=bool)
        if vals.size == 0:
            return xs, flags
        xe = xs.copy()
        n = vals.size
        for _ in range(n + 1):
            j = np.searchsorted(vals, xe)
            near = np.minimum(np.abs(xe - vals[np.clip(j - 1, 0, n - 1)]),
                              np.abs(xe - vals[np.clip(j, 0, n - 1)]))
            hit = near <= self.tol_caustic
            if not np.any(hit):
                break
            flags |= hit
            xe = np.where(hit, xe + 2.0 * self.tol_caustic, xe)
        return xe, flags

    # root finding

    def _pieces(self, xmin, xmax):
        """Monotone pieces ``(nodes, f_t(nodes), increasing)`` covering all roots."""
        nodes, fn = self._nodes, self._fnodes
        reach = 2.0 * abs(self.t) * self.amplitude + 1.0
        left_stop, right_stop = xmin - reach, xmax + reach
        if nodes.size == 0:
            nodes = np.array([0.5 * (xmin + xmax)])
            fn = self._f(nodes)
        if nodes[0] > left_stop:
            ext = _exterior_nodes(nodes[0], left_stop)[::-1]
            nodes = np.concatenate([ext, nodes])
            fn = np.concatenate([self._f(ext), fn])
            shift = ext.size
        else:
            shift = 0
        if nodes[-1] < right_stop:
            ext = _exterior_nodes(nodes[-1], right_stop)
            nodes = np.concatenate([nodes, ext])
            fn = np.concatenate([fn, self._f(ext)])
        cuts = np.concatenate([[0], self._crit_idx + shift, [nodes.size - 1]])
        out = []
        for i0, i1 in zip(cuts[:-1], cuts[1:]):
            if i1 <= i0:
                continue
            y, f = nodes[i0:i1 + 1], fn[i0:i1 + 1]
            inc = bool(f[-1] >= f[0])
            out.append((y, f, inc))
        return out

    def _brackets(self, xs):
        owners, lo, hi = [], [], []
        for y, f, inc in self._pieces(float(xs.min()), float(xs.max())):
            if not inc:
                y, f = y[::-1], f[::-1]
            fm = np.maximum.accumulate(f)
            inside = (xs >= fm[0]) & (xs <= fm[-1])
            if not np.any(inside):
                continue
            k = np.nonzero(inside)[0]
            j = np.clip(np.searchsorted(fm, xs[k], side="right") - 1, 0, fm.size - 2)
            owners.append(k)
            lo.append(y[j])
            hi.append(y[j + 1])
        if not owners:
            return np.zeros(0, dtype=int), np.zeros(0), np.zeros(0)
        return np.concatenate(owners), np.concatenate(lo), np.concatenate(hi)

    def _polish(self, x, a, b):
        """Safeguarded Newton on brackets ``[a, b]`` (either orientation)."""
        fa, fb = self._f(a) - x, self._f(b) - x
        # orient so that f(a) <= 0 <= f(b)
        swap = fa > fb
        a, b = np.where(swap, b, a), np.where(swap, a, b)
        fa, fb = np.where(swap, fb, fa), np.where(swap, fa, fb)
        den = fb - fa
        with np.errstate(divide="ignore", invalid="ignore"):
            y = np.where(den > 0, a - fa * (b - a) / den, 0.5 * (a + b))
        y = np.where(fa == 0, a, np.where(fb == 0, b, y))
        done = np.zeros(x.shape, dtype=bool)
        for _ in range(200):
            r = self._f(y) - x
            done = np.abs(r) <= 0.25 * self.tol_root
            done |= np.abs(b - a) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(y))
            if np.all(done):
                break
            neg = r < 0
            a = np.where(neg & ~done, y, a)
            b = np.where(~neg & ~done, y, b)
            with np.errstate(divide="ignore", invalid="ignore"):
                yn = y - r / self._g(y)
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            bad = ~np.isfinite(yn) | (yn <= lo) | (yn >= hi)
            yn = np.where(bad, 0.5 * (a + b), yn)
            y = np.where(done, y, yn)
        return y

    def fans(self, xs) -> list[CharacteristicFan]:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if xs.size == 0:
            return []
        xe, flags = self._shift_off_caustics(xs)
        if self.t == 0.0:
            return [CharacteristicFan(0.0, float(x), np.array([x]), np.array([1]))
                    for x in xs]
        owner, a, b = self._brackets(xe)
        roots = self._polish(xe[owner], a, b) if owner.size else np.zeros(0)
        order = np.lexsort((roots, owner))
        owner, roots = owner[order], roots[order]
        signs = np.where(self._g(roots) > 0, 1, -1) if roots.size else np.zeros(0, int)
        bounds = np.searchsorted(owner, np.arange(xs.size + 1))
        out = []
        for i in range(xs.size):
            r = roots[bounds[i]:bounds[i + 1]]
            s = signs[bounds[i]:bounds[i + 1]]
            if r.size > 1:
                # a root sitting exactly on a shared piece end is found twice
                keep = np.concatenate([[True], np.diff(r) > self.tol_merge])
                r, s = r[keep], s[keep]
            caustic = bool(flags[i]) or r.size % 2 == 0
            out.append(CharacteristicFan(self.t, float(xs[i]), r, s, caustic))
        return out

    def fan(self, x) -> CharacteristicFan:
        return self.fans([x])[0]

    def values(self, xs):
        """Alternating sums, fan sizes and caustic flags at ``xs``."""
        fans = self.fans(xs)
        vals = np.array([f.alternating_sum(self.d) for f in fans])
        ell = np.array([f.ell for f in fans], dtype=int)
        flags = np.array([f.caustic for f in fans], dtype=bool)
        return vals, ell, flags

    def breakpoints(self, a, b) -> np.ndarray:
        """Points of ``[a, b]`` where the limit may fail to be smooth."""
        pts = [a, b]
        pts.extend(self.merged_critical_values())
        knots = self.d.knots()
        if knots.size:
            pts.extend(self._f(knots))
        pts = np.asarray(pts, dtype=float)
        return np.unique(pts[(pts >= a) & (pts <= b)])

# }}}


# {{{ public operations

def critical_values(d: InitialDatum, t: float) -> CausticSet:
    """Critical values of ``y -> y + 2 t u0(y)`` with the fan size between them."""
    return FanSolver(d, t).caustic_set()


def solve_fan(d: InitialDatum, t: float, x: float) -> CharacteristicFan:
    """All real roots of ``y + 2 t u0(y) = x``; at caustics the right-limit fan, flagged."""
    return FanSolver(d, t).fan(x)


def zd_pointwise(d: InitialDatum, t: float, x: float, strict: bool = True) -> float:
    """Alternating sum over the characteristic fan at ``(t, x)``.

    With ``strict`` a caustic point raises :class:`CausticHit` carrying the
    right-limit fan and its value; otherwise that value is returned.
    """
    fan = solve_fan(d, t, x)
    value = fan.alternating_sum(d)
    if fan.caustic and strict:
        raise CausticHit(f"x={x} is a caustic at t={t}", fan=fan, value=value)
    return value


def zd_grid(d: InitialDatum, t: float, grid) -> ZDField:
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    vals, ell, flags = FanSolver(d, t).values(grid)
    meta = {"caustic_points": grid[flags].tolist()}
    return ZDField(t, grid, vals, "characteristics", ell, flags, meta)


def zd_integral(d: InitialDatum, t: float, weight, a: float, b: float,
                solver: FanSolver | None = None, order=16, max_width=0.05) -> float:
    """``int_a^b ZD(t, x) weight(x) dx`` by Gauss-Legendre panels split at kinks."""
    solver = solver or FanSolver(d, t)
    nodes, w = gauss_legendre_panels(solver.breakpoints(a, b), order, max_width)
    vals, _, _ = solver.values(nodes)
    return float(np.sum(w * vals * weight(nodes)))


def _preimage_pieces(d, t, phi):
    """Intervals of ``y`` on which ``y + 2t u0(y)`` lies inside the support of ``phi``."""
    solver = FanSolver(d, t)
    ends = solver.fans([phi.a, phi.b])
    pts = [ends[0].roots, ends[1].roots, solver.critical_points]
    knots = d.knots()
    if knots.size <= 64:
        # sampled data are C1 at their nodes; only sparse knots are genuine kinks
        pts.append(knots)
    pts = np.unique(np.concatenate(pts))
    mids = 0.5 * (pts[:-1] + pts[1:])
    fm = solver._f(mids) if mids.size else mids
    keep = (fm > phi.a) & (fm < phi.b)
    return list(zip(pts[:-1][keep], pts[1:][keep]))


def _quad(func, lo, hi):
    val, err, info, *msg = integrate.quad(func, lo, hi, limit=200, epsabs=1e-11,
                                          epsrel=1e-11, full_output=1)
    if msg and err > 1e-8:
        raise SolveFailure(f"quadrature did not converge: {msg[0]}", condition=err)
    return float(val)


def weak_pairing(d: InitialDatum, t: float, phi: TestFunction) -> float:
    """``int phi(y + 2t u0) u0 (1 + 2t u0') dy``, the grid-free value of ``int ZD phi``."""
    if d.is_zero():
        return 0.0

    def integrand(y):
        u = d.value(y)
        return phi.f(y + 2.0 * t * u) * u * (1.0 + 2.0 * t * d.deriv(y))

    return sum(_quad(integrand, lo, hi) for lo, hi in _preimage_pieces(d, t, phi))


def pushforward_pairing(d: InitialDatum, t: float, phi: TestFunction) -> float:
    """``int phi(y + 2t u0(y)) dy``."""
    return sum(_quad(lambda y: phi.f(y + 2.0 * t * d.value(y)), lo, hi)
               for lo, hi in _preimage_pieces(d, t, phi))


_STENCIL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def burgers_weak_residual(d: InitialDatum, t: float, window, dt: float,
                          h: float = 1e-3, nx: int = 48, nt: int = 16) -> float:
    """``<d_t u + d_x(u^2), psi>`` for a product bump ``psi`` on ``window x [t-dt, t+dt]``.

    The time derivative uses the five-point centred stencil with step ``h``;
    both integrals are Gauss-Legendre.  Raises :class:`CausticHit` if a
    caustic crosses the window during the time interval.
    """
    a, b = map(float, window)
    if not (b > a and dt > 0):
        raise ValueError("need a non-empty window and dt > 0")
    if d.is_zero():
        return 0.0
    bx = bump(0.5 * (a + b), 0.5 * (b - a))
    bt = bump(t, dt)
    xs, wx = gauss_legendre_panels([a, b], nx)
    ss, ws = gauss_legendre_panels([t - dt, t + dt], nt)
    psi_x, dpsi_x = bx.f(xs), bx.df(xs)
    total = 0.0
    for s, w in zip(ss, ws):
        layers = []
        for k in range(-2, 3):
            solver = FanSolver(d, s + k * h)
            vals = solver.merged_critical_values()
            if np.any((vals >= a) & (vals <= b)):
                raise CausticHit(f"caustic inside window at t={s + k * h:.6g}")
            layers.append(solver.values(xs)[0])
        layers = np.asarray(layers)
        u_t = _STENCIL @ layers / h
        u = layers[2]
        inner = np.sum(wx * (u_t * psi_x - u * u * dpsi_x))
        total += w * bt.f(s) * inner
    return float(total)

# }}}
