"""Registry of verification checks shared by ``zd verify`` and the test-suite.

Each check returns a :class:`CheckResult` carrying the measured quantity,
the tolerance it was held to and a pass flag.  Checks are grouped in two
suites: ``acceptance`` (the end-to-end numerical criteria) and
``invariants`` (cheaper structural properties of every backend).
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import bo_eps, closedforms, hardy, rational
from .characteristics import (
    FanSolver,
    burgers_weak_residual,
    critical_values,
    pushforward_pairing,
    solve_fan,
    weak_pairing,
    zd_grid,
    zd_integral,
    zd_pointwise,
)
from .datum import Rational, Step, mollify, sampled_from_function, zero_datum
from .errors import CausticHit
from .testfunctions import bump, random_bumps

__all__ = [
    "CheckResult",
    "SUITES",
    "register",
    "checks",
    "run_check",
    "run_suite",
    "gaussian",
    "lorentzian",
    "eps_phis",
]

SUITES = ("invariants", "acceptance")


@dataclass
class CheckResult:
    name: str
    suite: str
    passed: bool
    value: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.name}: value={self.value:.6g} tol={self.tolerance:.3g} "
                f"({self.seconds:.1f}s)")

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, Fraction)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


_REGISTRY: dict[str, tuple[str, object]] = {}


def register(name: str, suite: str):
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")

    def deco(func):
        _REGISTRY[name] = (suite, func)
        return func

    return deco


def checks(suite: str = "all") -> list[str]:
    if suite == "all":
        return list(_REGISTRY)
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES + ('all',)}")
    return [n for n, (s, _) in _REGISTRY.items() if s == suite]


def run_check(name: str, fixtures: Path | None = None) -> CheckResult:
    suite, func = _REGISTRY[name]
    start = time.perf_counter()
    try:
        passed, value, tol, detail = func(fixtures=fixtures)
    except Exception as exc:  # a crashing check is a failing check
        passed, value, tol, detail = False, float("nan"), float("nan"), {
            "error": f"{type(exc).__name__}: {exc}"}
    return CheckResult(name, suite, bool(passed), float(value), float(tol), detail,
                       time.perf_counter() - start)


def run_suite(suite: str = "all", fixtures: Path | None = None, progress=None
              ) -> list[CheckResult]:
    out = []
    for name in checks(suite):
        res = run_check(name, fixtures)
        if progress is not None:
            progress(res)
        out.append(res)
    return out


# {{{ shared data

def gaussian(lo=-8.0, hi=8.0, n=1601):
    return sampled_from_function(lambda y: np.exp(-y * y),
                                 lambda y: -2.0 * y * np.exp(-y * y), lo, hi, n)


def lorentzian(height=1.0) -> Rational:
    """``height / (1 + y^2)``."""
    return Rational.from_polynomials([float(height)], [1.0, 0.0, 1.0])


def eps_phis():
    """Test functions for the epsilon trend: wide enough to average out the
    dispersive oscillations at the epsilons used."""
    return [bump(-0.5, 1.0), bump(1.0, 1.5), bump(1.5, 1.0)]


def _random_smooth_datum(rng):
    # a few Gaussians of random sign and width, sampled on a fixed window
    k = rng.integers(1, 4)
    amps = rng.uniform(-1.5, 1.5, k)
    centres = rng.uniform(-2.0, 2.0, k)
    widths = rng.uniform(0.4, 1.2, k)

    def f(y):
        y = np.asarray(y, dtype=float)[..., None]
        return np.sum(amps * np.exp(-((y - centres) / widths) ** 2), axis=-1)

    def df(y):
        y = np.asarray(y, dtype=float)[..., None]
        z = (y - centres) / widths
        return np.sum(-2.0 * amps * z / widths * np.exp(-z * z), axis=-1)

    return sampled_from_function(f, df, -8.0, 8.0, 801)


def _criterion2_sample(rng, n=1000):
    """Off-caustic ``(t, x)`` pairs for ``3/(1 + y^2)`` with the fan-side value."""
    d = lorentzian(3.0)
    pts = []
    while len(pts) < n:
        t = rng.uniform(-3.0, 3.0)
        x = rng.uniform(-8.0, 8.0)
        if abs(t) < 1e-3:
            continue
        solver = FanSolver(d, t)
        crit = solver.merged_critical_values()
        if crit.size and np.min(np.abs(crit - x)) < 1e-6:
            continue
        pts.append((t, x, solver.fan(x).alternating_sum(d)))
    return d, pts

# }}}


# {{{ acceptance

@register("acceptance_1_step_profile", "acceptance")
def _acc_step_profile(fixtures=None):
    delta = 1e-3
    d = mollify(Step(-1.0, 1.0, 1.0), delta)
    worst, detail = 0.0, {}
    for t in (0.5, 1.0, 2.0):
        grid = np.linspace(-2.0, 2.0 * t + 2.0, 400)
        kinks = np.array(closedforms.step_profile(t).breakpoints, dtype=float)
        keep = np.min(np.abs(grid[:, None] - kinks[None, :]), axis=1) > 5 * delta
        field_ = zd_grid(d, t, grid)
        exact = np.array([closedforms.zd_step(t, x) for x in grid])
        err = float(np.max(np.abs(field_.values - exact)[keep]))
        detail[f"t={t}"] = err
        worst = max(worst, err)
    return worst <= 1e-2, worst, 1e-2, detail


@register("acceptance_2_rational_vs_characteristics", "acceptance")
def _acc_rational(fixtures=None):
    d, pts = _criterion2_sample(np.random.default_rng(2))
    worst = 0.0
    for t, x, fan_value in pts:
        worst = max(worst, abs(rational.zd_rational(d, t, x) - fan_value))
    return worst <= 1e-8, worst, 1e-8, {"samples": len(pts)}


@register("acceptance_3_cauchy_vandermonde", "acceptance")
def _acc_cauchy(fixtures=None):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(0, 7))
        z = rng.normal(size=m + 1) + 1j * rng.normal(size=m + 1)
        p = rng.normal(size=m) + 1j * rng.normal(size=m)
        num, den = rational.cauchy_vandermonde_matrices(z, p)
        oracle = np.linalg.det(num) / np.linalg.det(den)
        got = rational.cauchy_vandermonde_ratio(z, p)
        worst = max(worst, abs(got - oracle) / max(abs(oracle), 1e-300))
    return worst <= 1e-9, worst, 1e-9, {"instances": 200}


@register("acceptance_4_lambda_system", "acceptance")
def _acc_lambda(fixtures=None):
    d, pts = _criterion2_sample(np.random.default_rng(2))
    lam_err, root_sum = 0.0, 0.0
    for t, x, _ in pts:
        direct = rational.lambda_direct(d, t, x)
        system = rational.lambda_system(d, t, x)
        lam_err = max(lam_err, abs(direct - system.lam))
        sel = rational.classify_roots(rational.char_poly(d, t, x), d, t, x).selected
        res = abs(np.sum(sel) - np.sum(d.poles) - x - 2.0 * t * system.lam)
        root_sum = max(root_sum, res / (1.0 + abs(x)))
    ok = lam_err <= 1e-8 and root_sum <= 1e-9
    return ok, lam_err, 1e-8, {"root_sum_residual": root_sum}


@register("acceptance_5_maximum_principle", "acceptance")
def _acc_max_principle(fixtures=None):
    rng = np.random.default_rng(5)
    bound_excess, lip_excess = -np.inf, -np.inf
    for _ in range(20):
        d = _random_smooth_datum(rng)
        lo, hi = d.bounds()
        for t in (0.5, 1.0, 2.0):
            solver = FanSolver(d, t)
            xs = np.sort(rng.uniform(-8.0, 12.0, 12))
            vals, _, _ = solver.values(xs)
            bound_excess = max(bound_excess, float(np.max(vals - hi)),
                               float(np.max(lo - vals)))
            slack = np.diff(vals) - np.diff(xs) / (2.0 * t)
            lip_excess = max(lip_excess, float(np.max(slack)))
        # 3 x 12 grid points plus 14 free points: 50 per datum, 1000 in all
        ts = rng.uniform(-3.0, 3.0, 14)
        for t in ts:
            v = zd_pointwise(d, t, rng.uniform(-8.0, 12.0), strict=False)
            bound_excess = max(bound_excess, v - hi, lo - v)
    ok = bound_excess <= 1e-9 and lip_excess <= 1e-6
    return ok, max(bound_excess, 0.0), 1e-9, {"lipschitz_excess": lip_excess}


@register("acceptance_6_pairing_identities", "acceptance")
def _acc_pairings(fixtures=None):
    d, t = gaussian(), 2.0
    solver = FanSolver(d, t)
    worst = 0.0
    for phi in random_bumps(np.random.default_rng(6), 20, -3.0, 6.0):
        lhs = zd_integral(d, t, phi.f, phi.a, phi.b, solver=solver)
        weak = abs(lhs - weak_pairing(d, t, phi))
        lhs_d = -2.0 * t * zd_integral(d, t, phi.df, phi.a, phi.b, solver=solver)
        mass = _integral(phi.f, phi.a, phi.b)
        deriv = abs(lhs_d - (mass - pushforward_pairing(d, t, phi)))
        worst = max(worst, max(weak, deriv) / (1.0 + phi.sup))
    return worst <= 1e-4, worst, 1e-4, {}


def _integral(func, a, b):
    from scipy import integrate

    return integrate.quad(func, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def _poisson_smoothed_rational(d, t, xs, sigma):
    # tabulate the limit, spline it, and smooth with the Poisson kernel
    inner = np.linspace(-12.0, 12.0, 2401)
    outer = np.concatenate([np.linspace(-200.0, -12.0, 471)[:-1],
                            np.linspace(12.0, 200.0, 471)[1:]])
    nodes = np.sort(np.concatenate([inner, outer]))
    vals = rational.zd_rational_grid(d, t, nodes).values
    spline = CubicSpline(nodes, vals)
    return hardy.poisson_extension(spline, xs, sigma)


@register("acceptance_7_hardy_backend", "acceptance")
def _acc_hardy(fixtures=None):
    d = lorentzian()
    xs = np.linspace(-3.0, 3.0, 61)
    sigma0 = 0.5
    trace0 = hardy.boundary_trace(d, 0.0, xs, sigma0, modes=2048).values
    # Poisson extension of 1/(1+y^2) at height s is (1+s)/(x^2 + (1+s)^2)
    exact0 = (1 + sigma0) / (xs ** 2 + (1 + sigma0) ** 2)
    err0 = float(np.max(np.abs(trace0 - exact0)))
    t, sigma = 0.1, 0.05
    trace = hardy.boundary_trace(d, t, xs, sigma, modes=2048).values
    ref = _poisson_smoothed_rational(d, t, xs, sigma)
    err = float(np.max(np.abs(trace - ref)))
    coarse = hardy.boundary_trace(d, t, xs, sigma, modes=512).values
    err_coarse = float(np.max(np.abs(coarse - ref)))
    ok = err0 <= 1e-6 and err <= 3e-2 and err_coarse <= 3e-2
    return ok, err, 3e-2, {"t0_error": err0, "m512_error": err_coarse}


@register("acceptance_8_eps_trend", "acceptance")
def _acc_eps(fixtures=None):
    d = mollify(Step(-1.0, 1.0, 1.0), 0.1)
    t = 0.5
    phis = eps_phis()
    gaps, drifts = [], []
    for eps in (0.2, 0.1, 0.05):
        cfg = bo_eps.EpsRunConfig(eps, d, t, modes=2 ** 13)
        sol = bo_eps.run(cfg)
        gaps.append([bo_eps.weak_gap(cfg, t, phi, sol) for phi in phis])
        drifts.append(sol.l2_drift())
    gaps = np.array(gaps)
    decreasing = bool(np.all(np.diff(gaps, axis=0) < 0))
    drift = max(drifts)
    return decreasing and drift <= 1e-6, drift, 1e-6, {
        "gaps": gaps.tolist(), "strictly_decreasing": decreasing}


@register("acceptance_9_semigroup_gap", "acceptance")
def _acc_semigroup(fixtures=None):
    half = closedforms.semigroup_gap(Fraction(1, 2), Fraction(3, 2)).gap
    err = abs(float(half) - 1.0 / 6.0)
    seq = [float(closedforms.semigroup_gap(2.0 ** -k, n=2001).gap) for k in range(1, 7)]
    shrinking = all(b < a for a, b in zip(seq, seq[1:])) and seq[-1] <= 2.0 ** -6
    return err <= 1e-9 and shrinking, err, 1e-9, {
        "gap_at_half": float(half), "sequence": seq}


@register("acceptance_10_non_weak_residual", "acceptance")
def _acc_residual(fixtures=None):
    d, t, dt = gaussian(), 2.0, 0.1
    fold = abs(burgers_weak_residual(d, t, (2.3, 3.2), dt))
    smooth = abs(burgers_weak_residual(d, t, (-1.2, -0.3), dt))
    ratio = fold / max(smooth, 1e-300)
    return ratio > 10.0, ratio, 10.0, {"ell1_residual": fold, "ell0_residual": smooth}


@register("acceptance_11_caustic_consistency", "acceptance")
def _acc_caustics(fixtures=None):
    rng = np.random.default_rng(11)
    mismatches, probes = 0, 0
    cases = [(gaussian(), 2.0), (gaussian(), 5.0), (lorentzian(3.0), 2.0),
             (_random_smooth_datum(rng), 1.5)]
    per = 250
    for d, t in cases:
        cs = critical_values(d, t)
        solver = FanSolver(d, t)
        xs = rng.uniform(-10.0, 25.0, per)
        for fan, x in zip(solver.fans(xs), xs):
            probes += 1
            if fan.roots.size != 2 * cs.ell_at(x) + 1:
                mismatches += 1
    return mismatches == 0, mismatches, 0, {"probes": probes}

# }}}


# {{{ invariants

@register("golden_step_fixture", "invariants")
def _inv_golden(fixtures=None):
    text = None
    if fixtures is not None:
        text = (Path(fixtures) / "step_golden.csv").read_text()
    rows = closedforms.load_golden(text)
    worst = max(abs(v - float(closedforms.zd_unit_step(t, x))) for t, x, v in rows)
    return worst <= 1e-15, worst, 1e-15, {"rows": len(rows)}


@register("semigroup_gap_report", "invariants")
def _inv_semigroup(fixtures=None):
    gap = float(closedforms.semigroup_gap(Fraction(1, 2), Fraction(3, 2)).gap)
    return abs(gap - 1 / 6) <= 1e-12, gap, 1e-12, {"gap_at_half": round(gap, 5)}


@register("initial_time_identity", "invariants")
def _inv_t0(fixtures=None):
    d = gaussian()
    xs = np.linspace(-4.0, 4.0, 81)
    err = float(np.max(np.abs(zd_grid(d, 0.0, xs).values - d.value(xs))))
    return err <= 1e-14, err, 1e-14, {}


@register("zero_datum_all_backends", "invariants")
def _inv_zero(fixtures=None):
    z = zero_datum()
    xs = np.linspace(-3.0, 3.0, 13)
    vals = [zd_grid(z, 3.0, xs).values,
            rational.zd_rational_grid(z, 3.0, xs).values,
            hardy.boundary_trace(z, 3.0, xs, 0.1).values]
    worst = float(max(np.max(np.abs(v)) for v in vals))
    return worst == 0.0, worst, 0.0, {}


@register("caustic_fan_parity", "invariants")
def _inv_fan(fixtures=None):
    d = gaussian()
    bad = 0
    for x in np.linspace(-3.0, 6.0, 91):
        fan = solve_fan(d, 2.0, x)
        bad += int(fan.roots.size % 2 != 1 or np.any(fan.deriv_signs[::2] < 0))
    return bad == 0, bad, 0, {}


@register("rational_root_count", "invariants")
def _inv_roots(fixtures=None):
    d = lorentzian(3.0)
    bad = 0
    for x in np.linspace(-6.0, 14.0, 101):
        try:
            cls = rational.classify_roots(rational.char_poly(d, 2.0, x), d, 2.0, x)
        except CausticHit:
            continue
        bad += int(cls.selected.size != d.N + 1)
    return bad == 0, bad, 0, {}


@register("maximum_principle_quick", "invariants")
def _inv_maxp(fixtures=None):
    d = gaussian()
    vals = zd_grid(d, 2.0, np.linspace(-4.0, 8.0, 241)).values
    excess = max(float(np.max(vals)) - 1.0, -float(np.min(vals)), 0.0)
    return excess <= 1e-9, excess, 1e-9, {}


@register("eps_conservation", "invariants")
def _inv_eps(fixtures=None):
    cfg = bo_eps.EpsRunConfig(0.2, gaussian(), 0.2, modes=2 ** 11)
    sol = bo_eps.run(cfg)
    means = [c["mean"] for c in sol.conserved]
    mean_err = abs(means[-1] - means[0])
    drift = sol.l2_drift()
    return drift <= 1e-6 and mean_err <= 1e-12, drift, 1e-6, {"mean_change": mean_err}


@register("csv_determinism", "invariants")
def _inv_determinism(fixtures=None):
    d = gaussian()
    xs = np.linspace(-3.0, 6.0, 50)
    same = zd_grid(d, 2.0, xs).to_csv() == zd_grid(d, 2.0, xs).to_csv()
    return same, float(not same), 0.0, {}

# }}}
