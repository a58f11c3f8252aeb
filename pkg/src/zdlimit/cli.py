"""``zd``: evaluate the zero-dispersion limit, run sweeps and verification suites.

Every command that writes files also writes ``manifest.json`` next to them,
listing the command line, the datum descriptor, the numerical settings and
each output file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bo_eps, closedforms, hardy, rational, verify
from .characteristics import ZDField, zd_grid
from .datum import InitialDatum, PiecewiseLinear, Rational, Step, from_dict, to_dict
from .errors import ZDError
from .testfunctions import bump

BACKENDS = ("characteristics", "rational", "hardy", "eps", "closedform")

_VALID_PAIRS = {
    "characteristics": "any differentiable or piecewise-linear datum (mollify steps first)",
    "rational": "rational data (and zero)",
    "hardy": "rational or differentiable data (not raw steps); needs --sigma",
    "eps": "any datum except raw steps",
    "closedform": "step or piecewise-linear data",
}


class UsageError(Exception):
    pass


# {{{ helpers

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ZD_THREADS", "1")))
    except ValueError:
        return 1


def parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"--grid expects lo:hi:n, got {text!r}") from None
    if n < 1 or (n > 1 and not hi > lo):
        raise UsageError("--grid needs n >= 1 and lo < hi")
    return np.linspace(lo, hi, n)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def load_datum(path: str) -> InitialDatum:
    try:
        desc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read datum {path}: {exc}") from None
    try:
        return from_dict(desc)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid datum {path}: {exc}") from None


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _write(out: Path, name: str, text: str, written: list):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    written.append(name)


def _manifest(out: Path, argv, datum, written, started, **extra):
    data = {
        "command": ["zd", *argv],
        "datum": to_dict(datum) if datum is not None else None,
        "outputs": list(written),
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
        **extra,
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(verify._jsonable(data), indent=2) + "\n")

# }}}


# {{{ eval

def _check_pair(datum: InitialDatum, backend: str, sigma):
    ok = {
        "characteristics": not isinstance(datum, Step),
        "rational": isinstance(datum, Rational),
        "hardy": not isinstance(datum, (Step, PiecewiseLinear)) and sigma is not None,
        "eps": not isinstance(datum, Step),
        "closedform": isinstance(datum, (Step, PiecewiseLinear)) or datum.is_zero(),
    }[backend]
    if not ok:
        pairs = "\n".join(f"  {b}: {why}" for b, why in _VALID_PAIRS.items())
        raise UsageError(
            f"backend {backend!r} cannot handle a {type(datum).__name__} datum"
            f"{' without --sigma' if backend == 'hardy' and sigma is None else ''}."
            f" Valid pairs:\n{pairs}")


def evaluate_field(datum, t, grid, backend, sigma=None, epsilon=None, modes=None):
    """The limit (or its stand-in for ``eps``/``hardy``) on ``grid`` as a :class:`ZDField`."""
    _check_pair(datum, backend, sigma)
    if backend == "characteristics":
        return zd_grid(datum, t, grid)
    if backend == "rational":
        return rational.zd_rational_grid(datum, t, grid)
    if backend == "hardy":
        return hardy.boundary_trace(datum, t, grid, sigma, modes=modes or hardy.DEFAULT_MODES)
    if backend == "eps":
        if epsilon is None:
            raise UsageError("the eps backend needs --epsilon")
        cfg = bo_eps.EpsRunConfig(epsilon, datum, t, modes=modes or 2 ** 13)
        sol = bo_eps.run(cfg)
        vals = sol.interpolate(t, grid) if not datum.is_zero() else np.zeros(grid.size)
        return ZDField(t, grid, vals, "eps", meta={"run": sol.manifest()})
    if datum.is_zero():
        vals = np.zeros(grid.size)
    elif isinstance(datum, Step):
        vals = np.array([float(closedforms.zd_step(t, x, datum.left, datum.right,
                                                    datum.height)) for x in grid])
    else:
        vals = np.array([float(closedforms.zd_piecewise_linear(datum, t, x)) for x in grid])
    return ZDField(t, grid, vals, "closedform")


def cmd_eval(args, argv):
    started = time.perf_counter()
    datum = load_datum(args.datum)
    grid = parse_grid(args.grid)
    field = evaluate_field(datum, args.t, grid, args.backend, args.sigma, args.epsilon,
                           args.modes)
    out = Path(args.out)
    written = []
    name = f"zd_{args.backend}.csv"
    _write(out, name, field.to_csv(), written)
    _manifest(out, argv, datum, written, started, backend=args.backend, t=args.t,
              grid=args.grid, sigma=args.sigma, epsilon=args.epsilon,
              caustic_points=int(np.count_nonzero(field.caustic))
              if field.caustic is not None else 0,
              meta=field.meta)
    print(out / name)
    return 0

# }}}


# {{{ compare-backends

def cmd_compare(args, argv):
    started = time.perf_counter()
    datum = load_datum(args.datum)
    grid = parse_grid(args.grid)
    names = [b.strip() for b in args.backends.split(",")]
    if len(names) != 2 or any(b not in BACKENDS for b in names):
        raise UsageError(f"--backends takes two of {', '.join(BACKENDS)}")
    fields = [evaluate_field(datum, args.t, grid, b, args.sigma, args.epsilon, args.modes)
              for b in names]
    diff = fields[0].values - fields[1].values
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", names[0], names[1], "difference"])
    for x, a, b, dv in zip(grid, fields[0].values, fields[1].values, diff):
        w.writerow([_fmt(x), _fmt(a), _fmt(b), _fmt(dv)])
    out = Path(args.out)
    written = []
    _write(out, "compare.csv", buf.getvalue(), written)
    max_diff = float(np.max(np.abs(diff))) if diff.size else 0.0
    _manifest(out, argv, datum, written, started, backends=names, t=args.t,
              grid=args.grid, max_abs_difference=max_diff)
    print(f"max |{names[0]} - {names[1]}| = {max_diff:.3e}")
    return 0

# }}}


# {{{ eps-sweep

def _parse_phis(items):
    if not items:
        return verify.eps_phis()
    phis = []
    for s in items:
        try:
            c, w = (float(v) for v in s.split(":"))
        except ValueError:
            raise UsageError(f"--phi expects centre:half_width, got {s!r}") from None
        phis.append(bump(c, w))
    return phis


def eps_sweep(datum, t, epsilons, phis, modes=2 ** 13):
    """Rows ``(epsilon, phi_id, gap)`` and the L2 drift of each run."""
    epsilons = sorted(epsilons, reverse=True)
    # the smallest epsilon is the binding resolution constraint
    if not datum.is_zero():
        bo_eps.EpsRunConfig(min(epsilons), datum, t, modes=modes).resolved().check_resolution()

    def one(eps):
        cfg = bo_eps.EpsRunConfig(eps, datum, t, modes=modes)
        if datum.is_zero():
            return eps, [0.0] * len(phis), 0.0
        sol = bo_eps.run(cfg)
        return eps, [bo_eps.weak_gap(cfg, t, phi, sol) for phi in phis], sol.l2_drift()

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, epsilons))
    rows = [(eps, i, g) for eps, gaps, _ in results for i, g in enumerate(gaps)]
    drifts = {eps: drift for eps, _, drift in results}
    return rows, drifts


NEGLIGIBLE_GAP = 1e-6


def trend_verdicts(rows) -> dict:
    """Per test function: ``decreasing``, ``negligible`` (all gaps at quadrature
    level, e.g. ``t = 0``) or ``not decreasing``, reading epsilon downwards."""
    by_phi: dict[int, list] = {}
    for eps, i, g in sorted(rows, key=lambda r: -r[0]):
        by_phi.setdefault(i, []).append(g)
    out = {}
    for i, g in by_phi.items():
        if all(v <= NEGLIGIBLE_GAP for v in g):
            out[i] = "negligible"
        elif all(b < a for a, b in zip(g, g[1:])):
            out[i] = "decreasing"
        else:
            out[i] = "not decreasing"
    return out


def cmd_eps_sweep(args, argv):
    started = time.perf_counter()
    datum = load_datum(args.datum)
    phis = _parse_phis(args.phi)
    rows, drifts = eps_sweep(datum, args.t, parse_floats(args.epsilons), phis, args.modes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "phi_id", "gap"])
    for eps, i, g in rows:
        w.writerow([_fmt(eps), i, _fmt(g)])
    out = Path(args.out)
    written = []
    _write(out, "eps_sweep.csv", buf.getvalue(), written)
    verdicts = trend_verdicts(rows)
    _manifest(out, argv, datum, written, started, t=args.t, modes=args.modes,
              phis=[{"a": p.a, "b": p.b} for p in phis], l2_drift=drifts,
              trend=verdicts)
    for i, verdict in verdicts.items():
        print(f"phi {i}: {verdict}")
    return 0

# }}}


# {{{ verify / fixtures

def cmd_verify(args, argv):
    started = time.perf_counter()
    fixtures = Path(args.fixtures) if args.fixtures else None
    results = verify.run_suite(args.suite, fixtures, progress=lambda r: print(r.line(),
                                                                             flush=True))
    failed = [r.name for r in results if not r.passed]
    report = {"suite": args.suite, "passed": not failed, "failed": failed,
              "checks": [r.to_dict() for r in results]}
    if args.out:
        out = Path(args.out)
        written = []
        _write(out, "report.json", json.dumps(report, indent=2) + "\n", written)
        _manifest(out, argv, None, written, started, suite=args.suite,
                  results={r.name: r.passed for r in results})
    if failed:
        print("failed: " + ", ".join(failed))
        return 1
    return 0


def cmd_fixtures(args, argv):
    started = time.perf_counter()
    out = Path(args.out)
    written = []
    _write(out, "step_golden.csv", closedforms.golden_csv(), written)
    _manifest(out, argv, None, written, started, times=list(closedforms.GOLDEN_TIMES))
    print(out / "step_golden.csv")
    return 0

# }}}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--datum", required=True, help="datum descriptor (JSON file)")
        sp.add_argument("--t", type=float, required=True, help="time")
        if grid:
            sp.add_argument("--grid", default="-5:5:201", help="lo:hi:n (default %(default)s)")
        sp.add_argument("--sigma", type=float, default=None,
                        help="height above the real axis (hardy backend)")
        sp.add_argument("--epsilon", type=float, default=None, help="dispersion (eps backend)")
        sp.add_argument("--modes", type=int, default=None,
                        help="discretization size (hardy half-line nodes or eps Fourier modes)")
        sp.add_argument("--out", default="zd_out", help="output directory")

    ev = sub.add_parser("eval", help="evaluate the limit on a grid")
    common(ev)
    ev.add_argument("--backend", choices=BACKENDS, default="characteristics")
    ev.set_defaults(func=cmd_eval)

    cmp_ = sub.add_parser("compare-backends", help="difference of two backends on a grid")
    common(cmp_)
    cmp_.add_argument("--backends", default="characteristics,rational")
    cmp_.set_defaults(func=cmd_compare)

    sw = sub.add_parser("eps-sweep", help="weak gaps of the dispersive solution vs the limit")
    sw.add_argument("--datum", required=True)
    sw.add_argument("--t", type=float, required=True)
    sw.add_argument("--epsilons", default="0.2,0.1,0.05")
    sw.add_argument("--phi", action="append",
                    help="bump test function centre:half_width (repeatable)")
    sw.add_argument("--modes", type=int, default=2 ** 13)
    sw.add_argument("--out", default="zd_out")
    sw.set_defaults(func=cmd_eps_sweep)

    vf = sub.add_parser("verify", help="run a verification suite")
    vf.add_argument("suite", choices=("invariants", "acceptance", "all"))
    vf.add_argument("--fixtures", default=None,
                    help="directory holding step_golden.csv to check instead of the shipped one")
    vf.add_argument("--out", default=None, help="write report.json here")
    vf.set_defaults(func=cmd_verify)

    fx = sub.add_parser("fixtures", help="regenerate the golden step table")
    fx.add_argument("--out", default="zd_out")
    fx.set_defaults(func=cmd_fixtures)
    return p


def _glue_grid(argv):
    # "--grid -2:6:9" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--grid" and i + 1 < len(argv):
            out.append(f"--grid={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_glue_grid(argv))
    try:
        return args.func(args, argv)
    except UsageError as exc:
        parser.error(str(exc))
    except ZDError as exc:
        print(f"zd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
