"""Pseudo-spectral solver for the small-dispersion equation
``u_t + (u^2)_x = eps d_x |D| u`` on a periodic box ``[-L, L)``.

The dispersive term has the purely imaginary symbol ``i eps k |k|`` and is
integrated exactly (integrating factor); the nonlinearity is evaluated on
the grid with the 2/3 de-aliasing rule and advanced with classical RK4.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .characteristics import FanSolver, zd_integral
from .datum import InitialDatum
from .errors import BlowupError, UnderResolved
from .testfunctions import TestFunction

__all__ = [
    "CFL",
    "RESOLUTION_CELLS",
    "EpsRunConfig",
    "EpsSolution",
    "SpectralState",
    "initial_state",
    "step",
    "run",
    "weak_gap",
    "pairing",
]

CFL = 0.5
RESOLUTION_CELLS = 8.0
_MARGIN = 2.0


@dataclass(frozen=True)
class EpsRunConfig:
    """Parameters of one run; ``None`` entries are filled in by :meth:`resolved`.

    ``scale`` multiplies the datum (used for the ``eps -> 1`` rescaling).
    """

    epsilon: float
    datum: InitialDatum
    t_final: float
    half_length: float | None = None
    modes: int = 2 ** 13
    dt: float | None = None
    dealias: float = 2.0 / 3.0
    scale: float = 1.0
    snapshot_times: tuple = ()

    @property
    def amplitude(self) -> float:
        return abs(self.scale) * self.datum.linf()

    def resolved(self) -> "EpsRunConfig":
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.modes < 16 or self.modes & (self.modes - 1):
            raise ValueError("modes must be a power of two >= 16")
        L = self.half_length
        if L is None:
            supp = self.datum.support()
            radius = max(abs(supp[0]), abs(supp[1])) if supp else 8.0
            L = max(8.0, math.ceil(radius + abs(self.t_final) * (1 + 2 * self.amplitude)
                                   + _MARGIN))
        dx = 2.0 * L / self.modes
        dt_max = CFL * dx / (1.0 + 2.0 * self.amplitude)
        dt = dt_max if self.dt is None else self.dt
        if dt > dt_max * (1 + 1e-12):
            raise ValueError(f"dt={dt:g} exceeds the CFL bound {dt_max:g}")
        if self.t_final != 0:
            # land exactly on t_final
            dt = abs(self.t_final) / math.ceil(abs(self.t_final) / dt)
        return replace(self, half_length=float(L), dt=float(dt))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.modes

    def grid(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.modes)

    def check_resolution(self):
        if self.amplitude == 0:
            return
        cells = self.epsilon / (self.amplitude * self.dx)
        if cells < RESOLUTION_CELLS:
            raise UnderResolved(
                f"eps/(|u0| dx) = {cells:.2f} < {RESOLUTION_CELLS}: increase modes "
                f"to at least {self._modes_needed()}")

    def _modes_needed(self) -> int:
        need = RESOLUTION_CELLS * self.amplitude * 2.0 * self.half_length / self.epsilon
        return 1 << max(4, math.ceil(math.log2(need)))

    def echo(self) -> dict:
        return {"epsilon": self.epsilon, "t_final": self.t_final,
                "half_length": self.half_length, "modes": self.modes, "dt": self.dt,
                "dealias": self.dealias, "scale": self.scale}


@dataclass
class SpectralState:
    t: float
    coeffs: np.ndarray  # rfft coefficients


@dataclass
class EpsSolution:
    x: np.ndarray
    times: list
    snapshots: list
    conserved: list = field(default_factory=list)
    config: EpsRunConfig | None = None

    def at(self, t: float) -> np.ndarray:
        for s, u in zip(self.times, self.snapshots):
            if abs(s - t) <= 1e-12 * max(1.0, abs(t)):
                return u
        raise KeyError(f"no snapshot at t={t}")

    def interpolate(self, t: float, xs) -> np.ndarray:
        """Trigonometric interpolant of the snapshot at ``t`` evaluated at ``xs``."""
        u = self.at(t)
        n = u.size
        coeffs = np.fft.rfft(u) / n
        # positive frequencies stand in for their conjugates; Nyquist counts once
        coeffs[1:(n + 1) // 2] *= 2.0
        length = n * (self.x[1] - self.x[0])
        k = 2.0 * math.pi * np.arange(coeffs.size) / length
        xs = np.asarray(xs, dtype=float)
        phase = np.exp(1j * np.outer(xs - self.x[0], k))
        return (phase @ coeffs).real

    def l2_drift(self) -> float:
        l2 = np.array([c["l2"] for c in self.conserved])
        if l2.size == 0 or l2[0] == 0:
            return 0.0
        return float(np.max(np.abs(l2 - l2[0])) / l2[0])

    def snapshot_csv(self, t: float) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, u in zip(self.x, self.at(t)):
            w.writerow([f"{x:.17g}", f"{u:.17g}"])
        return buf.getvalue()

    def manifest(self) -> dict:
        return {"config": self.config.echo() if self.config else None,
                "conserved": self.conserved}


class _Scheme:
    def __init__(self, cfg: EpsRunConfig):
        n = cfg.modes
        self.n = n
        self.k = 2.0 * math.pi * np.fft.rfftfreq(n, d=cfg.dx)
        kmax = self.k[-1]
        self.mask = (self.k <= cfg.dealias * kmax).astype(float)
        lin = 1j * cfg.epsilon * self.k * np.abs(self.k)
        self.E = np.exp(lin * cfg.dt / 2.0)
        self.E2 = self.E * self.E
        self.dt = cfg.dt
        self.dx = cfg.dx

    def nonlinear(self, uh):
        u = np.fft.irfft(uh, n=self.n)
        return -1j * self.k * self.mask * np.fft.rfft(u * u)

    def step(self, uh, nonlinear=True):
        if not nonlinear:
            return self.E2 * uh
        E, E2, dt = self.E, self.E2, self.dt
        # overflow is detected by the caller from the non-finite result
        with np.errstate(over="ignore", invalid="ignore"):
            a = dt * self.nonlinear(uh)
            b = dt * self.nonlinear(E * (uh + a / 2))
            c = dt * self.nonlinear(E * uh + b / 2)
            d = dt * self.nonlinear(E2 * uh + E * c)
            return E2 * uh + (E2 * a + 2 * E * (b + c) + d) / 6

    def invariants(self, uh):
        u = np.fft.irfft(uh, n=self.n)
        return {"l2": float(math.sqrt(np.sum(u * u) * self.dx)),
                "mean": float(np.sum(u) * self.dx)}


def initial_state(cfg: EpsRunConfig) -> SpectralState:
    cfg = cfg if cfg.dt is not None else cfg.resolved()
    u0 = cfg.scale * np.asarray(cfg.datum.value(cfg.grid()), dtype=float)
    uh = np.fft.rfft(u0)
    uh *= _Scheme(cfg).mask
    return SpectralState(0.0, uh)


def step(state: SpectralState, cfg: EpsRunConfig, nonlinear: bool = True) -> SpectralState:
    """One integrating-factor RK4 step of size ``cfg.dt``."""
    cfg = cfg if cfg.dt is not None else cfg.resolved()
    scheme = _Scheme(cfg)
    uh = scheme.step(state.coeffs, nonlinear)
    if not np.all(np.isfinite(uh)):
        raise BlowupError("non-finite spectrum", _diagnostics(cfg, state))
    return SpectralState(state.t + cfg.dt, uh)


def _diagnostics(cfg, state):
    u = np.fft.irfft(state.coeffs, n=cfg.modes)
    umax = float(np.max(np.abs(u))) if np.all(np.isfinite(u)) else math.inf
    return {"t": state.t, "dt": cfg.dt, "dx": cfg.dx, "max_u": umax,
            "cfl_number": 2.0 * umax * cfg.dt / cfg.dx}


def run(cfg: EpsRunConfig) -> EpsSolution:
    """Integrate to ``t_final`` and keep snapshots at 0, the requested times and the end."""
    cfg = cfg.resolved()
    cfg.check_resolution()
    scheme = _Scheme(cfg)
    state = initial_state(cfg)
    x = cfg.grid()
    direction = 1.0 if cfg.t_final >= 0 else -1.0
    n_steps = int(round(abs(cfg.t_final) / cfg.dt)) if cfg.t_final else 0
    wanted = sorted({0.0, abs(cfg.t_final), *map(abs, cfg.snapshot_times)})
    keep = {int(round(s / cfg.dt)): s for s in wanted if s <= abs(cfg.t_final) + 1e-12}
    if direction < 0:
        # backwards in time: u(-t, x) solves the same equation with x -> -x
        scheme.E, scheme.E2 = np.conj(scheme.E), np.conj(scheme.E2)
        scheme.k = -scheme.k
    uh = state.coeffs
    times, snaps, conserved = [], [], []
    for n in range(n_steps + 1):
        if n in keep:
            times.append(direction * keep[n])
            snaps.append(np.fft.irfft(uh, n=cfg.modes))
            conserved.append({"t": direction * keep[n], **scheme.invariants(uh)})
        if n == n_steps:
            break
        uh = scheme.step(uh)
        if not np.all(np.isfinite(uh)):
            raise BlowupError("non-finite spectrum",
                              _diagnostics(cfg, SpectralState(n * cfg.dt, uh)))
    return EpsSolution(x, times, snaps, conserved, cfg)


def pairing(x: np.ndarray, u: np.ndarray, phi: TestFunction) -> float:
    """``int u phi`` by the periodic trapezoidal rule."""
    return float(np.sum(u * phi.f(x)) * (x[1] - x[0]))


def weak_gap(cfg: EpsRunConfig, t: float, phi: TestFunction,
             solution: EpsSolution | None = None) -> float:
    """``|<u_eps(t) - ZD(t), phi>|`` with the limit from the characteristic fan."""
    if cfg.datum.is_zero():
        return 0.0
    if solution is None:
        solution = run(replace(cfg, t_final=t))
    u = solution.at(t)
    scale = cfg.scale
    if t == 0:
        limit = zd_integral(cfg.datum, 0.0, phi.f, phi.a, phi.b) * scale
    else:
        solver = FanSolver(cfg.datum if scale == 1.0 else _scaled(cfg.datum, scale), t)
        limit = zd_integral(solver.d, t, phi.f, phi.a, phi.b, solver=solver)
    return abs(pairing(solution.x, u, phi) - limit)


def _scaled(d: InitialDatum, factor: float):
    from .datum import sampled_from_function

    lo, hi = d.support()
    return sampled_from_function(lambda y: factor * d.value(y),
                                 lambda y: factor * d.deriv(y), lo, hi, 4001)
