import math

import numpy as np
import pytest
from scipy import interpolate

from zdlimit.datum import zero_datum
from zdlimit.errors import SolveFailure
from zdlimit.hardy import (
    SIGMA_MIN,
    HalfLineSpectrum,
    ResolventProblem,
    boundary_trace,
    fourier_plus,
    g_resolvent,
    gregory_weights,
    half_line_grid,
    pi_u,
    poisson_extension,
    resolvent_residual,
    solve_resolvent,
    toeplitz_apply,
)
from zdlimit.rational import zd_rational_grid


def hardy_part_oracle(t, z, height=1.0):
    """Hardy part of the limit for height/(1+y^2) at complex z, from the cubic roots.

    The roots of (y - z)(1 + y^2) + 2t height lying in the upper half-plane
    give lam = (sum of them - i - z)/(2t) and the Hardy part is -lam.
    """
    roots = np.roots([1.0, -z, 1.0, 2 * t * height - z])
    up = roots[roots.imag > 0]
    assert up.size == 2
    return -(np.sum(up) - 1j - z) / (2 * t)


def smooth_spectra(rng, xi, n):
    out = []
    for _ in range(n):
        a = rng.uniform(0.3, 3.0, 3)
        b = rng.uniform(0.0, 4.0, 3)
        c = rng.normal(size=3) + 1j * rng.normal(size=3)
        vals = np.sum(c[:, None] * np.exp(-a[:, None] * xi) * np.cos(b[:, None] * xi), axis=0)
        out.append(HalfLineSpectrum(xi, vals))
    return out


# {{{ quadrature and transforms


@pytest.mark.parametrize("n", [2, 3, 4, 5, 8, 13])
def test_gregory_weights_exact_for_cubics(n):
    x = np.linspace(0.0, 2.0, n + 1)
    w = gregory_weights(n, 2.0 / n)
    for k in range(4):
        assert np.sum(w * x ** k) == pytest.approx(2.0 ** (k + 1) / (k + 1), rel=1e-13)


def test_transform_of_zero_datum():
    spec = fourier_plus(zero_datum(), half_line_grid(10.0, 64))
    assert np.all(spec.values == 0)


def test_lorentzian_transform(lorentzian):
    xi = half_line_grid(30.0, 301)
    spec = fourier_plus(lorentzian, xi)
    np.testing.assert_allclose(spec.values, math.pi * np.exp(-xi), atol=1e-12)


def test_gaussian_transform(gaussian):
    xi = half_line_grid(12.0, 121)
    spec = fourier_plus(gaussian, xi)
    np.testing.assert_allclose(spec.values, math.sqrt(math.pi) * np.exp(-xi ** 2 / 4),
                               atol=1e-8)


def test_plancherel(gaussian, lorentzian):
    # half of the L2 mass of a real function sits on positive frequencies
    spec = fourier_plus(gaussian, half_line_grid(14.0, 1401))
    assert spec.l2_norm() ** 2 == pytest.approx(math.sqrt(math.pi / 2) / 2, abs=1e-6)
    spec = fourier_plus(lorentzian, half_line_grid(30.0, 3001))
    assert spec.l2_norm() ** 2 == pytest.approx(math.pi / 4, abs=1e-6)


def test_half_line_grid_validation():
    with pytest.raises(ValueError):
        half_line_grid(1.0, 2)
    with pytest.raises(ValueError):
        fourier_plus(zero_datum(), [-1.0, 0.0, 1.0])


def test_spectrum_csv(lorentzian):
    text = fourier_plus(lorentzian, half_line_grid(5.0, 6)).to_csv()
    lines = text.splitlines()
    assert lines[0] == "xi,re,im"
    assert len(lines) == 7
    assert float(lines[1].split(",")[1]) == pytest.approx(math.pi)

# }}}


# {{{ operators


def test_g_resolvent_exponential():
    xi = half_line_grid(40.0, 2048)
    f = HalfLineSpectrum(xi, np.exp(-xi))
    h = g_resolvent(f, 1j)
    # i int_xi^Xi e^{-eta} e^{-(eta - xi)} d eta, truncation included
    exact = 0.5j * np.exp(-xi) * (1 - np.exp(-2 * (xi[-1] - xi)))
    # fourth-order quadrature at pitch 0.02
    np.testing.assert_allclose(h.values, exact, atol=1e-7)
    assert np.max(np.abs(h.values[xi < 20] - 0.5j * np.exp(-xi[xi < 20]))) <= 1e-7


def test_g_resolvent_zero_and_bound(rng):
    xi = half_line_grid(30.0, 1024)
    zero = g_resolvent(HalfLineSpectrum(xi, np.zeros(xi.size, dtype=complex)), 0.5j)
    assert np.all(zero.values == 0)
    for f in smooth_spectra(rng, xi, 50):
        assert g_resolvent(f, 0.5j).l2_norm() <= 2 * f.l2_norm() * (1 + 1e-6)


def test_g_resolvent_rejects_real_axis():
    xi = half_line_grid(10.0, 32)
    with pytest.raises(ValueError):
        g_resolvent(HalfLineSpectrum(xi, np.ones(32)), 1.0 + 0.1 * SIGMA_MIN * 1j)


def test_toeplitz_zero_symbol(rng):
    xi = half_line_grid(20.0, 256)
    f = smooth_spectra(rng, xi, 1)[0]
    assert np.all(toeplitz_apply(zero_datum(), f).values == 0)


def test_toeplitz_norm_bound(lorentzian, rng):
    xi = half_line_grid(30.0, 1024)
    for f in smooth_spectra(rng, xi, 50):
        assert toeplitz_apply(lorentzian, f).l2_norm() <= f.l2_norm() * (1 + 1e-3)


def test_toeplitz_rational_symbol(lorentzian):
    # f = 1/(y + i); Pi(f/(1 + y^2)) = (1/4)/(y + i) + (i/2)/(y + i)^2
    xi = half_line_grid(30.0, 1024)
    f = HalfLineSpectrum(xi, -2j * math.pi * np.exp(-xi))
    expected = -1j * math.pi * (0.5 + xi) * np.exp(-xi)
    got = toeplitz_apply(lorentzian, f).values
    assert np.max(np.abs(got - expected)) <= 1e-6

# }}}


# {{{ solves


def test_time_zero_value(lorentzian):
    assert pi_u(lorentzian, 0.0, 1j) == pytest.approx(0.25, abs=1e-8)


def test_zero_datum():
    assert pi_u(zero_datum(), 1.0, 0.3 + 1j) == 0
    field = boundary_trace(zero_datum(), 1.0, np.linspace(-1, 1, 5), 0.1)
    assert np.all(field.values == 0)


def test_neumann_matches_dense(lorentzian):
    t = 0.5
    x = 0.3 + 4 * abs(t) * 1.0 * 1j
    rp = ResolventProblem.build(lorentzian, t, x, modes=1024)
    dense = solve_resolvent(rp, "dense")
    neumann = solve_resolvent(rp, "neumann")
    rel = np.linalg.norm(dense.values - neumann.values) / np.linalg.norm(dense.values)
    assert rel <= 1e-6
    assert resolvent_residual(rp, dense) <= 1e-8
    assert resolvent_residual(rp, neumann) <= 1e-8


def test_neumann_diverges_near_axis(lorentzian3):
    rp = ResolventProblem.build(lorentzian3, 2.0, 3.0 + 0.5j, modes=256)
    with pytest.raises(SolveFailure):
        solve_resolvent(rp, "neumann", maxiter=300)
    with pytest.raises(ValueError):
        solve_resolvent(rp, "cholesky")


@pytest.mark.parametrize("t,z", [(0.1, 0.5 + 0.3j), (2.0, 3.0 + 0.5j), (-1.0, -0.4 + 0.6j)])
def test_pi_u_matches_root_oracle(lorentzian, t, z):
    assert abs(pi_u(lorentzian, t, z) - hardy_part_oracle(t, z)) <= 1e-4


def test_cauchy_riemann(lorentzian):
    t, z, h = 0.5, 0.7 + 0.6j, 1e-3
    xi_max = 60.0
    f = {dz: pi_u(lorentzian, t, z + dz, modes=1024, xi_max=xi_max)
         for dz in (h, -h, 1j * h, -1j * h)}
    dbar = 0.5 * ((f[h] - f[-h]) / (2 * h) + 1j * (f[1j * h] - f[-1j * h]) / (2 * h))
    assert abs(dbar) <= 1e-4


def test_minimum_height_enforced(lorentzian):
    with pytest.raises(ValueError):
        pi_u(lorentzian, 1.0, 0.5 + 1e-4j)
    with pytest.raises(ValueError):
        boundary_trace(lorentzian, 1.0, [0.0], 1e-4)
    with pytest.raises(ValueError):
        ResolventProblem.build(lorentzian, 1.0, 0.0 + 0j)

# }}}


# {{{ boundary traces


def test_trace_at_time_zero_is_poisson_extension(lorentzian):
    xs = np.linspace(-3, 3, 25)
    sigma = 0.2
    field = boundary_trace(lorentzian, 0.0, xs, sigma, modes=512)
    exact = (1 + sigma) / (xs ** 2 + (1 + sigma) ** 2)
    np.testing.assert_allclose(field.values, exact, atol=1e-5)


def test_trace_of_gaussian_at_time_zero(gaussian):
    xs = np.linspace(-2, 2, 9)
    sigma = 0.3
    field = boundary_trace(gaussian, 0.0, xs, sigma, modes=512)
    oracle = poisson_extension(lambda y: math.exp(-y * y), xs, sigma, -10.0, 10.0)
    np.testing.assert_allclose(field.values, oracle, atol=1e-5)


def test_sweep_matches_dense(lorentzian):
    # the two discretizations of (G - x)^{-1} differ at fourth order in the pitch
    xs = np.array([-1.0, 0.5, 2.0])
    gaps = []
    for modes in (512, 1024):
        sweep = boundary_trace(lorentzian, 1.0, xs, 0.3, modes=modes)
        dense = boundary_trace(lorentzian, 1.0, xs, 0.3, modes=modes, method="dense")
        gaps.append(np.max(np.abs(sweep.values - dense.values)))
    assert gaps[1] <= 1e-4
    assert gaps[1] < gaps[0] / 8


def test_trace_matches_smoothed_limit(lorentzian):
    t, sigma = 0.1, 0.05
    xs = np.linspace(-3, 3, 31)
    field = boundary_trace(lorentzian, t, xs, sigma)
    # Poisson smoothing of the exact limit, sampled densely and splined
    ys = np.unique(np.concatenate([np.linspace(-200, -10, 381), np.linspace(-10, 10, 4001),
                                   np.linspace(10, 200, 381)]))
    spline = interpolate.CubicSpline(ys, zd_rational_grid(lorentzian, t, ys).values)
    oracle = poisson_extension(spline, xs, sigma)
    assert np.max(np.abs(field.values - oracle)) <= 3e-2
    assert field.backend == "hardy" and field.meta["sigma"] == sigma


def test_sigma_refinement(lorentzian):
    xs = np.linspace(-3, 3, 41)
    traces = [boundary_trace(lorentzian, 0.5, xs, s, modes=1024).values
              for s in (0.4, 0.2, 0.1)]
    gaps = [np.max(np.abs(a - b)) for a, b in zip(traces, traces[1:])]
    assert gaps[1] < gaps[0]

# }}}
