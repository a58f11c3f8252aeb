import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zdlimit.datum import (
    Mollified,
    PiecewiseLinear,
    Rational,
    SampledC1,
    Step,
    evaluate,
    evaluate_deriv,
    from_dict,
    l2_distance_sq,
    mollify,
    norms,
    sampled_from_function,
    smootherstep,
    split_poles,
    to_dict,
    zero_datum,
)
from zdlimit.errors import NotC1Error

finite = st.floats(-20.0, 20.0, allow_nan=False)


def test_step_value_inside():
    assert evaluate(Step(-1.0, 1.0, 1.0), 0.0) == 1.0


def test_step_is_open_interval():
    s = Step(-1.0, 1.0, 1.0)
    assert s.value(-1.0) == 0.0 and s.value(1.0) == 0.0


@given(finite)
def test_zero_datum_vanishes(y):
    z = zero_datum()
    assert evaluate(z, y) == 0.0
    assert evaluate_deriv(z, y) == 0.0


def test_rational_partial_fractions(lorentzian):
    assert evaluate(lorentzian, 0.0) == pytest.approx(1.0, abs=1e-15)
    ys = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(lorentzian.value(ys), 1.0 / (1.0 + ys ** 2), rtol=1e-14)


def test_rational_derivative_example(lorentzian):
    assert evaluate_deriv(lorentzian, 1.0) == pytest.approx(-0.5, abs=1e-15)


def test_mollified_step_flat_plateau():
    assert evaluate_deriv(mollify(Step(), 1e-2), 0.0) == 0.0


def test_from_polynomials_recovers_pole_and_residue():
    d = Rational.from_polynomials([1.0], [1.0, 0.0, 1.0])
    np.testing.assert_allclose(d.poles, [1j], atol=1e-12)
    np.testing.assert_allclose(d.residues, [-0.5j], atol=1e-12)


def test_polynomial_form_round_trip():
    d = Rational(np.array([1j, 0.5 + 2j]), np.array([0.3 - 0.2j, -0.1 + 0.4j]))
    ys = np.linspace(-4, 4, 17)
    ratio = np.polyval(d.numerator(), ys) / np.polyval(d.denominator(), ys)
    np.testing.assert_allclose(ratio.real, d.value(ys), atol=1e-13)
    assert d.denominator()[0] == 1.0


def test_split_poles_approximates_double_pole():
    # 1/(1+y^2)^2 has a double pole at i
    d = Rational.from_polynomials([1.0], [1.0, 0.0, 2.0, 0.0, 1.0])
    assert d.N == 2
    ys = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(d.value(ys), 1.0 / (1.0 + ys ** 2) ** 2, atol=1e-5)
    moved = split_poles([1j, 1j, 1j])
    assert len(set(np.round(moved, 12))) == 3


def test_rational_invariants_enforced():
    with pytest.raises(ValueError):
        Rational(np.array([-1j]), np.array([1.0]))
    with pytest.raises(ValueError):
        Rational(np.array([1j, 1j]), np.array([1.0, 1.0]))


def test_sampled_validation():
    with pytest.raises(ValueError):
        SampledC1([0.0, 1.0], [0.0, np.nan], [0.0, 0.0])
    with pytest.raises(ValueError):
        SampledC1([1.0, 0.0], [0.0, 0.0], [0.0, 0.0])


def test_sampled_zero_beyond_decay_bound():
    d = SampledC1(np.linspace(-4, 4, 81), np.ones(81), np.zeros(81), decay_bound=2.0)
    assert d.value(2.5) == 0.0 and d.value(1.5) == 1.0
    assert d.support() == (-2.0, 2.0)


def test_sampled_bounds_include_interior_extrema(gaussian):
    lo, hi = gaussian.bounds()
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert hi == pytest.approx(1.0, abs=1e-12)
    assert gaussian.deriv_bound() == pytest.approx(math.sqrt(2.0 / math.e), rel=1e-6)


def test_nonfinite_input_rejected(lorentzian):
    with pytest.raises(ValueError):
        evaluate(lorentzian, np.inf)


def test_step_has_no_derivative():
    with pytest.raises(NotC1Error):
        evaluate_deriv(Step(), 0.3)


def test_norms_step():
    n = norms(Step(-1.0, 1.0, 1.0))
    assert n.l2 == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert n.linf == 1.0


def test_norms_zero():
    assert tuple(norms(zero_datum())) == (0.0, 0.0)


def test_norms_lorentzian(lorentzian):
    oracle = float(mpmath.sqrt(mpmath.quad(lambda y: 1 / (1 + y * y) ** 2, [-mpmath.inf, mpmath.inf])))
    n = norms(lorentzian)
    assert n.l2 == pytest.approx(oracle, abs=1e-9)
    assert n.l2 == pytest.approx(1.25331, abs=1e-5)
    assert n.linf == pytest.approx(1.0, abs=1e-12)


def test_mollify_ramp_monotone():
    m = mollify(Step(-1.0, 1.0, 1.0), 0.1)
    assert isinstance(m, Mollified) and m.kind == "ramp"
    assert 0.0 < m.value(-1.05) < 1.0
    ramp = m.value(np.linspace(-1.1, -1.0, 101)[1:-1])
    assert np.all(np.diff(ramp) > 0)
    assert m.value(-1.1 - 1e-9) == 0.0 and m.value(0.0) == 1.0
    assert m.linf() == 1.0


def test_mollify_zero_and_bad_width():
    z = zero_datum()
    assert mollify(z, 0.3).is_zero()
    with pytest.raises(ValueError):
        mollify(Step(), 0.0)


def test_mollified_step_distance_matches_ramp_mass():
    delta = 1e-3
    # both ramps contribute delta * int_0^1 S(s)^2 ds
    ramp = float(mpmath.quad(lambda s: float(smootherstep(float(s))) ** 2, [0, 1]))
    dist = math.sqrt(l2_distance_sq(mollify(Step(), delta), Step()))
    assert dist == pytest.approx(math.sqrt(2 * delta * ramp), rel=1e-8)
    assert dist <= 0.05


def test_mollification_distance_monotone():
    dists = [l2_distance_sq(mollify(Step(), 2.0 ** -k), Step()) for k in range(1, 9)]
    assert all(b <= a for a, b in zip(dists, dists[1:]))


def test_mollified_piecewise_linear_exact_matches_quadrature():
    pl = PiecewiseLinear(np.array([-1.0, 0.5, 2.0]), np.array([0.0, 1.0, 0.3]))
    m = mollify(pl, 0.2)
    assert m.kind == "exact"
    from zdlimit.datum import bump_kernel
    for y in (-1.1, -0.5, 0.45, 1.9, 2.15):
        kinks = [(y - b) / 0.2 for b in (2.0, 0.5, -1.0)]
        pts = [-1.0] + sorted(k for k in kinks if -1 < k < 1) + [1.0]
        oracle = mpmath.quad(lambda s: bump_kernel(float(s)) * pl.value(y - 0.2 * float(s)),
                             pts)
        assert m.value(y) == pytest.approx(float(oracle), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.2, 3), st.floats(-2, 2),
                          st.floats(-2, 2)), min_size=1, max_size=4),
       st.lists(finite, min_size=1, max_size=20))
def test_rational_realness(params, ys):
    poles = np.array([complex(a, b) for a, b, _, _ in params])
    if len(set(np.round(poles, 9))) < poles.size:
        return
    d = Rational(poles, np.array([complex(c, e) for _, _, c, e in params]))
    vals = d.complex_value(np.asarray(ys))
    assert np.max(np.abs(vals.imag)) <= 1e-12 * (1 + np.max(np.abs(vals)))
    np.testing.assert_allclose(vals.real, d.value(np.asarray(ys)), atol=1e-12)


def _fd_check(d, ys, rel=1e-6):
    h = 1e-6
    fd = (d.value(ys + h) - d.value(ys - h)) / (2 * h)
    ex = d.deriv(ys)
    scale = 1.0 + np.abs(ex)
    assert np.max(np.abs(fd - ex) / scale) <= rel


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3.5, 3.5), min_size=1, max_size=10))
def test_derivative_consistency(ys):
    ys = np.asarray(ys)
    data = [
        Rational(np.array([1j, 1 + 0.5j]), np.array([-0.5j, 0.2 + 0.1j])),
        sampled_from_function(np.sin, np.cos, -4, 4, 401),
        mollify(PiecewiseLinear(np.array([-1.0, 0.0, 2.0]), np.array([0.0, 1.0, 0.0])), 0.3),
        mollify(sampled_from_function(np.sin, np.cos, -4, 4, 401), 0.2),
    ]
    for d in data:
        _fd_check(d, ys)
    # the ramp profile away from its junctions
    m = mollify(Step(), 0.5)
    _fd_check(m, ys[np.min(np.abs(ys[:, None] - np.array([-1.5, -1, 1, 1.5])), axis=1) > 1e-3])


@pytest.mark.parametrize("d", [
    Step(-2.0, 1.0, 0.5),
    Rational(np.array([1j]), np.array([-0.5j])),
    PiecewiseLinear(np.array([0.0, 1.0]), np.array([1.0, 0.0])),
    mollify(Step(), 0.1),
    sampled_from_function(np.sin, np.cos, -1, 1, 11),
    zero_datum(),
])
def test_json_round_trip(d):
    back = from_dict(to_dict(d))
    ys = np.linspace(-3, 3, 25)
    np.testing.assert_array_equal(back.value(ys), d.value(ys))


def test_json_descriptors_documented_forms():
    s = from_dict({"type": "step", "left": -1, "right": 1, "height": 1})
    r = from_dict({"type": "rational", "poles": [[0, 1]], "residues": [[0, -0.5]]})
    g = from_dict({"type": "sampled", "nodes": [0, 1, 2], "values": [0, 1, 0],
                   "derivs": [0, 0, 0]})
    assert s.value(0.0) == 1.0
    assert r.value(0.0) == pytest.approx(1.0)
    assert g.value(1.0) == 1.0
    with pytest.raises(ValueError):
        from_dict({"type": "nope"})
