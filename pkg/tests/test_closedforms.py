from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zdlimit.characteristics import zd_grid
from zdlimit.closedforms import (
    GOLDEN_TIMES,
    golden_csv,
    golden_grid,
    load_golden,
    semigroup_gap,
    step_profile,
    tent,
    zd_piecewise_linear,
    zd_step,
    zd_unit_step,
)
from zdlimit.datum import PiecewiseLinear, Step, mollify
from zdlimit.errors import CausticHit

F = Fraction


# {{{ step profile


@pytest.mark.parametrize("t,x,expected", [
    (0.5, 0.5, 1.0),
    (2.0, 1.5, 0.5),
    (2.0, 4.0, 0.25),
    (-0.5, -0.5, 1.0),
    (0.0, 0.0, 1.0),
    (0.0, 1.0, 0.0),
])
def test_step_examples(t, x, expected):
    assert zd_step(t, x) == expected


def test_step_exact_with_fractions():
    assert zd_step(F(2), F(3, 2)) == F(1, 2)
    assert zd_step(F(1, 2), F(-1, 2)) == F(1, 2)


def test_general_interval_reduces_to_unit():
    # height 2 on ]1, 5[: centre 3, half-length 2
    for t, x in [(0.3, 2.0), (1.0, 6.0), (-0.7, 1.5)]:
        assert zd_step(t, x, 1.0, 5.0, 2.0) == pytest.approx(
            2 * zd_unit_step(t * 2 / 2, (x - 3) / 2))
    assert zd_step(1.0, 0.0, height=0) == 0
    with pytest.raises(ValueError):
        zd_step(1.0, 0.0, 1.0, 1.0)


@given(t=st.floats(0.01, 20), x=st.floats(-30, 30))
def test_step_symmetry_and_range(t, x):
    v = zd_step(t, x)
    assert 0 <= v <= 1
    assert zd_step(-t, -x) == v


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 2.0, 5.0])
def test_step_mass(t):
    prof = step_profile(t)
    assert prof.mass() == pytest.approx(2.0, abs=1e-12)
    xs = np.arange(-32, 193) / 16.0
    vals = np.array([zd_step(t, x) for x in xs])
    assert np.trapezoid(vals, xs) == pytest.approx(2.0, abs=1e-9)


def test_profile_pieces_match_pointwise():
    for t in (0.5, 3.0):
        prof = step_profile(t)
        for lo, hi, c, m in prof.pieces:
            mid = 0.5 * (lo + hi)
            assert zd_step(t, mid) == pytest.approx(c + m * mid)
        assert prof.breakpoints[0] == -1
    with pytest.raises(ValueError):
        step_profile(0.0)


def test_agrees_with_mollified_characteristics():
    kinks = np.array([-1.0, 1.0, 3.0, 5.0, 0.0, 2.0])
    xs = np.linspace(-2.5, 6.5, 181)
    for delta in (1e-2, 1e-3):
        d = mollify(Step(-1.0, 1.0, 1.0), delta)
        for t in (0.5, 2.0):
            off = np.min(np.abs(xs[:, None] - kinks), axis=1) > 0.05
            field = zd_grid(d, t, xs[off])
            exact = np.array([zd_step(t, x) for x in xs[off]])
            assert np.max(np.abs(field.values - exact)) <= 10 * delta ** 0.5 + 1e-6

# }}}


# {{{ piecewise-linear data


def test_tent_is_limit_at_time_one():
    b, v = tent()
    for x in np.linspace(-2, 4, 49):
        pl = PiecewiseLinear(np.array(b, dtype=float), np.array(v, dtype=float))
        assert float(pl.value(x)) == pytest.approx(zd_step(1.0, x), abs=1e-15)


def test_piecewise_linear_examples():
    assert zd_piecewise_linear(tent(), F(1, 2), F(3, 2)) == F(5, 6)
    assert zd_piecewise_linear(tent(), F(1, 2), F(5, 2)) == F(1, 2)
    assert zd_piecewise_linear(tent(), 0.5, 1.5) == pytest.approx(2.5 / 3)


def test_piecewise_linear_time_zero():
    b, v = [F(-1), F(0), F(2)], [F(0), F(3), F(1)]
    assert zd_piecewise_linear((b, v), 0, F(1)) == F(2)
    assert zd_piecewise_linear((b, v), 0, F(5)) == 0
    assert zd_piecewise_linear((b, v), 0, F(2)) == F(1)


def test_piecewise_linear_fan():
    # a unit tent on [-1, 1] overturns at t = 1: f = 3y + 2 on [-1, 0],
    # 2 - y on [0, 1] and y beyond, so x = 3/2 has roots -1/6, 1/2, 3/2
    pl = ([F(-1), F(0), F(1)], [F(0), F(1), F(0)])
    assert zd_piecewise_linear(pl, F(1), F(3, 2)) == F(5, 6) - F(1, 2)
    assert zd_piecewise_linear(pl, F(1), F(5, 2)) == 0
    with pytest.raises(CausticHit):
        zd_piecewise_linear(pl, F(1), F(1))


def test_flat_piece_raises():
    with pytest.raises(CausticHit):
        zd_piecewise_linear(([0.0, 1.0], [1.0, 0.0]), 0.5, 1.0)


def test_piecewise_linear_accepts_datum():
    pl = PiecewiseLinear(np.array([-1.0, 1.0, 3.0]), np.array([0.0, 1.0, 0.0]))
    assert zd_piecewise_linear(pl, 0.5, 1.5) == pytest.approx(2.5 / 3)

# }}}


# {{{ semigroup


def test_semigroup_gap_at_half_exact():
    res = semigroup_gap(F(1, 2), F(3, 2))
    assert res.gap == F(1, 6)
    assert res.gap >= 0.1


def test_semigroup_gap_maximum():
    res = semigroup_gap(F(1, 2))
    assert res.gap == F(1, 3)
    assert res.x_witness == 2


def test_semigroup_gap_vanishes_as_s_shrinks():
    gaps = [semigroup_gap(2.0 ** -k, n=2001).gap for k in range(1, 7)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    for k, g in zip(range(1, 7), gaps):
        s = 2.0 ** -k
        assert g == pytest.approx(s / (1 + s), abs=1e-12)


def test_semigroup_gap_domain():
    for s in (0, 1, -0.5, 1.5):
        with pytest.raises(ValueError):
            semigroup_gap(s)

# }}}


# {{{ golden fixture


def test_golden_fixture_is_current():
    from importlib import resources

    shipped = resources.files("zdlimit").joinpath("data/step_golden.csv").read_text()
    assert shipped == golden_csv()


def test_golden_rows():
    rows = load_golden()
    assert len(rows) == len(GOLDEN_TIMES) * golden_grid().size
    for t, x, v in rows[::53]:
        assert zd_unit_step(t, x) == v

# }}}
