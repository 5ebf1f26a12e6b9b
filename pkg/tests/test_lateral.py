import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intervaldyn.errors import NotAGapMap, OutOfDomain
from intervaldyn.lateral import (
    LateralState,
    NotFound,
    detect_periodic_like,
    lateral_exceptional_points,
    lateral_orbit,
    lateral_step,
    omega_estimate,
    rotation_number,
)
from intervaldyn.zoo import make_logistic, make_lorenz, make_rotation


def test_parse_and_format():
    s = LateralState.parse("0.5-")
    assert s == LateralState(0.5, -1)
    assert str(s) == "0.5-"
    assert str(LateralState.parse("0.25+")) == "0.25+"


def test_invalid_lateral_states():
    with pytest.raises(OutOfDomain):
        LateralState(0.0, -1)
    with pytest.raises(OutOfDomain):
        LateralState(1.0, +1)


def test_lateral_steps_on_full_logistic(logistic4):
    assert lateral_step(logistic4, LateralState(0.5, -1)) == LateralState(1.0, -1)
    assert lateral_step(logistic4, LateralState(0.5, +1)) == LateralState(1.0, -1)
    # decreasing branch flips the side
    assert lateral_step(logistic4, LateralState(1.0, -1)) == LateralState(0.0, +1)
    assert lateral_step(logistic4, LateralState(0.0, +1)) == LateralState(0.0, +1)


def test_lateral_critical_orbits(backend, logistic4):
    for side in (-1, +1):
        orb = lateral_orbit(logistic4, LateralState(0.5, side), 5)
        assert orb.coords.tolist() == [0.5, 1.0, 0.0, 0.0, 0.0, 0.0]
        assert not orb.truncated


def test_lorenz_sides_do_not_flip(lorenz):
    assert lateral_step(lorenz, LateralState(0.5, -1)) == LateralState(0.9, -1)
    assert lateral_step(lorenz, LateralState(0.5, +1)) == LateralState(0.1, +1)


def test_exceptional_points(logistic4):
    assert lateral_exceptional_points(logistic4) == [LateralState(0.5, -1), LateralState(0.5, +1)]


def test_orbit_csv_rows(logistic4):
    rows = list(lateral_orbit(logistic4, LateralState(0.5, -1), 2).to_csv_rows())
    assert rows[0][:3] == (0, repr(0.5), "-")
    assert len(rows) == 3


def test_repelling_fixed_point(logistic4):
    rec = detect_periodic_like(logistic4, LateralState(0.0, +1))
    assert rec.period == 1
    assert rec.multiplier == pytest.approx(4.0)
    assert rec.attracting is False


def test_attracting_two_cycle(logistic32):
    lam = 3.2
    p = (lam + 1 - np.sqrt((lam - 3) * (lam + 1))) / (2 * lam)
    rec = detect_periodic_like(logistic32, LateralState(p + 1e-7, +1), tol_p=1e-6)
    assert rec.period == 2
    assert rec.multiplier == pytest.approx(-lam ** 2 + 2 * lam + 4, abs=1e-9)
    assert rec.attracting is True


def test_not_periodic(logistic4):
    x = 0.3
    for _ in range(8):
        x = logistic4.eval(x)
        assert abs(x - 0.3) > 1e-3
    rec = detect_periodic_like(logistic4, LateralState(0.3, +1), max_period=8)
    assert isinstance(rec, NotFound)
    assert not rec


def test_omega_fixed_point():
    f = make_logistic(2.5)
    cov = omega_estimate(f, 0.3, 1000, 5000, 1e-3)
    assert cov.cells.tolist() == [600]
    assert cov.periodic


def test_omega_two_cycle(logistic32):
    cov = omega_estimate(logistic32, 0.3, 10_000, 10_000, 1e-3)
    assert cov.period == 2
    assert len(cov.cells) == 2


def test_rotation_rigid():
    assert rotation_number(make_rotation(0.25), 0.75, 10_000) == 0.25


def test_rotation_needs_gap_map(logistic4):
    with pytest.raises(NotAGapMap):
        rotation_number(logistic4, 0.5, 100)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.001, 0.999), side=st.sampled_from([-1, 1]))
def test_lateral_coords_follow_real_orbit_off_exceptional_set(x, side):
    f = make_lorenz(0.5, 2, 2, 0.9, 0.1)
    if x == 0.5:
        return
    orb = lateral_orbit(f, LateralState(x, side), 20)
    y = x
    for k in range(1, orb.length):
        if y == 0.5:
            break
        y = f.eval(y)
        assert orb.coords[k] == y


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.01, 0.99))
def test_side_parity_matches_orientation(x):
    f = make_logistic(3.9)
    if x == 0.5:
        return
    orb = lateral_orbit(f, LateralState(x, +1), 30)
    for k in range(orb.length - 1):
        b = f.branches[orb.branch_index[k]]
        assert orb.sides[k + 1] == orb.sides[k] * b.sign
