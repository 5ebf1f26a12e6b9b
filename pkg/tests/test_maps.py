import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intervaldyn.errors import ExceptionalPoint, OutOfDomain, SpecFormatError
from intervaldyn.maps import (
    DECREASING,
    INCREASING,
    Affine,
    BranchSpec,
    PiecewiseMap,
    Polynomial,
    PowerLaw,
    Scaled,
    validate,
)
from intervaldyn.zoo import make_logistic, make_lorenz


def test_logistic_values(logistic4):
    assert logistic4.eval(0.25) == 0.75
    assert logistic4.eval(0.0) == 0.0
    assert logistic4.lateral_value(0.5, -1) == 1.0
    assert logistic4.lateral_value(0.5, +1) == 1.0


def test_eval_at_exceptional_point_raises(logistic4):
    with pytest.raises(ExceptionalPoint):
        logistic4.eval(0.5)


def test_eval_outside_domain(logistic4):
    with pytest.raises(OutOfDomain):
        logistic4.eval(1.5)


def test_schwarzian_at_zero_is_minus_six(logistic4):
    assert logistic4.schwarzian(0.0) == pytest.approx(-6.0, abs=1e-12)


def test_schwarzian_closed_form(logistic4):
    # f' = 4 - 8x, f'' = -8, f''' = 0  ->  Sf = -1.5 * (8 / (4 - 8x))**2
    for x in (0.1, 0.3, 0.7, 0.95):
        expected = -1.5 * (8.0 / (4.0 - 8.0 * x)) ** 2
        assert logistic4.schwarzian(x) == pytest.approx(expected, rel=1e-12)


def test_validate_zoo_maps_clean(logistic4, lorenz):
    for f in (logistic4, lorenz, make_logistic(3.2)):
        rep = validate(f, 2000)
        assert rep.clean, rep.to_dict()


def test_validate_reports_overlap(logistic4):
    d = logistic4.to_dict()
    d["branches"][0]["hi"] = 0.6
    rep = validate(PiecewiseMap.from_dict(d), 1000)
    assert not rep.tiling_ok
    assert any("overlap" in msg for msg in rep.tiling)


def test_validate_flags_nonnegative_schwarzian(rot025):
    rep = validate(rot025, 500)
    assert rep.structure_ok
    assert not rep.schwarzian_negative


def test_round_trip_is_canonical(tmp_path, logistic4, lorenz):
    for f in (logistic4, lorenz):
        p = tmp_path / "m.json"
        f.save(p)
        text = p.read_text()
        g = PiecewiseMap.load(p)
        g.save(p)
        assert p.read_text() == text
        assert g.eval(0.3) == f.eval(0.3)


def test_malformed_spec(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SpecFormatError):
        PiecewiseMap.load(p)
    p.write_text(json.dumps({"branches": []}))
    with pytest.raises(SpecFormatError):
        PiecewiseMap.load(p)


def test_scaled_form_matches_definition():
    base = Polynomial((0.0, 4.0, -4.0))
    s = Scaled(base, 0.5, 0.2)
    for x in (0.1, 0.4):
        assert s.value(x) == pytest.approx(0.2 + 0.5 * (base.value(x) - 0.2))
        assert s.deriv(x, 1) == pytest.approx(0.5 * base.deriv(x, 1))


def test_powerlaw_derivatives_against_finite_differences():
    f = make_lorenz(0.5, 2.5, 1.7, 0.8, 0.15)
    for x in (0.2, 0.45, 0.6, 0.9):
        h = 1e-6
        fd = (f.eval(x + h) - f.eval(x - h)) / (2 * h)
        assert f.derivative(x) == pytest.approx(fd, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(lam=st.floats(0.5, 4.0), x=st.floats(0.0, 1.0))
def test_logistic_stays_in_unit_interval(lam, x):
    f = make_logistic(lam)
    if x == 0.5:
        return
    y = f.eval(x)
    assert 0.0 <= y <= 1.0


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.05, 0.95))
def test_affine_pair_round_trip(a):
    f = PiecewiseMap(
        (BranchSpec(0.0, a, Affine(1.0 / a, 0.0), INCREASING),
         BranchSpec(a, 1.0, Affine(-1.0 / (1.0 - a), 1.0 / (1.0 - a)), DECREASING)),
        (a,), name="tent",
    )
    g = PiecewiseMap.loads(f.dumps())
    assert g.dumps() == f.dumps()
    assert g.table().lo[1] == a


def test_powerlaw_rejects_bad_parameters():
    with pytest.raises(ValueError):
        PowerLaw(v=0.5, k=-1.0, rho=0.0, pivot=0.5, side="left")
    with pytest.raises(ValueError):
        PowerLaw(v=0.5, k=-1.0, rho=2.0, pivot=0.5, side="up")


def test_lorenz_sup_derivative_finite(lorenz):
    assert math.isfinite(lorenz.sup_abs_derivative())
    assert np.isfinite(lorenz.eval(0.25))
