import numpy as np
import pytest

from intervaldyn import kernels
from intervaldyn.errors import BadParam, HypothesisFailed
from intervaldyn.maps import PiecewiseMap, validate
from intervaldyn.surgery import flatten_unimodal, lorenz_rescale, pit_surgery, provenance_chain
from intervaldyn.zoo import make_logistic, make_lorenz


def avoiding_points(f, interval, count, steps=2000, seed=0):
    a, b = interval
    xs = np.random.default_rng(seed).random(20 * count)
    traj, st = kernels.trajectories(f.table(), xs, steps)
    ok = (st == kernels.OK) & ~np.any((traj >= a) & (traj <= b), axis=1)
    return xs[ok][:count]


def test_pit_sigma_full_logistic(logistic4):
    rec = pit_surgery(logistic4, (0.3, 0.5), 0.4)
    assert rec.scale_factors == [0.125]
    g = rec.result
    assert validate(g, 2000).structure_ok
    # f((0.3, 0.5)) = (0.84, 1) lands in (0.455, 0.475)
    assert rec.flags["maps_into_interval"] is True
    assert set(g.exceptional_set) == {0.3, 0.5}


def test_pit_rejects_q_outside(logistic4):
    with pytest.raises(BadParam):
        pit_surgery(logistic4, (0.3, 0.5), 0.6)


def test_flatten_closed_form(logistic32):
    lam = 3.2
    p = (lam + 1 + np.sqrt((lam - 3) * (lam + 1))) / (2 * lam)
    rec = flatten_unimodal(logistic32, p)
    fp = lam * p * (1 - p)
    assert rec.scale_factors[0] == pytest.approx((1 - fp) / (lam / 4 - fp), rel=1e-12)
    g = rec.result
    assert g.lateral_value(0.5, -1) == pytest.approx(1.0, abs=1e-12)
    ja, jb = rec.modified_interval
    assert logistic32.eval(ja) == pytest.approx(p, abs=1e-9)
    assert logistic32.eval(jb) == pytest.approx(p, abs=1e-9)


def test_flatten_requires_periodic_point(logistic32):
    with pytest.raises(HypothesisFailed):
        flatten_unimodal(logistic32, 0.3)


def test_lorenz_rescale_anchors(lorenz):
    rec = lorenz_rescale(lorenz, 0.2, 0.8)
    g = rec.result
    assert g.lateral_value(0.5, -1) == pytest.approx(1.0, abs=1e-12)
    assert g.lateral_value(0.5, +1) == pytest.approx(0.0, abs=1e-12)
    assert g.lateral_value(0.2, +1) == pytest.approx(lorenz.eval(0.2), abs=1e-12)
    assert g.lateral_value(0.8, -1) == pytest.approx(lorenz.eval(0.8), abs=1e-12)
    assert validate(g, 2000).structure_ok


def test_lorenz_rescale_needs_lorenz_map(logistic4):
    with pytest.raises(HypothesisFailed):
        lorenz_rescale(logistic4, 0.2, 0.8)


def test_chained_provenance_round_trip(lorenz):
    g = lorenz_rescale(lorenz, 0.2, 0.8).result
    h = pit_surgery(g, (0.3, 0.45), 0.4).result
    assert provenance_chain(h) == ["lorenz_rescale", "pit"]
    again = PiecewiseMap.loads(h.dumps())
    assert again.dumps() == h.dumps()


@pytest.mark.parametrize("make", [
    lambda: (make_logistic(3.2), pit_surgery(make_logistic(3.2), (0.3, 0.45), 0.4)),
    lambda: (make_logistic(3.2), flatten_unimodal(make_logistic(3.2), 0.7994554904673701)),
    # attracting 2-cycle {0.188.., 0.550..}; most orbits avoid (0.3, 0.54)
    lambda: (make_lorenz(0.5, 2, 2, 0.9, 0.18),
             lorenz_rescale(make_lorenz(0.5, 2, 2, 0.9, 0.18), 0.3, 0.54)),
])
def test_locality_bitwise(backend, make):
    f, rec = make()
    pts = avoiding_points(f, rec.modified_interval, 30)
    assert len(pts) == 30
    tf, _ = kernels.trajectories(f.table(), pts, 2000)
    tg, _ = kernels.trajectories(rec.result.table(), pts, 2000)
    assert np.array_equal(tf, tg)
