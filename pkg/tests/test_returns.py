import numpy as np
import pytest

from intervaldyn.errors import HypothesisFailed
from intervaldyn.returns import (
    accelerated_induced_map,
    check_nice,
    dichotomy_probe,
    first_return_map,
)
from intervaldyn.zoo import make_logistic, make_lorenz

ACC_MAP = dict(c=0.5, rho_l=3, rho_r=1.5, u=0.9, v=0.05)
ACC_A, ACC_B = 0.2690656569722544, 0.5167570988380336


def test_nice_intervals(logistic4):
    assert check_nice(logistic4, (0.25, 0.75), horizon=100).is_nice_up_to_horizon
    rep = check_nice(logistic4, (0.2, 0.4), horizon=5)
    assert not rep.is_nice_up_to_horizon
    x, step, y = rep.violation
    assert (x, step) == (0.2, 3)
    assert y == pytest.approx(0.28901376, abs=1e-12)
    whole = check_nice(logistic4, (0.0, 1.0), horizon=10)
    assert whole.is_nice_up_to_horizon and whole.trivial


def first_return_brute(f, x, lo, hi, tmax):
    y = x
    for t in range(1, tmax + 1):
        y = f.eval(y)
        if lo < y < hi:
            return t, y
    return None, None


def test_first_return_against_brute_force(logistic4):
    lo, hi = 0.2, 0.4
    frm = first_return_map(logistic4, (lo, hi), max_time=10)
    rng = np.random.default_rng(0)
    checked = 0
    for br in frm.branches:
        if br.sub_hi - br.sub_lo < 1e-7:
            continue
        x = br.sub_lo + (br.sub_hi - br.sub_lo) * rng.uniform(0.2, 0.8)
        t, y = first_return_brute(logistic4, x, lo, hi, 10)
        assert t == br.return_time
        assert br.image_lo - 1e-9 <= y <= br.image_hi + 1e-9
        checked += 1
    assert checked > 50


def test_branches_are_disjoint_and_ordered(logistic4):
    frm = first_return_map(logistic4, (0.2, 0.4), max_time=12)
    subs = [(b.sub_lo, b.sub_hi) for b in frm.branches]
    assert subs == sorted(subs)
    assert all(a[1] <= b[0] for a, b in zip(subs, subs[1:]))
    assert 0.0 < frm.coverage_measure <= 1.0


def test_coverage_grows_with_max_time(logistic4):
    cov = [first_return_map(logistic4, (0.2, 0.4), max_time=t).coverage_measure for t in (5, 10, 15)]
    assert cov[0] < cov[1] < cov[2]


def test_attracting_fixed_point_single_branch():
    f = make_logistic(2.5)
    frm = first_return_map(f, (0.55, 0.65), max_time=5)
    assert [b.return_time for b in frm.branches] == [1]


def test_dichotomy_verdicts():
    assert dichotomy_probe(make_logistic(4.0), (0.2, 0.4), samples=200, seed=0).verdict == "AllCover"
    assert dichotomy_probe(make_logistic(2.5), (0.1, 0.2), samples=200, seed=0).verdict == "AllAvoid"


def test_dichotomy_precondition(logistic32):
    # f(c) = 0.8 lies in the interval
    res = dichotomy_probe(logistic32, (0.75, 0.85), samples=10, seed=0)
    assert res.verdict == "PreconditionFailed"
    assert res.violation[0] in ("0.5-", "0.5+")


def test_accelerated_map_branch_images():
    f = make_lorenz(**ACC_MAP)
    frm = accelerated_induced_map(f, (ACC_A, ACC_B), depth_cap=3, horizon=100)
    assert len(frm.branches) > 37
    for br in frm.branches:
        t = br.return_time
        mid = 0.5 * (br.sub_lo + br.sub_hi)
        y = mid
        for _ in range(t):
            y = f.eval(y)
        assert ACC_A <= y <= ACC_B
        if br.sub_hi - br.sub_lo >= 1e-9:
            assert br.image_lo >= ACC_A - 1e-6 and br.image_hi <= ACC_B + 1e-6


def test_accelerated_depth_zero_is_first_return_off_boundary():
    f = make_lorenz(**ACC_MAP)
    acc = accelerated_induced_map(f, (ACC_A, ACC_B), depth_cap=0, horizon=100)
    deeper = accelerated_induced_map(f, (ACC_A, ACC_B), depth_cap=2, horizon=100)
    assert len(deeper.branches) > len(acc.branches)
    assert deeper.coverage_measure >= acc.coverage_measure


def test_accelerated_rejects_non_periodic_endpoint():
    f = make_lorenz(**ACC_MAP)
    with pytest.raises(HypothesisFailed):
        accelerated_induced_map(f, (0.27, ACC_B), horizon=100)
