"""Nice intervals, first-return maps and induced maps.

First-return branches are enumerated by pushing monotone pieces forward one
step at a time.  A piece is a domain interval together with the two lateral
states its ends are mapped to; pieces are cut where their image straddles an
exceptional point (before the step) or an end of the base interval (after
it).  Image endpoints are therefore always exact one-sided values, and only
the domain cut points are located numerically, by bisection on ``f^t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import HypothesisFailed, SubdivisionOverflow
from .lateral import (
    MINUS,
    PLUS,
    LateralState,
    detect_periodic_like,
    lateral_exceptional_points,
    lateral_orbit,
    lateral_step,
)
from .maps import PiecewiseMap

DEFAULT_CAP = 1_000_000


@dataclass
class NiceReport:
    interval: tuple
    horizon: int
    is_nice_up_to_horizon: bool
    violation: tuple | None = None  # (endpoint, step, landing coord)
    trivial: bool = False


def _facing_away(f, endpoint, side):
    if endpoint <= 0.0:
        side = PLUS
    elif endpoint >= 1.0:
        side = MINUS
    return LateralState(endpoint, side)


def endpoint_orbit(f: PiecewiseMap, endpoint: float, side: int, horizon: int):
    """Coordinates of the orbit of an interval endpoint; lateral, facing away
    from the interval, so landing exactly on an exceptional point is harmless."""
    return lateral_orbit(f, _facing_away(f, endpoint, side), horizon).coords


def check_nice(f: PiecewiseMap, interval, horizon: int = 1000) -> NiceReport:
    a, b = map(float, interval)
    if not 0.0 <= a < b <= 1.0:
        raise ValueError(f"need 0 <= a < b <= 1, got {interval!r}")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    trivial = (a, b) == (0.0, 1.0) and all(
        f.lateral_value(e, s) in (0.0, 1.0) for e, s in ((0.0, PLUS), (1.0, MINUS))
    )
    for endpoint, side in ((a, MINUS), (b, PLUS)):
        coords = endpoint_orbit(f, endpoint, side, horizon)
        inside = np.nonzero((coords[1:] > a) & (coords[1:] < b))[0]
        if inside.size:
            k = int(inside[0]) + 1
            return NiceReport((a, b), horizon, False, (endpoint, k, float(coords[k])), trivial)
    return NiceReport((a, b), horizon, True, None, trivial)


@dataclass
class ReturnBranch:
    sub_lo: float
    sub_hi: float
    return_time: int
    image_lo: float
    image_hi: float
    onto: bool
    increasing: bool = True
    # lateral images of sub_lo+ and sub_hi-
    lo_state: LateralState | None = field(default=None, repr=False)
    hi_state: LateralState | None = field(default=None, repr=False)

    @property
    def length(self) -> float:
        return self.sub_hi - self.sub_lo

    def contains(self, x) -> bool:
        return self.sub_lo < x < self.sub_hi

    def to_row(self):
        return (repr(self.sub_lo), repr(self.sub_hi), self.return_time,
                repr(self.image_lo), repr(self.image_hi), str(self.onto).lower())


@dataclass
class FirstReturnMap:
    base: tuple
    branches: list
    max_time: int
    coverage_measure: float
    depth: int | None = None
    depth_exhausted: bool = False
    boundary_branch: ReturnBranch | None = None
    notes: list = field(default_factory=list)

    @property
    def all_onto(self) -> bool:
        return all(br.onto for br in self.branches)

    def branch_at(self, x):
        for br in self.branches:
            if br.contains(x):
                return br
        return None


CSV_HEADER = ("sub_lo", "sub_hi", "return_time", "image_lo", "image_hi", "onto")


def _preimages(table, lo, hi, t, target, increasing, iters=100):
    """Batch bisection for ``f^t(x) = target`` on monotone pieces ``(lo, hi)``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    target = np.asarray(target, dtype=float)
    inc = np.asarray(increasing, dtype=bool)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        live = (mid > lo) & (mid < hi)
        if not live.any():
            break
        val, _ = kernels.iterate(table, mid, t)
        below = (val < target) == inc
        lo = np.where(live & below, mid, lo)
        hi = np.where(live & ~below, mid, hi)
    return 0.5 * (lo + hi)


def _cut(piece_list, cuts):
    """Cut pieces at image points.

    ``piece_list`` holds (dlo, dhi, sL, sH); ``cuts[k]`` is a sorted list of
    (image point, domain point).  Returns the sub-pieces, in domain order.
    """
    out = []
    for (dlo, dhi, sL, sH), cs in zip(piece_list, cuts):
        if not cs:
            out.append((dlo, dhi, sL, sH))
            continue
        inc = sL.coord < sH.coord
        # walk the domain from left to right
        pts = sorted(cs, key=lambda e: e[1])
        cur_lo, cur_state = dlo, sL
        for y, x in pts:
            # the image approaches y from below when increasing
            end_state = LateralState(y, MINUS if inc else PLUS)
            out.append((cur_lo, x, cur_state, end_state))
            cur_lo, cur_state = x, LateralState(y, PLUS if inc else MINUS)
        out.append((cur_lo, dhi, cur_state, sH))
    return out


def first_return_map(f: PiecewiseMap, interval, max_time: int = 15, tol_onto: float = 1e-9,
                     cap: int = DEFAULT_CAP) -> FirstReturnMap:
    """Monotone branches of the first return map to ``(a, b)`` with return
    time at most ``max_time``."""
    a, b = map(float, interval)
    if not 0.0 <= a < b <= 1.0:
        raise ValueError(f"need 0 <= a < b <= 1, got {interval!r}")
    if max_time < 1:
        raise ValueError("max_time must be >= 1")
    table = f.table()
    exc = np.array(f.exceptional_set)
    live = [(a, b, LateralState(a, PLUS) if a < 1 else LateralState(a, MINUS),
             LateralState(b, MINUS) if b > 0 else LateralState(b, PLUS))]
    found = []
    for t in range(max_time):
        if not live:
            break
        # cut at exceptional points strictly inside the current image
        cuts, req = [], []
        for k, (dlo, dhi, sL, sH) in enumerate(live):
            ylo, yhi = sorted((sL.coord, sH.coord))
            inner = exc[(exc > ylo) & (exc < yhi)]
            cuts.append([])
            for e in inner:
                req.append((k, float(e), dlo, dhi, sL.coord < sH.coord))
        _resolve(table, t, req, cuts)
        pieces = _cut(live, cuts)
        # one step
        stepped = []
        for dlo, dhi, sL, sH in pieces:
            if sL.coord == sH.coord:
                continue
            try:
                stepped.append((dlo, dhi, lateral_step(f, sL), lateral_step(f, sH)))
            except Exception:  # degenerate side or range escape: no monotone continuation
                continue
        # cut at a and b
        cuts, req = [], []
        for k, (dlo, dhi, sL, sH) in enumerate(stepped):
            ylo, yhi = sorted((sL.coord, sH.coord))
            cuts.append([])
            for e in (a, b):
                if ylo < e < yhi:
                    req.append((k, e, dlo, dhi, sL.coord < sH.coord))
        _resolve(table, t + 1, req, cuts)
        live = []
        for dlo, dhi, sL, sH in _cut(stepped, cuts):
            ylo, yhi = sorted((sL.coord, sH.coord))
            if ylo == yhi or dlo >= dhi:
                continue
            if a <= ylo and yhi <= b:
                onto = abs(ylo - a) <= tol_onto and abs(yhi - b) <= tol_onto
                found.append(ReturnBranch(dlo, dhi, t + 1, ylo, yhi, onto,
                                          sL.coord < sH.coord, sL, sH))
            else:
                live.append((dlo, dhi, sL, sH))
        if len(live) + len(found) > cap:
            raise SubdivisionOverflow(f"more than {cap} pieces at time {t + 1}")
    found.sort(key=lambda br: br.sub_lo)
    coverage = sum(br.length for br in found) / (b - a)
    return FirstReturnMap((a, b), found, max_time, coverage)


def _resolve(table, t, req, cuts):
    if not req:
        return
    ks, ys, los, his, incs = zip(*req)
    if t == 0:
        xs = np.array(ys)
    else:
        xs = _preimages(table, los, his, t, ys, incs)
    for k, y, x in zip(ks, ys, xs):
        cuts[k].append((y, float(x)))


# ---------------------------------------------------------------------------
# dichotomy probe


@dataclass
class DichotomyVerdict:
    verdict: str  # AllCover, AllAvoid, Mixed, PreconditionFailed
    interval: tuple
    samples: int
    avoid_fraction: float = float("nan")
    cover_fraction: float = float("nan")
    partial: int = 0
    violation: tuple | None = None  # (lateral point, step, coord)


def critical_value_hits(f: PiecewiseMap, interval, horizon: int = 1000):
    """First landing of ``Re(O+(V_f))`` strictly inside the interval, or None."""
    a, b = interval
    for s in lateral_exceptional_points(f):
        coords = lateral_orbit(f, s, horizon).coords
        inside = np.nonzero((coords[1:] > a) & (coords[1:] < b))[0]
        if inside.size:
            k = int(inside[0]) + 1
            return (str(s), k, float(coords[k]))
    return None


def interior_cells(interval, ncells):
    a, b = interval
    lo = int(np.ceil(a * ncells - 1e-9))
    hi = int(np.floor(b * ncells + 1e-9))
    return np.arange(lo, hi)


def dichotomy_probe(f: PiecewiseMap, interval, samples: int = 200, burn_in: int = 10_000,
                    tail: int = 100_000, resolution: float = 1e-3, seed: int = 0,
                    horizon: int = 1000, threshold: float = 0.95, threads=None) -> DichotomyVerdict:
    a, b = map(float, interval)
    viol = critical_value_hits(f, (a, b), horizon)
    if viol is not None:
        return DichotomyVerdict("PreconditionFailed", (a, b), samples, violation=viol)
    rng = np.random.default_rng(seed)
    xs = a + (b - a) * rng.random(samples)
    scan = kernels.omega_scan(f.table(), xs, burn_in, tail, [resolution], probe=(a, b),
                              threads=threads)
    ok = scan["status"] == kernels.OK
    avoid = ok & (scan["probe_count"] == 0)
    cells = interior_cells((a, b), int(scan["ncells"][0]))
    covered = ok & scan["occupancy"][0][:, cells].all(axis=1)
    avoid_frac = float(avoid.sum()) / samples
    cover_frac = float(covered.sum()) / samples
    if cover_frac >= threshold:
        verdict = "AllCover"
    elif avoid_frac >= threshold:
        verdict = "AllAvoid"
    else:
        verdict = "Mixed"
    return DichotomyVerdict(verdict, (a, b), samples, avoid_frac, cover_frac, int((~ok).sum()))


# ---------------------------------------------------------------------------
# accelerated induced map


def _pullback(table, dlo, dhi, T, targets):
    targets = np.asarray(targets, dtype=float)
    n = len(targets)
    return _preimages(table, np.full(n, dlo), np.full(n, dhi), T, targets, np.ones(n, dtype=bool))


def accelerated_induced_map(f: PiecewiseMap, interval, depth_cap: int = 3, max_time: int = 30,
                            tol_onto: float = 1e-9, horizon: int = 1000) -> FirstReturnMap:
    """Induced map on ``(a, c)`` whose branches all cover ``(a, b)``.

    Starting from the first return map ``F_0`` restricted to ``(a, c)``, each
    step composes the boundary branch ``I_n = (t_n, c)`` with returns through
    the branch ``I_a`` adjacent to ``a`` until the image of ``c-`` leaves
    ``I_a``, then pulls back the branches lying under that image.  The
    construction never terminates in general; it stops after ``depth_cap``
    steps with ``depth_exhausted`` set.
    """
    a, b = map(float, interval)
    inner = [e for e in f.exceptional_set if a < e < b]
    if len(inner) != 1:
        raise HypothesisFailed(f"need exactly one exceptional point in ({a}, {b}), found {inner}")
    c = inner[0]
    for side in (MINUS, PLUS):
        if f.branches[f.lateral_branch_index(c, side)].sign < 0:
            raise HypothesisFailed("map is not orientation preserving around c")
    per = detect_periodic_like(f, LateralState(a, PLUS if a < 1 else MINUS), max_period=64)
    if not per:
        raise HypothesisFailed(f"a={a} is not detected as periodic")
    # a is periodic, so its orbit is the detected cycle (iterating a repelling
    # cycle in floating point drifts away from it)
    for k, s in enumerate(per.orbit):
        if a < s.coord < b:
            raise HypothesisFailed(f"orbit of a enters ({a}, {b}): step {k} lands at {s.coord}")
    cm = lateral_orbit(f, LateralState(c, MINUS), horizon).coords
    if np.any((cm[1:] > c) & (cm[1:] < b)):
        raise HypothesisFailed(f"orbit of c- enters ({c}, {b})")
    late = detect_periodic_like(f, LateralState(float(cm[-1]), MINUS), max_period=64, tol_p=1e-7)
    if late and late.attracting:
        raise HypothesisFailed(f"c- is attracted to a cycle of period {late.period}")

    table = f.table()
    frm = first_return_map(f, (a, b), max_time, tol_onto)
    left = [br for br in frm.branches if br.sub_hi <= c]
    notes = []
    boundary = [br for br in left if br.sub_hi == c]
    adj = [br for br in left if br.sub_lo == a]
    if not boundary or not adj:
        raise HypothesisFailed("no branch adjacent to c or to a within max_time")
    I_n = boundary[0]
    I_a = adj[0]
    if I_a is I_n:
        raise HypothesisFailed("branch at a reaches c: c- is attracted to a periodic-like orbit")
    if not I_a.onto:
        raise HypothesisFailed("branch adjacent to a is not onto")
    if abs(I_n.image_lo - a) > tol_onto:
        raise HypothesisFailed(f"boundary branch image starts at {I_n.image_lo}, not at a={a}")
    dropped = [br for br in left if not br.onto and br is not I_n]
    if dropped:
        notes.append(f"{len(dropped)} non-onto first-return branches away from c dropped")
    P = [br for br in left if br.onto]  # full branches of F_n, I_n kept separately
    alpha = I_a.sub_hi
    r_a = I_a.return_time

    def step_Ia(y):
        # F on I_a, evaluated through f^{r_a}
        return float(kernels.iterate(table, [y], r_a)[0][0])

    depth = 0
    exhausted = False
    while depth < depth_cap:
        T = I_n.return_time
        y = I_n.image_hi  # Re F_n(c-)
        if not a < y < c:
            raise HypothesisFailed(f"image of c- under the induced map is {y}, outside ({a}, {c})")
        ell = 1
        while a < y < alpha:
            y = step_Ia(y)
            ell += 1
            if ell > 10_000:
                raise HypothesisFailed("c- is captured by the branch at a")
        T_new = T + (ell - 1) * r_a
        # exact lateral image of c- at time T_new
        y = float(lateral_orbit(f, LateralState(c, MINUS), T_new).coords[-1])
        if not y > alpha:
            exhausted = True
            notes.append("lateral image of c- fell back into I_a; stopping")
            break
        under = [br for br in P if br.sub_hi <= y]
        Q = next((br for br in P + [I_n] if br.sub_lo < y < br.sub_hi), None)
        if Q is None:
            exhausted = True
            notes.append(f"image {y} of c- lies in a gap of the induced domain")
            break
        ends = sorted({v for br in under for v in (br.sub_lo, br.sub_hi)} | {Q.sub_lo})
        pre = dict(zip(ends, _pullback(table, I_n.sub_lo, c, T_new, ends)))
        new = []
        for br in under:
            new.append(ReturnBranch(float(pre[br.sub_lo]), float(pre[br.sub_hi]),
                                    T_new + br.return_time, br.image_lo, br.image_hi, True))
        t_next = float(pre[Q.sub_lo])
        T_next = T_new + Q.return_time
        img_hi = float(lateral_orbit(f, LateralState(c, MINUS), T_next).coords[-1])
        keep = [br for br in P if br.sub_hi <= I_n.sub_lo]
        P = sorted(keep + new, key=lambda br: br.sub_lo)
        I_n = ReturnBranch(t_next, c, T_next, a, img_hi, abs(img_hi - b) <= tol_onto, True,
                           LateralState(a, PLUS), LateralState(img_hi, MINUS))
        depth += 1
    else:
        exhausted = True
    P = [br for br in P if br.sub_lo < br.sub_hi]
    coverage = sum(br.length for br in P) / (c - a)
    return FirstReturnMap((a, b), P, max_time, coverage, depth=depth, depth_exhausted=exhausted,
                          boundary_branch=I_n, notes=notes)
