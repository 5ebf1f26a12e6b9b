"""Lateral (one-sided) orbits, periodic-like points, omega-limit covers and
rotation numbers.

A lateral state ``(p, side)`` stands for the one-sided germ at ``p``: side
``-1`` is "approached from the left", ``+1`` "from the right".  One step maps
it to the one-sided limit of ``f`` at ``p`` taken inside the adjacent branch
closure, and the side flips when that branch is decreasing.  At points away
from the exceptional set this is ordinary iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateSide, NotAGapMap, OutOfDomain, PartialOrbit
from .maps import PiecewiseMap

MINUS, PLUS = -1, 1
INDIFFERENCE_MARGIN = 1e-9


def side_symbol(side: int) -> str:
    return "-" if side < 0 else "+"


@dataclass(frozen=True)
class LateralState:
    coord: float
    side: int

    def __post_init__(self):
        if self.side not in (MINUS, PLUS):
            raise ValueError(f"side must be -1 or +1, got {self.side!r}")
        if not 0.0 <= self.coord <= 1.0:
            raise OutOfDomain(f"coordinate {self.coord!r} outside [0,1]")
        if self.coord == 0.0 and self.side == MINUS:
            raise OutOfDomain("0 has no left side")
        if self.coord == 1.0 and self.side == PLUS:
            raise OutOfDomain("1 has no right side")

    @classmethod
    def parse(cls, text: str) -> "LateralState":
        """Parse ``"0.5-"`` / ``"0.5+"``."""
        text = text.strip()
        if not text or text[-1] not in "+-":
            raise ValueError(f"lateral point must end in '+' or '-': {text!r}")
        return cls(float(text[:-1]), MINUS if text[-1] == "-" else PLUS)

    def __str__(self):
        return f"{self.coord!r}{side_symbol(self.side)}"


# complex-style notation p-i / p+i
LateralPoint = LateralState


@dataclass
class LateralOrbit:
    start: LateralState
    coords: np.ndarray
    sides: np.ndarray
    branch_index: np.ndarray
    truncated: str | None = None

    @property
    def length(self) -> int:
        return len(self.coords)

    @property
    def states(self) -> list:
        return [LateralState(float(c), int(s)) for c, s in zip(self.coords, self.sides)]

    def to_csv_rows(self):
        for k, (c, s, b) in enumerate(zip(self.coords, self.sides, self.branch_index)):
            yield k, repr(float(c)), side_symbol(int(s)), int(b)


def lateral_step(f: PiecewiseMap, s: LateralState) -> LateralState:
    i = f.lateral_branch_index(s.coord, s.side)
    b = f.branches[i]
    if b.form.is_constant():
        raise DegenerateSide(f"branch {i} is constant; no side at {s}")
    value = f.lateral_value(s.coord, s.side)
    return LateralState(value, s.side * b.sign)


def lateral_orbit(f: PiecewiseMap, s: LateralState, n: int) -> LateralOrbit:
    """The n+1 states ``s, f(s), ..., f^n(s)``; truncated (with a marker) on a
    degenerate side or a range escape."""
    if n < 0:
        raise ValueError("n must be >= 0")
    coords, sides, idx, st = kernels.lateral_orbit(f.table(), s.coord, s.side, n)
    truncated = None if st == kernels.OK else kernels.STATUS_NAMES[st]
    return LateralOrbit(s, coords, sides, idx, truncated)


def lateral_iterate(f: PiecewiseMap, s: LateralState, n: int) -> LateralState:
    orb = lateral_orbit(f, s, n)
    if orb.truncated:
        raise DegenerateSide(f"lateral orbit of {s} stopped after {orb.length - 1} steps: {orb.truncated}")
    return LateralState(float(orb.coords[-1]), int(orb.sides[-1]))


def lateral_exceptional_points(f: PiecewiseMap) -> list:
    """The lateral exceptional set: ``c-`` and ``c+`` for every exceptional point c."""
    return [LateralState(c, side) for c in f.exceptional_set for side in (MINUS, PLUS)]


# ---------------------------------------------------------------------------
# periodic-like points


@dataclass
class PeriodicLikeRecord:
    point: LateralState
    period: int
    multiplier: float
    attracting: bool | None  # None: indifferent within the margin, left undecided
    orbit: list = field(default_factory=list)

    @property
    def indifferent(self) -> bool:
        return self.attracting is None


@dataclass
class NotFound:
    degenerate: bool = False

    def __bool__(self):
        return False


def _multiplier(f, states):
    m = 1.0
    for s in states:
        m *= abs(f.lateral_derivative(s.coord, s.side, 1))
    return m


def detect_periodic_like(f: PiecewiseMap, s: LateralState, max_period: int = 64,
                         tol_p: float = 1e-9, capture_radius: float = 1e-4):
    """Smallest period ``l <= max_period`` with ``f^l(s) = s`` (same side, coordinate
    within ``tol_p``) after refining the start toward a nearby root of ``f^l(x) - x``.

    Refinement: if ``f^l`` is monotone on the one-sided window
    ``[coord - r, coord + r]`` (r = capture_radius, clipped at the lap), and
    ``f^l(x) - x`` changes sign there, bisection locates the cycle point.
    Returns :class:`PeriodicLikeRecord` or a falsy :class:`NotFound`.
    """
    if max_period < 1 or not tol_p > 0:
        raise ValueError("need max_period >= 1 and tol_p > 0")
    orb = lateral_orbit(f, s, max_period)
    for ell in range(1, orb.length):
        refined = _refine_cycle(f, s, ell, capture_radius, tol_p)
        if int(orb.sides[ell]) == s.side and abs(float(orb.coords[ell]) - s.coord) < tol_p:
            return _record(f, refined or s, ell)
        if refined is not None:
            return _record(f, refined, ell)
    return NotFound(degenerate=orb.truncated is not None)


def _refine_cycle(f, s, ell, radius, tol_p):
    table = f.table()
    x0 = s.coord
    lo = max(x0 - radius, 0.0)
    hi = min(x0 + radius, 1.0)
    # keep the window inside one lap of f^ell: same branch sequence at both ends
    grid = np.linspace(lo, hi, 9)
    seqs = []
    for x in grid:
        try:
            o = lateral_orbit(f, LateralState(float(x), s.side), ell)
        except OutOfDomain:
            return None
        if o.truncated:
            return None
        seqs.append(tuple(o.branch_index[:ell]))
    # restrict to the run of identical itineraries containing x0
    k0 = int(np.argmin(np.abs(grid - x0)))
    a = k0
    while a > 0 and seqs[a - 1] == seqs[k0]:
        a -= 1
    b = k0
    while b < len(grid) - 1 and seqs[b + 1] == seqs[k0]:
        b += 1
    if a == b:
        return None
    vals, st = kernels.iterate(table, grid[a:b + 1], ell)
    if np.any(st != kernels.OK):
        return None
    g = vals - grid[a:b + 1]
    sgn = np.sign(g)
    where = np.nonzero(sgn[:-1] * sgn[1:] <= 0)[0]
    if where.size == 0:
        return None
    j = int(where[np.argmin(np.abs(grid[a + where] - x0))])
    xl, xr = float(grid[a + j]), float(grid[a + j + 1])
    gl = float(g[j])
    for _ in range(200):
        mid = 0.5 * (xl + xr)
        if mid in (xl, xr):
            break
        gm = float(kernels.iterate(table, [mid], ell)[0][0]) - mid
        if gm == 0.0:
            xl = xr = mid
            break
        if (gm < 0) == (gl < 0):
            xl, gl = mid, gm
        else:
            xr = mid
    x = xl if abs(gl) <= abs(float(kernels.iterate(table, [xr], ell)[0][0]) - xr) else xr
    if x in f.exceptional_set:
        return None
    cand = LateralState(x, s.side)
    end = lateral_iterate(f, cand, ell)
    if end.side == s.side and abs(end.coord - x) < tol_p:
        return cand
    return None


def _record(f, s, ell):
    orb = lateral_orbit(f, s, ell)
    states = orb.states[:ell]
    mult = _multiplier(f, states)
    if mult < 1.0 - INDIFFERENCE_MARGIN:
        attracting = True
    elif mult > 1.0 + INDIFFERENCE_MARGIN:
        attracting = False
    else:
        attracting = None
    return PeriodicLikeRecord(s, ell, mult, attracting, states)


# ---------------------------------------------------------------------------
# omega-limit covers


@dataclass
class OmegaCover:
    """Grid cells of width ``resolution`` visited by the orbit tail."""

    x0: float
    resolution: float
    ncells: int
    cells: np.ndarray
    period: int = 0
    cycle: np.ndarray = field(default_factory=lambda: np.empty(0))
    partial: bool = False
    status: str = "ok"
    min_dist_exceptional: float = math.inf
    probe_visits: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return self.period > 0

    def centers(self) -> np.ndarray:
        return (self.cells + 0.5) / self.ncells

    def intervals(self) -> list:
        """Maximal runs of adjacent cells as closed intervals."""
        return cells_to_intervals(self.cells, self.ncells)

    def to_dict(self):
        return {
            "x0": self.x0,
            "resolution": self.resolution,
            "ncells": self.ncells,
            "cells": [int(c) for c in self.cells],
            "intervals": [[lo, hi] for lo, hi in self.intervals()],
            "periodic": self.periodic,
            "period": self.period,
            "cycle": [float(v) for v in self.cycle],
            "partial": self.partial,
            "status": self.status,
        }


def cells_to_intervals(cells, ncells) -> list:
    cells = np.asarray(cells)
    if cells.size == 0:
        return []
    breaks = np.nonzero(np.diff(cells) > 1)[0]
    starts = np.concatenate([[cells[0]], cells[breaks + 1]])
    ends = np.concatenate([cells[breaks], [cells[-1]]])
    return [(float(a) / ncells, float(b + 1) / ncells) for a, b in zip(starts, ends)]


def covers_from_scan(xs, scan, resolutions, primary: int = 0) -> list:
    covers = []
    for s, x0 in enumerate(xs):
        st = int(scan["status"][s])
        per = int(scan["period"][s])
        occ = scan["occupancy"]
        cov = OmegaCover(
            x0=float(x0),
            resolution=float(resolutions[primary]),
            ncells=int(scan["ncells"][primary]),
            cells=np.nonzero(occ[primary][s])[0],
            period=per,
            cycle=scan["cycle"][s, :per].copy(),
            partial=st != kernels.OK,
            status=kernels.STATUS_NAMES[st],
            min_dist_exceptional=float(scan["mindist"][s]),
            probe_visits=int(scan["probe_count"][s]),
        )
        cov.extra["multires"] = {
            float(r): np.nonzero(occ[k][s])[0] for k, r in enumerate(resolutions) if k != primary
        }
        covers.append(cov)
    return covers


def omega_estimate(f: PiecewiseMap, x0: float, burn_in: int = 10_000, tail: int = 100_000,
                   resolution: float = 1e-3, strict: bool = False) -> OmegaCover:
    """Cover of the omega-limit set of ``x0`` by the cells its tail visits.

    If the orbit lands exactly on an exceptional point the cover is marked
    partial; with ``strict=True`` that raises :class:`PartialOrbit` instead.
    """
    if not 0.0 <= x0 <= 1.0:
        raise OutOfDomain(f"x0={x0!r} outside [0,1]")
    scan = kernels.omega_scan(f.table(), [x0], burn_in, tail, [resolution])
    cov = covers_from_scan([x0], scan, [resolution])[0]
    if strict and cov.partial:
        raise PartialOrbit(f"orbit of {x0!r} stopped: {cov.status}")
    return cov


# ---------------------------------------------------------------------------
# rotation numbers


def gap_endpoints(f: PiecewiseMap, c: float):
    """``(v0, v1) = (f(c+), f(c-))``."""
    return f.lateral_value(c, +1), f.lateral_value(c, -1)


def check_gap_map(f: PiecewiseMap, c: float, samples: int = 64):
    """Spot-check that f restricted to [v0, v1] minus c has two increasing
    branches with disjoint images; returns (v0, v1)."""
    if c not in f.exceptional_set:
        raise NotAGapMap(f"c={c!r} is not an exceptional point")
    v0, v1 = gap_endpoints(f, c)
    if not v0 <= c <= v1:
        raise NotAGapMap(f"[{v0}, {v1}] does not contain c={c}")
    il = f.lateral_branch_index(c, MINUS)
    ir = f.lateral_branch_index(c, PLUS)
    bl, br = f.branches[il], f.branches[ir]
    if bl.sign < 0 or br.sign < 0:
        raise NotAGapMap("branches around c must be increasing")
    if bl.lo > v0 or br.hi < v1:
        raise NotAGapMap("another exceptional point lies inside [v0, v1]")
    fl_lo = f.lateral_value(v0, PLUS) if v0 < c else v1
    fr_hi = f.lateral_value(v1, MINUS) if v1 > c else v0
    # images (f(v0), v1) and (v0, f(v1)) must not overlap
    if fr_hi > fl_lo + 1e-15:
        raise NotAGapMap(f"images overlap: f(v1)={fr_hi} > f(v0)={fl_lo}")
    for b, lo, hi in ((bl, v0, c), (br, c, v1)):
        xs = np.linspace(lo, hi, samples + 2)[1:-1]
        ys = np.array([b.form.value(x) for x in xs])
        if np.any(np.diff(ys) <= 0):
            raise NotAGapMap("a branch is not strictly increasing on the gap interval")
        if np.any(ys < v0 - 1e-12) or np.any(ys > v1 + 1e-12):
            raise NotAGapMap("[v0, v1] is not invariant")
    return v0, v1


def rotation_number(f: PiecewiseMap, c: float, n: int = 100_000) -> float:
    """Frequency of right-branch visits among the first n states of the lateral
    orbit of ``v0+`` (v0 = f(c+))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    check_gap_map(f, c)
    v0, _ = gap_endpoints(f, c)
    start = LateralState(v0, PLUS) if v0 < 1.0 else LateralState(v0, MINUS)
    orb = lateral_orbit(f, start, n)
    if orb.truncated or orb.length < n + 1:
        raise NotAGapMap(f"lateral orbit stopped: {orb.truncated}")
    right = f.lateral_branch_index(c, PLUS)
    return float(np.count_nonzero(orb.branch_index[:n] == right)) / n
