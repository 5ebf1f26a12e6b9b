"""Monte Carlo attractor census.

Seeded uniform samples are iterated, the tail of each orbit is recorded as a
cell cover, covers are merged by single-linkage on Hausdorff distance and each
cluster is labelled periodic_like, cycle_of_intervals, cantor_like or
undetermined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import PreconditionFailed
from .lateral import (
    LateralState,
    OmegaCover,
    cells_to_intervals,
    covers_from_scan,
    detect_periodic_like,
    lateral_exceptional_points,
    lateral_orbit,
)
from .maps import PiecewiseMap

TREND_RESOLUTIONS = (1e-2, 5e-3, 2.5e-3)
CANTOR_FACTOR = 1.5
STABLE_BAND = 0.10


@dataclass
class ClassifyParams:
    seed: int
    samples: int = 500
    burn_in: int = 10_000
    tail: int = 100_000
    resolution: float = 1e-3
    hausdorff_tol: float = 5e-3
    lateral_steps: int = 100_000
    threads: int | None = None

    def __post_init__(self):
        if self.seed is None:
            raise ValueError("a seed is required")
        if self.samples < 1 or self.tail < 1 or self.burn_in < 0:
            raise ValueError("need samples >= 1, tail >= 1, burn_in >= 0")
        if not self.resolution > 0 or not self.hausdorff_tol > 0:
            raise ValueError("resolution and hausdorff_tol must be positive")

    def sampling(self) -> dict:
        # threads never changes results, so it is left out
        return {"samples": self.samples, "burn_in": self.burn_in, "tail": self.tail,
                "resolution": self.resolution, "seed": self.seed}


def count_bound(f: PiecewiseMap) -> int:
    return 2 ** (1 + 2 * len(f.exceptional_set))


def sample_points(samples: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random(samples)


def sample_omega(f: PiecewiseMap, samples: int = 500, burn_in: int = 10_000, tail: int = 100_000,
                 resolution: float = 1e-3, seed: int | None = None, threads=None,
                 trend_resolutions=TREND_RESOLUTIONS) -> list:
    """One :class:`OmegaCover` per seeded uniform start point."""
    if seed is None:
        raise ValueError("a seed is required")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    xs = sample_points(samples, seed)
    resolutions = [resolution] + [r for r in trend_resolutions if r != resolution]
    scan = kernels.omega_scan(f.table(), xs, burn_in, tail, resolutions, threads=threads)
    return covers_from_scan(xs, scan, resolutions)


# ---------------------------------------------------------------------------
# Hausdorff distances on cell sets


def distance_to_cells(cells, ncells) -> np.ndarray:
    """Distance (in cells) from every cell index to the nearest cell of the set."""
    cells = np.asarray(cells)
    k = np.arange(ncells)
    if cells.size == 0:
        return np.full(ncells, np.inf)
    j = np.searchsorted(cells, k)
    right = np.where(j < cells.size, cells[np.minimum(j, cells.size - 1)] - k, np.inf)
    left = np.where(j > 0, k - cells[np.maximum(j - 1, 0)], np.inf)
    return np.minimum(left, right)


def cell_hausdorff(a, b, ncells) -> float:
    """Hausdorff distance between two cell sets, in units of x."""
    a, b = np.asarray(a), np.asarray(b)
    if a.size == 0 or b.size == 0:
        return 0.0 if a.size == b.size else math.inf
    h = max(distance_to_cells(a, ncells)[b].max(), distance_to_cells(b, ncells)[a].max())
    return float(h) / ncells


def points_to_cells(xs, ncells) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    xs = xs[np.isfinite(xs)]
    return np.unique(np.minimum((xs * ncells).astype(np.int64), ncells - 1))


def _pairwise_hausdorff(sets, ncells, block=16):
    U = len(sets)
    D = np.stack([distance_to_cells(s, ncells) for s in sets])  # U x ncells
    O = np.zeros((U, ncells), dtype=bool)
    for i, s in enumerate(sets):
        O[i, s] = True
    H = np.zeros((U, U))
    for lo in range(0, U, block):
        d = D[lo:lo + block]  # distance to set i, evaluated on members of set j
        directed = np.where(O[None, :, :], d[:, None, :], 0.0).max(axis=2)
        H[lo:lo + block] = directed
    return np.maximum(H, H.T) / ncells


# ---------------------------------------------------------------------------
# clustering


@dataclass
class AttractorEstimate:
    id: int
    kind: str | None
    cells: np.ndarray = field(repr=False)
    ncells: int
    resolution: float
    count: int
    samples: int
    members: list = field(default_factory=list, repr=False)
    points: list | None = None
    period: int = 0
    multiplier: float | None = None
    traced_by: list = field(default_factory=list)
    density: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def basin_measure(self) -> float:
        return self.count / self.samples

    @property
    def confidence(self) -> float:
        p = self.basin_measure
        return 1.96 * math.sqrt(p * (1.0 - p) / self.samples)

    @property
    def intervals(self) -> list:
        return cells_to_intervals(self.cells, self.ncells)

    @property
    def infimum(self) -> float:
        return float(self.cells[0]) / self.ncells if self.cells.size else math.inf

    def support(self):
        if self.kind == "periodic_like" and self.points is not None:
            return {"type": "points", "points": [float(p) for p in self.points]}
        return {"type": "intervals", "intervals": [[lo, hi] for lo, hi in self.intervals]}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "support": self.support(),
            "basin": self.basin_measure,
            "confidence": self.confidence,
            "traced_by": list(self.traced_by),
        }


def cluster_attractors(covers, hausdorff_tol: float = 5e-3, samples: int | None = None) -> list:
    """Single-linkage clusters of non-partial covers (Hausdorff distance at
    most ``hausdorff_tol``), ordered by the infimum of their supports."""
    if not hausdorff_tol > 0:
        raise ValueError("hausdorff_tol must be positive")
    covers = list(covers)
    n_total = samples if samples is not None else len(covers)
    good = [c for c in covers if not c.partial]
    if not good:
        return []
    ncells = good[0].ncells
    if any(c.ncells != ncells for c in good):
        raise ValueError("covers must share one resolution")
    # identical covers first: most runs have few distinct supports
    groups = {}
    for c in good:
        groups.setdefault(c.cells.tobytes(), []).append(c)
    keys = sorted(groups, key=lambda k: (np.frombuffer(k, dtype=good[0].cells.dtype).tolist()))
    sets = [groups[k][0].cells for k in keys]
    H = _pairwise_hausdorff(sets, ncells)
    parent = list(range(len(sets)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    ii, jj = np.nonzero(np.triu(H <= hausdorff_tol + 1e-15, 1))
    for i, j in zip(ii, jj):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    clusters = {}
    for u in range(len(sets)):
        clusters.setdefault(find(u), []).append(u)
    out = []
    for members in clusters.values():
        covs = [c for u in members for c in groups[keys[u]]]
        cells = np.unique(np.concatenate([sets[u] for u in members]))
        out.append(AttractorEstimate(0, None, cells, ncells, 1.0 / ncells, len(covs), n_total, covs))
    out.sort(key=lambda e: (e.infimum, -e.count))
    for k, e in enumerate(out):
        e.id = k
        e.resolution = good[0].resolution
    return out


# ---------------------------------------------------------------------------
# classification


def density_trend(estimate: AttractorEstimate, resolutions=TREND_RESOLUTIONS) -> list:
    """``cell count * resolution`` of the cluster's cover at each resolution."""
    out = []
    for r in resolutions:
        n = kernels.cells_for(r)
        cells = [m.extra.get("multires", {}).get(float(r)) for m in estimate.members]
        cells = [c for c in cells if c is not None]
        if not cells:
            if abs(r - estimate.resolution) < 1e-15:
                cells = [estimate.cells]
            else:
                return []
        out.append(np.unique(np.concatenate(cells)).size / n)
    return out


def trend_verdict(m) -> str:
    if len(m) < 2 or m[0] == 0:
        return "undetermined"
    ratios = [m[k] / m[k + 1] for k in range(len(m) - 1)]
    if all(r >= CANTOR_FACTOR for r in ratios):
        return "sparse"
    if all(abs(m[k + 1] / m[k] - 1.0) <= STABLE_BAND for k in range(len(m) - 1)):
        return "stable"
    return "undetermined"


def lateral_closures(f: PiecewiseMap, steps: int) -> dict:
    """Coordinates of every lateral exceptional orbit, keyed by ``"c-"``-style labels."""
    out = {}
    for s in lateral_exceptional_points(f):
        out[str(s)] = lateral_orbit(f, s, steps).coords
    return out


def match_traced_by(f, estimate, hausdorff_tol, steps, closures=None):
    """Lateral exceptional points whose orbit closures lie within tolerance of
    the support, provided their union matches the support."""
    n = estimate.ncells
    closures = closures if closures is not None else lateral_closures(f, steps)
    dist = distance_to_cells(estimate.cells, n)
    inside = []
    for label, coords in closures.items():
        cells = points_to_cells(coords, n)
        if cells.size and dist[cells].max() / n <= hausdorff_tol:
            inside.append((label, cells))
    if not inside:
        return [], math.inf
    union = np.unique(np.concatenate([c for _, c in inside]))
    h = cell_hausdorff(union, estimate.cells, n)
    return ([label for label, _ in inside] if h <= hausdorff_tol else []), h


def _interior_exceptional(f, estimate):
    occ = np.zeros(estimate.ncells + 2, dtype=bool)
    occ[estimate.cells + 1] = True
    hits = []
    for e in f.exceptional_set:
        k = min(int(e * estimate.ncells), estimate.ncells - 1) + 1
        # the cell of e and both neighbours are covered, or e sits on a cell edge inside a run
        on_edge = e * estimate.ncells == int(e * estimate.ncells)
        if on_edge and occ[k - 1] and occ[k]:
            hits.append(e)
        elif occ[k - 1] and occ[k] and occ[k + 1]:
            hits.append(e)
    return hits


def classify_attractor(f: PiecewiseMap, estimate: AttractorEstimate, resolutions=TREND_RESOLUTIONS,
                       hausdorff_tol: float = 5e-3, lateral_steps: int = 100_000,
                       closures=None) -> AttractorEstimate:
    periodic = [m for m in estimate.members if m.periodic]
    if 2 * len(periodic) > len(estimate.members):
        rep = periodic[0]
        rec = detect_periodic_like(f, LateralState(float(rep.cycle[-1]), +1), max_period=64,
                                   tol_p=1e-9)
        # an odd number of side flips per lap doubles the lateral period
        if rec and rec.period in (rep.period, 2 * rep.period):
            pts = sorted(s.coord for s in rec.orbit[:rep.period])
            cells = points_to_cells(pts, estimate.ncells)
            if cell_hausdorff(cells, estimate.cells, estimate.ncells) <= hausdorff_tol:
                estimate.kind = "periodic_like"
                estimate.points = pts
                estimate.period = len(pts)
                estimate.multiplier = (rec.multiplier if rec.period == rep.period
                                       else math.sqrt(rec.multiplier))
                if rec.attracting is None:
                    estimate.notes.append("indifferent cycle: multiplier within 1e-9 of 1")
                return estimate
        estimate.notes.append("periodic flag not confirmed by cycle refinement")
    m = density_trend(estimate, resolutions)
    estimate.density = m
    verdict = trend_verdict(m)
    traced, h = match_traced_by(f, estimate, hausdorff_tol, lateral_steps, closures)
    estimate.traced_by = traced
    if verdict == "stable":
        if _interior_exceptional(f, estimate):
            estimate.kind = "cycle_of_intervals"
        else:
            estimate.kind = "undetermined"
            estimate.notes.append("interval cover without an interior exceptional point")
    elif verdict == "sparse" and traced:
        estimate.kind = "cantor_like"
    else:
        estimate.kind = "undetermined"
        if verdict == "sparse":
            estimate.notes.append(f"sparse cover not traced by lateral orbits (Hausdorff {h:.3g})")
    return estimate


@dataclass
class ClassificationReport:
    map_id: str
    attractors: list
    unassigned_fraction: float
    count_bound: int
    bound_respected: bool
    sampling: dict

    def to_dict(self) -> dict:
        return {
            "map": self.map_id,
            "attractors": [a.to_dict() for a in self.attractors],
            "unassigned": self.unassigned_fraction,
            "bound": {"count": len(self.attractors), "limit": self.count_bound,
                      "respected": self.bound_respected},
            "params": self.sampling,
        }


def classification_report(f: PiecewiseMap, params: ClassifyParams) -> ClassificationReport:
    covers = sample_omega(f, params.samples, params.burn_in, params.tail, params.resolution,
                          params.seed, params.threads)
    clusters = cluster_attractors(covers, params.hausdorff_tol, params.samples)
    closures = None
    if any(2 * sum(m.periodic for m in e.members) <= len(e.members) for e in clusters):
        closures = lateral_closures(f, params.lateral_steps)
    for e in clusters:
        classify_attractor(f, e, TREND_RESOLUTIONS, params.hausdorff_tol, params.lateral_steps,
                           closures)
    assigned = sum(e.count for e in clusters)
    bound = count_bound(f)
    return ClassificationReport(
        map_id=f.name,
        attractors=clusters,
        unassigned_fraction=(params.samples - assigned) / params.samples,
        count_bound=bound,
        bound_respected=len(clusters) <= bound,
        sampling=params.sampling(),
    )


def mane_probe(f: PiecewiseMap, samples: int = 200, tol_dist: float = 1e-3,
               params: ClassifyParams | None = None) -> float:
    """Fraction of sampled orbits whose tail comes within ``tol_dist`` of the
    exceptional set.  Requires that no attracting or indifferent cycle is seen."""
    params = params or ClassifyParams(seed=0)
    covers = sample_omega(f, samples, params.burn_in, params.tail, params.resolution, params.seed,
                          params.threads, trend_resolutions=())
    for cov in covers:
        if cov.periodic:
            rec = detect_periodic_like(f, LateralState(float(cov.cycle[-1]), +1), max_period=64)
            if rec and rec.attracting is not False:
                kind = "attracting" if rec.attracting else "indifferent"
                raise PreconditionFailed(
                    f"{kind} cycle of period {rec.period} (multiplier {rec.multiplier:.6g})"
                )
    near = sum(1 for c in covers if c.partial or c.min_dist_exceptional < tol_dist)
    return near / samples


__all__ = [
    "ClassifyParams", "AttractorEstimate", "ClassificationReport", "sample_omega",
    "cluster_attractors", "classify_attractor", "classification_report", "mane_probe",
    "count_bound", "cell_hausdorff",
]
