"""Built-in parametrized families.

* :func:`make_logistic` - ``x -> lam*x*(1-x)`` with exceptional set ``{1/2}``.
* :func:`make_lorenz` - a contracting-Lorenz-type family with power-law
  branches meeting at a discontinuity ``c``.
* :func:`make_rotation` - rigid rotation by ``alpha``.
* :func:`extract_gap_map` - the gap-map restriction of a Lorenz map.
* :func:`construct_ewi` - a two-discontinuity map built from a gap map whose
  rotation number avoids low-denominator rationals (a candidate carrier of a
  wandering-interval attractor).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParam, NotAGapMap, SearchExhausted
from .maps import (
    DECREASING,
    INCREASING,
    BranchSpec,
    PiecewiseMap,
    Affine,
    Polynomial,
    PowerLaw,
    Scaled,
    validate,
)


def make_logistic(lam: float) -> PiecewiseMap:
    lam = float(lam)
    if not 0.0 < lam <= 4.0:
        raise BadParam(f"logistic parameter must lie in (0, 4], got {lam!r}")
    form = Polynomial((0.0, lam, -lam))
    return PiecewiseMap(
        branches=(BranchSpec(0.0, 0.5, form, INCREASING), BranchSpec(0.5, 1.0, form, DECREASING)),
        exceptional_set=(0.5,),
        name=f"logistic(lambda={lam!r})",
        provenance={"family": "logistic", "params": {"lambda": lam}},
    )


def make_rotation(alpha: float) -> PiecewiseMap:
    """Rigid rotation ``x -> x + alpha mod 1`` with its discontinuity at ``1 - alpha``."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise BadParam(f"alpha must lie in (0, 1), got {alpha!r}")
    c = 1.0 - alpha
    return PiecewiseMap(
        branches=(BranchSpec(0.0, c, Affine(1.0, alpha), INCREASING),
                  BranchSpec(c, 1.0, Affine(1.0, alpha - 1.0), INCREASING)),
        exceptional_set=(c,),
        name=f"rotation(alpha={alpha!r})",
        provenance={"family": "rotation", "params": {"alpha": alpha}},
    )


def lorenz_branch_forms(c, rho_l, rho_r, u, v):
    left = PowerLaw(v=u, k=-u / c ** rho_l, rho=rho_l, pivot=c, side="left")
    right = PowerLaw(v=v, k=(1.0 - v) / (1.0 - c) ** rho_r, rho=rho_r, pivot=c, side="right")
    return left, right


def make_lorenz(c: float, rho_l: float, rho_r: float, u: float, v: float) -> PiecewiseMap:
    """Left branch ``u - (u/c^rho_l)(c-x)^rho_l`` on (0,c), right branch
    ``v + ((1-v)/(1-c)^rho_r)(x-c)^rho_r`` on (c,1); both increasing, fixing 0 and 1."""
    c, rho_l, rho_r, u, v = map(float, (c, rho_l, rho_r, u, v))
    if not (0.0 < v < c < u < 1.0):
        raise BadParam(f"need 0 < v < c < u < 1, got v={v}, c={c}, u={u}")
    if not (rho_l > 1.0 and rho_r > 1.0):
        raise BadParam("power-law exponents must exceed 1")
    left, right = lorenz_branch_forms(c, rho_l, rho_r, u, v)
    return PiecewiseMap(
        branches=(BranchSpec(0.0, c, left, INCREASING), BranchSpec(c, 1.0, right, INCREASING)),
        exceptional_set=(c,),
        name=f"lorenz(c={c!r},rho_l={rho_l!r},rho_r={rho_r!r},u={u!r},v={v!r})",
        provenance={"family": "lorenz",
                    "params": {"c": c, "rho_l": rho_l, "rho_r": rho_r, "u": u, "v": v}},
    )


def is_lorenz_like(f: PiecewiseMap) -> bool:
    return (
        f.nbranches == 2
        and len(f.exceptional_set) == 1
        and all(b.orientation == INCREASING for b in f.branches)
    )


@dataclass(frozen=True)
class GapMap:
    """A Lorenz map together with its gap interval ``J = [v0, v1]`` around ``c``."""

    map: PiecewiseMap
    c: float
    interval: tuple
    image_measure: float

    @property
    def v0(self):
        return self.interval[0]

    @property
    def v1(self):
        return self.interval[1]


def gap_interval(f: PiecewiseMap):
    """Return ``((v0, v1), Leb(f(J minus c)))`` with ``v0 = f(c+)``, ``v1 = f(c-)``."""
    if not is_lorenz_like(f):
        raise NotAGapMap(f"{f.name} is not an orientation-preserving map with one discontinuity")
    c = f.exceptional_set[0]
    v1 = f.lateral_value(c, -1)
    v0 = f.lateral_value(c, +1)
    if not (v0 < c < v1):
        raise NotAGapMap(f"critical values do not straddle c: v0={v0}, v1={v1}", (v0, v1))
    measure = (v1 - f.eval(v0)) + (f.eval(v1) - v0)
    return (v0, v1), measure


def extract_gap_map(f: PiecewiseMap) -> GapMap:
    (v0, v1), measure = gap_interval(f)
    if not measure < v1 - v0:
        raise NotAGapMap(
            f"Leb(f(J minus c))={measure:.6g} is not below |J|={v1 - v0:.6g}; f|J is not injective",
            (v0, v1), measure,
        )
    return GapMap(f, f.exceptional_set[0], (v0, v1), measure)


def rational_distance(x: float, max_den: int = 20) -> float:
    """Distance from x to the nearest p/q with q <= max_den."""
    best = np.inf
    for q in range(1, max_den + 1):
        p = round(x * q)
        best = min(best, abs(x - p / q))
    return float(best)


def _left_inverse(form, target, lo, hi, tol=1e-15):
    # monotone increasing branch: bisection for form(x) = target on (lo, hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if form.value(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def ewi_from_gap(g: GapMap, rotation: float | None = None) -> PiecewiseMap:
    """Given a gap map, build ``F = f`` on (a, 1] and ``F = f/f(a)`` on (0, a) with f(a) = f(v1)."""
    f = g.map
    left = f.branches[0]
    target = f.eval(g.v1)
    a = _left_inverse(left.form, target, 0.0, g.v0)
    fa = left.form.value(a)
    branches = (
        BranchSpec(0.0, a, Scaled(left.form, 1.0 / fa, 0.0), INCREASING),
        BranchSpec(a, left.hi, left.form, INCREASING),
        f.branches[1],
    )
    prov = {"family": "ewi", "source": f.name, "params": dict(f.provenance.get("params", {})),
            "a": a, "gap_interval": list(g.interval)}
    if rotation is not None:
        prov["rotation_estimate"] = rotation
    return PiecewiseMap(branches, (a, g.c), name=f"ewi({f.name})", provenance=prov)


def construct_ewi(c: float, rho_l: float, rho_r: float, u: float, v: float,
                  rotation_target: float = (3 - 5 ** 0.5) / 2, search_budget: int = 60,
                  v_range: tuple | None = None, n_rotation: int = 100_000,
                  min_rational_distance: float = 1e-3) -> PiecewiseMap:
    """Search the Lorenz parameter ``v`` for a gap map with rotation number far
    from low-denominator rationals, then build the two-discontinuity map.

    ``v`` is bisected toward ``rotation_target`` (the rotation number is
    monotone in ``v``); each probe costs one rotation-number estimate and the
    first acceptable probe, in search order, wins.
    """
    from .lateral import rotation_number

    lo, hi = v_range if v_range is not None else (1e-6, c - 1e-6)
    tried = []
    for _ in range(int(search_budget)):
        vv = 0.5 * (lo + hi)
        f = make_lorenz(c, rho_l, rho_r, u, vv)
        try:
            g = extract_gap_map(f)
        except NotAGapMap:
            # the gap condition fails for v far from c on this family; move toward c
            lo = vv
            continue
        rho = rotation_number(f, g.c, n_rotation)
        tried.append((vv, rho))
        if rational_distance(rho) >= min_rational_distance:
            return ewi_from_gap(g, rotation=rho)
        if rho < rotation_target:
            lo = vv
        else:
            hi = vv
    raise SearchExhausted(f"no acceptable rotation number in {search_budget} probes; tried {tried[-5:]}")


def family_map(family: str, **params) -> PiecewiseMap:
    if family == "logistic":
        return make_logistic(params["lam"])
    if family == "lorenz":
        return make_lorenz(params["c"], params["rho_l"], params["rho_r"], params["u"], params["v"])
    if family == "rotation":
        return make_rotation(params["alpha"])
    raise BadParam(f"unknown family {family!r}")


def check_family(f: PiecewiseMap, grid_n: int = 2000):
    return validate(f, grid_n)


__all__ = [
    "make_logistic", "make_lorenz", "make_rotation", "extract_gap_map", "gap_interval", "construct_ewi",
    "ewi_from_gap", "GapMap", "rational_distance",
]
