"""Local modifications of a map on an interval.

Each surgery keeps every branch form outside the modified interval untouched
(the same form objects), so orbits that avoid the interval are reproduced
bit-for-bit.  Ends of the modified interval become exceptional points.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadParam, DegenerateScale, HypothesisFailed
from .lateral import LateralState, detect_periodic_like
from .maps import BranchSpec, PiecewiseMap, Scaled, is_unimodal
from .zoo import is_lorenz_like

SCALE_FLOOR = 1e-12


@dataclass
class SurgeryRecord:
    kind: str  # pit, flatten_unimodal, lorenz_rescale
    source: str
    modified_interval: tuple
    scale_factors: list
    result: PiecewiseMap
    method: str = "analytic"
    flags: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {
            "kind": self.kind,
            "interval": list(self.modified_interval),
            "factors": list(self.scale_factors),
        }


def split_branches(f: PiecewiseMap, points) -> list:
    """Branches of f cut at the given points (points already on a boundary are ignored)."""
    out = list(f.branches)
    for p in sorted(set(points)):
        nxt = []
        for b in out:
            if b.lo < p < b.hi:
                nxt.append(BranchSpec(b.lo, p, b.form, b.orientation))
                nxt.append(BranchSpec(p, b.hi, b.form, b.orientation))
            else:
                nxt.append(b)
        out = nxt
    return out


def _rescaled(branches, lo, hi, scale, offset):
    out = []
    for b in branches:
        if lo <= b.lo and b.hi <= hi:
            # positive scale keeps the orientation
            out.append(BranchSpec(b.lo, b.hi, Scaled(b.form, scale, offset), b.orientation))
        else:
            out.append(b)
    return out


def _exceptional(f, extra):
    pts = set(f.exceptional_set) | {p for p in extra if 0.0 < p < 1.0}
    return tuple(sorted(pts))


def _provenance(kind, f, interval, factors, **extra):
    prov = {
        "surgery": kind,
        "source": f.name,
        "source_provenance": dict(f.provenance),
        "interval": list(interval),
        "factors": list(factors),
    }
    prov.update(extra)
    return prov


def pit_surgery(f: PiecewiseMap, interval, q: float) -> SurgeryRecord:
    """``g = q + sigma*(f - q)`` on ``I``, ``sigma = 1/(2 sup|f'|)``, f elsewhere."""
    t, c = map(float, interval)
    if not 0.0 < t < c < 1.0:
        raise BadParam(f"interval must satisfy 0 < t < c < 1, got {interval!r}")
    if not t < q < c:
        raise BadParam(f"q={q!r} is not inside ({t}, {c})")
    sup = f.sup_abs_derivative()  # UnboundedDerivative propagates
    if not sup > 0:
        raise DegenerateScale("sup|f'| is zero")
    sigma = 1.0 / (2.0 * sup)
    branches = _rescaled(split_branches(f, (t, c)), t, c, sigma, float(q))
    g = PiecewiseMap(
        branches, _exceptional(f, (t, c)), name=f"pit({f.name})",
        provenance=_provenance("pit", f, (t, c), [sigma], q=float(q), sigma_method="analytic"),
    )
    rec = SurgeryRecord("pit", f.name, (t, c), [sigma], g, method="analytic")
    rec.flags["maps_into_interval"] = _maps_into(g, t, c)
    return rec


def _maps_into(g, lo, hi, n=1001):
    xs = np.linspace(lo, hi, n + 2)[1:-1]
    xs = xs[~np.isin(xs, g.exceptional_set)]
    ys = np.array([g.eval(float(x)) for x in xs])
    return bool(np.all((ys >= lo) & (ys <= hi)))


def _solve_monotone(form, target, lo, hi, increasing, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if (form.value(mid) < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def flatten_unimodal(f: PiecewiseMap, p: float, max_period: int = 64) -> SurgeryRecord:
    """Rescale f on ``J = f^-1((p_hat, 1])`` so that ``g(c) = 1``.

    ``p`` is refined to the periodic orbit it approximates; ``p_hat`` is the
    largest point of that orbit and ``lambda = (1 - f(p))/(f(c) - f(p))``.
    """
    if not is_unimodal(f):
        raise HypothesisFailed(f"{f.name} is not unimodal")
    c = f.exceptional_set[0]
    rec = detect_periodic_like(f, LateralState(float(p), +1), max_period=max_period, tol_p=1e-9)
    if not rec:
        raise HypothesisFailed(f"p={p!r} is not detected as a periodic point")
    p = rec.point.coord
    p_hat = max(s.coord for s in rec.orbit)
    fc = f.lateral_value(c, -1)
    fp = f.eval(p)
    if fc - fp < SCALE_FLOOR:
        raise DegenerateScale(f"f(c) - f(p) = {fc - fp:.3g}")
    if not fc > p_hat:
        raise HypothesisFailed(f"f(c)={fc} does not exceed p_hat={p_hat}; J is empty")
    bl, br = f.branches[f.lateral_branch_index(c, -1)], f.branches[f.lateral_branch_index(c, +1)]
    ja = _solve_monotone(bl.form, p_hat, bl.lo, c, bl.sign > 0)
    jb = _solve_monotone(br.form, p_hat, c, br.hi, br.sign > 0)
    lam = (1.0 - fp) / (fc - fp)
    branches = _rescaled(split_branches(f, (ja, jb)), ja, jb, lam, fp)
    g = PiecewiseMap(
        branches, _exceptional(f, (ja, jb)), name=f"flatten({f.name})",
        provenance=_provenance("flatten_unimodal", f, (ja, jb), [lam], p=p, p_hat=p_hat,
                               period=rec.period),
    )
    return SurgeryRecord("flatten_unimodal", f.name, (ja, jb), [lam], g,
                         flags={"p": p, "p_hat": p_hat, "period": rec.period})


def lorenz_rescale(f: PiecewiseMap, a: float, b: float, c: float | None = None) -> SurgeryRecord:
    """Stretch the two halves of ``(a, b)`` so that ``g((a, c)) = (f(a), 1)`` and
    ``g((c, b)) = (0, f(b))``.

    Both halves are rescaled about their outer anchors: ``lambda_a`` about
    ``f(a)`` on ``(a, c)`` and ``lambda_b`` about ``f(b)`` on ``(c, b)``.
    """
    if not is_lorenz_like(f):
        raise HypothesisFailed(f"{f.name} is not a Lorenz-like map")
    c0 = f.exceptional_set[0]
    if c is None:
        c = c0
    if c != c0:
        raise BadParam(f"c={c!r} is not the discontinuity {c0!r}")
    a, b = float(a), float(b)
    if not 0.0 < a < c < b < 1.0:
        raise BadParam(f"need 0 < a < c < b < 1, got a={a}, c={c}, b={b}")
    fa, fb = f.eval(a), f.eval(b)
    fcm, fcp = f.lateral_value(c, -1), f.lateral_value(c, +1)
    den_a, den_b = fcm - fa, fb - fcp
    if den_a < SCALE_FLOOR or den_b < SCALE_FLOOR:
        raise DegenerateScale(f"|f((a,c))|={den_a:.3g}, |f((c,b))|={den_b:.3g}")
    lam_a = (1.0 - fa) / den_a
    lam_b = fb / den_b
    branches = split_branches(f, (a, b))
    branches = _rescaled(branches, a, c, lam_a, fa)
    branches = _rescaled(branches, c, b, lam_b, fb)
    g = PiecewiseMap(
        branches, _exceptional(f, (a, b)), name=f"lorenz_rescale({f.name})",
        provenance=_provenance("lorenz_rescale", f, (a, b), [lam_a, lam_b], c=c),
    )
    return SurgeryRecord("lorenz_rescale", f.name, (a, b), [lam_a, lam_b], g)


SURGERIES = {
    "pit": pit_surgery,
    "flatten_unimodal": flatten_unimodal,
    "lorenz_rescale": lorenz_rescale,
}


def provenance_chain(f: PiecewiseMap) -> list:
    """Surgery kinds applied to produce f, oldest first."""
    chain = []
    prov = f.provenance
    while prov and "surgery" in prov:
        chain.append(prov["surgery"])
        prov = prov.get("source_provenance", {})
    return chain[::-1]
