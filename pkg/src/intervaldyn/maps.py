"""Piecewise-smooth interval maps with a finite exceptional set.

A map is an ordered tuple of :class:`BranchSpec` whose closures tile
``[0, 1]``; the interior branch boundaries form the exceptional set where the
map is left undefined.  Branch formulas come from a closed algebra
(:class:`Affine`, :class:`Polynomial`, :class:`PowerLaw`, :class:`Scaled`) so
that first, second and third derivatives are exact and maps serialize
bit-exactly to JSON.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import (
    CriticalPoint,
    ExceptionalPoint,
    OutOfDomain,
    RangeViolation,
    SpecFormatError,
    UnboundedDerivative,
)

#: values within this distance outside [0, 1] are treated as round-off and clamped
RANGE_SLACK = 1e-12

INCREASING = "increasing"
DECREASING = "decreasing"


# ---------------------------------------------------------------------------
# branch forms


@dataclass(frozen=True)
class Affine:
    """x -> a*x + b"""

    a: float
    b: float

    def value(self, x):
        return self.a * x + self.b

    def deriv(self, x, order):
        if order == 1:
            return self.a + 0.0 * x
        return 0.0 * x

    def is_constant(self):
        return self.a == 0.0

    def sup_abs_derivative(self, lo, hi):
        return abs(self.a)

    def to_json(self):
        return {"type": "affine", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with coefficients in ascending order, evaluated by Horner's rule."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")

    def value(self, x):
        c = self.coeffs
        acc = c[-1]
        for k in range(len(c) - 2, -1, -1):
            acc = acc * x + c[k]
        return acc

    def _dcoeffs(self, order):
        c = list(self.coeffs)
        for _ in range(order):
            c = [k * c[k] for k in range(1, len(c))] or [0.0]
        return c

    def deriv(self, x, order):
        c = self._dcoeffs(order)
        acc = c[-1]
        for k in range(len(c) - 2, -1, -1):
            acc = acc * x + c[k]
        return acc + 0.0 * x

    def is_constant(self):
        return all(c == 0.0 for c in self.coeffs[1:])

    def sup_abs_derivative(self, lo, hi):
        d1 = np.polynomial.Polynomial(self._dcoeffs(1))
        candidates = [lo, hi]
        d2 = d1.deriv()
        if d2.degree() >= 1 or np.any(d2.coef != 0):
            for r in d2.roots():
                if abs(r.imag) < 1e-14 and lo < r.real < hi:
                    candidates.append(r.real)
        return float(max(abs(d1(x)) for x in candidates))

    def to_json(self):
        return {"type": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class PowerLaw:
    """x -> v + k*|x - pivot|**rho, on one side of ``pivot``.

    ``side`` is ``"left"`` when the branch lives in ``x <= pivot`` and
    ``"right"`` otherwise; it fixes the sign of odd derivatives.
    """

    v: float
    k: float
    rho: float
    pivot: float
    side: str

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"power_law needs rho > 0, got {self.rho!r}")
        if self.side not in ("left", "right"):
            raise ValueError(f"power_law side must be 'left' or 'right', got {self.side!r}")

    def value(self, x):
        return self.v + self.k * abs(x - self.pivot) ** self.rho

    def deriv(self, x, order):
        r, k = self.rho, self.k
        d = abs(x - self.pivot)
        s = -1.0 if self.side == "left" else 1.0
        if order == 1:
            return s * k * r * d ** (r - 1.0)
        if order == 2:
            return k * r * (r - 1.0) * d ** (r - 2.0)
        return s * k * r * (r - 1.0) * (r - 2.0) * d ** (r - 3.0)

    def is_constant(self):
        return self.k == 0.0

    def sup_abs_derivative(self, lo, hi):
        dists = sorted((abs(lo - self.pivot), abs(hi - self.pivot)))
        if self.rho == 1.0:
            return abs(self.k)
        if self.rho > 1.0:
            return abs(self.k) * self.rho * dists[1] ** (self.rho - 1.0)
        if dists[0] == 0.0:
            raise UnboundedDerivative(
                f"power_law with rho={self.rho} has unbounded derivative at its pivot"
            )
        return abs(self.k) * self.rho * dists[0] ** (self.rho - 1.0)

    def to_json(self):
        return {"type": "power_law", "v": self.v, "k": self.k, "rho": self.rho,
                "pivot": self.pivot, "side": self.side}


@dataclass(frozen=True)
class Scaled:
    """x -> offset + scale*(inner(x) - offset)

    An affine rescale of ``inner`` about the anchor value ``offset``; the
    anchor is a fixed point of the rescale.
    """

    inner: Any
    scale: float
    offset: float

    def value(self, x):
        return self.offset + self.scale * (self.inner.value(x) - self.offset)

    def deriv(self, x, order):
        return self.scale * self.inner.deriv(x, order)

    def is_constant(self):
        return self.scale == 0.0 or self.inner.is_constant()

    def sup_abs_derivative(self, lo, hi):
        return abs(self.scale) * self.inner.sup_abs_derivative(lo, hi)

    def to_json(self):
        return {"type": "scaled", "inner": self.inner.to_json(), "scale": self.scale,
                "offset": self.offset}


def form_from_json(d: Mapping) -> Any:
    try:
        kind = d["type"]
        if kind == "affine":
            return Affine(float(d["a"]), float(d["b"]))
        if kind == "polynomial":
            return Polynomial(tuple(d["coeffs"]))
        if kind == "power_law":
            return PowerLaw(float(d["v"]), float(d["k"]), float(d["rho"]),
                            float(d["pivot"]), str(d["side"]))
        if kind == "scaled":
            return Scaled(form_from_json(d["inner"]), float(d["scale"]), float(d["offset"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecFormatError(f"bad branch form {d!r}: {exc}") from exc
    raise SpecFormatError(f"unknown branch form type {kind!r}")


def unwrap(form):
    """Split a form into its base form and the list of (offset, scale) rescales,
    innermost first."""
    chain = []
    while isinstance(form, Scaled):
        chain.append((form.offset, form.scale))
        form = form.inner
    chain.reverse()
    return form, chain


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class BranchSpec:
    lo: float
    hi: float
    form: Any
    orientation: str = INCREASING

    def __post_init__(self):
        if self.orientation not in (INCREASING, DECREASING):
            raise ValueError(f"orientation must be increasing/decreasing, got {self.orientation!r}")

    @property
    def sign(self) -> int:
        return 1 if self.orientation == INCREASING else -1

    def contains(self, x) -> bool:
        return self.lo < x < self.hi

    def to_json(self):
        return {"lo": self.lo, "hi": self.hi, "form": self.form.to_json(),
                "orientation": self.orientation}


@dataclass(frozen=True, eq=False)
class PiecewiseMap:
    """Map ``[0,1] minus exceptional_set -> [0,1]``.

    Construction only checks what lookups need (branches sorted by ``lo``);
    tiling, range and Schwarzian sign are reported by :func:`validate`.
    """

    branches: tuple
    exceptional_set: tuple
    name: str = "map"
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "exceptional_set", tuple(float(c) for c in self.exceptional_set))
        object.__setattr__(self, "_los", [b.lo for b in self.branches])
        if not self.branches:
            raise ValueError("a map needs at least one branch")
        if any(a.lo > b.lo for a, b in zip(self.branches, self.branches[1:])):
            raise ValueError("branches must be sorted by lo")

    # -- lookup

    def branch_index(self, x) -> int:
        """Index of the branch whose open domain (or closure, at 0 and 1) holds x."""
        if not (0.0 <= x <= 1.0):
            raise OutOfDomain(f"x={x!r} outside [0,1]")
        if x in self.exceptional_set:
            raise ExceptionalPoint(x)
        i = max(bisect.bisect_left(self._los, x) - 1, 0)
        b = self.branches[i]
        if not (b.lo <= x <= b.hi):
            raise OutOfDomain(f"x={x!r} is not covered by any branch")
        return i

    def lateral_branch_index(self, x, side: int) -> int:
        """Branch approached by x from the left (side=-1) or from the right (side=+1)."""
        if not (0.0 <= x <= 1.0):
            raise OutOfDomain(f"x={x!r} outside [0,1]")
        if side < 0:
            if x == 0.0:
                raise OutOfDomain("no left side at 0")
            i = bisect.bisect_left(self._los, x) - 1
        else:
            if x == 1.0:
                raise OutOfDomain("no right side at 1")
            i = bisect.bisect_right(self._los, x) - 1
        return max(i, 0)

    @property
    def nbranches(self) -> int:
        return len(self.branches)

    # -- evaluation

    def eval(self, x) -> float:
        x = float(x)
        b = self.branches[self.branch_index(x)]
        return clamp_range(x, b.form.value(x))

    __call__ = eval

    def lateral_value(self, x, side: int) -> float:
        """One-sided limit of f at x, from the closure of the adjacent branch."""
        b = self.branches[self.lateral_branch_index(x, side)]
        return clamp_range(x, b.form.value(float(x)))

    def derivative(self, x, order: int = 1) -> float:
        if order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        x = float(x)
        b = self.branches[self.branch_index(x)]
        return float(b.form.deriv(x, order))

    def lateral_derivative(self, x, side: int, order: int = 1) -> float:
        b = self.branches[self.lateral_branch_index(x, side)]
        return float(b.form.deriv(float(x), order))

    def schwarzian(self, x, threshold: float = 1e-12) -> float:
        d1 = self.derivative(x, 1)
        if abs(d1) < threshold:
            raise CriticalPoint(f"|f'({x!r})|={abs(d1):.3g} below {threshold}")
        d2 = self.derivative(x, 2)
        d3 = self.derivative(x, 3)
        return schwarzian_from_derivatives(d1, d2, d3)

    def sup_abs_derivative(self) -> float:
        """Analytic sup of |f'| over the map's domain."""
        return max(b.form.sup_abs_derivative(b.lo, b.hi) for b in self.branches)

    # -- serialization

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "exceptional_set": list(self.exceptional_set),
            "branches": [b.to_json() for b in self.branches],
            "provenance": _plain(self.provenance),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_dict(cls, d: Mapping) -> "PiecewiseMap":
        try:
            branches = [
                BranchSpec(float(b["lo"]), float(b["hi"]), form_from_json(b["form"]),
                           b.get("orientation", INCREASING))
                for b in d["branches"]
            ]
            branches.sort(key=lambda b: b.lo)
            return cls(tuple(branches), tuple(float(c) for c in d.get("exceptional_set", [])),
                       name=str(d.get("name", "map")), provenance=dict(d.get("provenance") or {}))
        except SpecFormatError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise SpecFormatError(f"malformed map specification: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "PiecewiseMap":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"not JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise SpecFormatError("map specification must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "PiecewiseMap":
        with open(path) as fh:
            return cls.loads(fh.read())

    def table(self):
        """Flat array form used by the iteration kernels (cached)."""
        t = self.__dict__.get("_table")
        if t is None:
            from .kernels import MapTable

            t = MapTable.from_map(self)
            object.__setattr__(self, "_table", t)
        return t

    def __repr__(self):
        return f"PiecewiseMap(name={self.name!r}, exceptional_set={list(self.exceptional_set)})"


def _plain(obj):
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def clamp_range(x, value):
    if value < 0.0:
        if value < -RANGE_SLACK:
            raise RangeViolation(x, value)
        return 0.0
    if value > 1.0:
        if value > 1.0 + RANGE_SLACK:
            raise RangeViolation(x, value)
        return 1.0
    return value


def schwarzian_from_derivatives(d1, d2, d3):
    return d3 / d1 - 1.5 * (d2 / d1) ** 2


def is_unimodal(f: PiecewiseMap) -> bool:
    return (
        f.nbranches == 2
        and len(f.exceptional_set) == 1
        and f.branches[0].sign != f.branches[1].sign
    )


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    name: str
    grid_n: int
    tiling: list = field(default_factory=list)
    range: list = field(default_factory=list)
    orientation: list = field(default_factory=list)
    schwarzian_nonnegative: list = field(default_factory=list)
    repelling_fixed_points: list = field(default_factory=list)

    @property
    def tiling_ok(self):
        return not self.tiling

    @property
    def range_ok(self):
        return not self.range

    @property
    def structure_ok(self):
        return not (self.tiling or self.range or self.orientation)

    @property
    def schwarzian_negative(self):
        return not self.schwarzian_nonnegative

    @property
    def clean(self):
        return self.structure_ok and self.schwarzian_negative

    def to_dict(self, max_items: int = 20):
        return {
            "name": self.name,
            "grid_n": self.grid_n,
            "tiling": self.tiling,
            "range": [list(v) for v in self.range[:max_items]],
            "range_count": len(self.range),
            "orientation": [list(v) for v in self.orientation[:max_items]],
            "orientation_count": len(self.orientation),
            "schwarzian_nonnegative": [list(v) for v in self.schwarzian_nonnegative[:max_items]],
            "schwarzian_nonnegative_count": len(self.schwarzian_nonnegative),
            "repelling_fixed_points": self.repelling_fixed_points,
            "clean": self.clean,
        }


def _check_tiling(f: PiecewiseMap) -> list:
    problems = []
    bs = f.branches
    exc = list(f.exceptional_set)
    for i, b in enumerate(bs):
        if not (0.0 <= b.lo < b.hi <= 1.0):
            problems.append(f"branch {i} has bad domain ({b.lo!r}, {b.hi!r})")
        if isinstance(b.form, PowerLaw) or (isinstance(b.form, Scaled) and isinstance(unwrap(b.form)[0], PowerLaw)):
            base = unwrap(b.form)[0]
            if base.side == "left" and b.hi > base.pivot or base.side == "right" and b.lo < base.pivot:
                problems.append(f"branch {i} domain crosses the power_law pivot {base.pivot!r}")
    if bs[0].lo != 0.0:
        problems.append(f"first branch starts at {bs[0].lo!r}, not 0")
    if bs[-1].hi != 1.0:
        problems.append(f"last branch ends at {bs[-1].hi!r}, not 1")
    for i, (a, b) in enumerate(zip(bs, bs[1:])):
        if a.hi > b.lo:
            problems.append(f"branches {i} and {i + 1} overlap on ({b.lo!r}, {min(a.hi, b.hi)!r})")
        elif a.hi < b.lo:
            problems.append(f"gap between branches {i} and {i + 1}: ({a.hi!r}, {b.lo!r})")
    if any(not (0.0 < c < 1.0) for c in exc):
        problems.append("exceptional_set must lie strictly inside (0,1)")
    if any(c0 >= c1 for c0, c1 in zip(exc, exc[1:])):
        problems.append("exceptional_set must be strictly sorted")
    boundaries = sorted({b.lo for b in bs[1:]} | {b.hi for b in bs[:-1]})
    if boundaries != sorted(set(exc)):
        problems.append(f"interior branch boundaries {boundaries} differ from exceptional_set {exc}")
    return problems


def validate(f: PiecewiseMap, grid_n: int = 10_000, threshold: float = 1e-12) -> ValidationReport:
    """Grid-based (non-rigorous) check of the standing hypotheses.

    ``grid_n`` points are placed at cell midpoints of every branch domain.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    rep = ValidationReport(name=f.name, grid_n=grid_n)
    rep.tiling = _check_tiling(f)
    u = (np.arange(grid_n) + 0.5) / grid_n
    for i, b in enumerate(f.branches):
        if not b.lo < b.hi:
            continue
        xs = b.lo + (b.hi - b.lo) * u
        with np.errstate(all="ignore"):
            vals = np.asarray(b.form.value(xs), dtype=float)
            ends = [b.form.value(b.lo), b.form.value(b.hi)]
            d1 = np.asarray(b.form.deriv(xs, 1), dtype=float)
            d2 = np.asarray(b.form.deriv(xs, 2), dtype=float)
            d3 = np.asarray(b.form.deriv(xs, 3), dtype=float)
        bad = (vals < -RANGE_SLACK) | (vals > 1 + RANGE_SLACK) | ~np.isfinite(vals)
        rep.range.extend((float(x), float(v)) for x, v in zip(xs[bad], vals[bad]))
        for x, v in zip((b.lo, b.hi), ends):
            if not (-RANGE_SLACK <= v <= 1 + RANGE_SLACK):
                rep.range.append((float(x), float(v)))
        wrong = np.sign(d1) != b.sign
        rep.orientation.extend((i, float(x), float(d)) for x, d in zip(xs[wrong], d1[wrong]))
        ok = np.abs(d1) >= threshold
        with np.errstate(all="ignore"):
            s = np.where(ok, d3 / np.where(ok, d1, 1.0) - 1.5 * (d2 / np.where(ok, d1, 1.0)) ** 2, -np.inf)
        nonneg = ok & ~(s < 0)
        rep.schwarzian_nonnegative.extend((float(x), float(v)) for x, v in zip(xs[nonneg], s[nonneg]))
        # interior fixed points: sign changes of f(x) - x on the grid, refined by bisection
        g = vals - xs
        for j in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
            lo, hi = float(xs[j]), float(xs[j + 1])
            glo = b.form.value(lo) - lo
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                gm = b.form.value(mid) - mid
                if (gm < 0) == (glo < 0):
                    lo, glo = mid, gm
                else:
                    hi = mid
            p = 0.5 * (lo + hi)
            mult = abs(float(b.form.deriv(p, 1)))
            if mult > 1.0 and 0.0 < p < 1.0:
                rep.repelling_fixed_points.append({"x": p, "multiplier": mult, "branch": i})
    return rep


def load_map(path) -> PiecewiseMap:
    return PiecewiseMap.load(path)

