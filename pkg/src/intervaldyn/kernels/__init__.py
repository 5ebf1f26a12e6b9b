"""Orbit-iteration kernels with a compiled core and a numpy fallback.

The Cython extension ``_ckernels`` is used when it imports; otherwise the
numpy implementation in ``_pykernels`` takes over.  ``INTERVALDYN_BACKEND=python``
forces the fallback.  Batch kernels split their samples into contiguous
chunks, one per worker thread; each sample is independent, so the result does
not depend on the thread count.
"""
from __future__ import annotations

import contextlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

OK, HIT, ESCAPE, DEGENERATE = 0, 1, 2, 3
STATUS_NAMES = {OK: "ok", HIT: "exceptional_point", ESCAPE: "range_escape", DEGENERATE: "degenerate_side"}

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active = "compiled" if _ckernels is not None and os.environ.get("INTERVALDYN_BACKEND") != "python" else "python"


def backend_name() -> str:
    return _active


def available_backends() -> list:
    return sorted(_BACKENDS)


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    _active = name


@contextlib.contextmanager
def use_backend(name: str):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def _impl():
    return _BACKENDS[_active]


def resolve_threads(threads=None) -> int:
    if threads is None:
        threads = int(os.environ.get("INTERVALDYN_THREADS", "1") or 1)
    return max(int(threads), 1)


@dataclass(frozen=True, eq=False)
class MapTable:
    """Flat arrays describing a validated map."""

    lo: np.ndarray
    hi: np.ndarray
    kind: np.ndarray
    coef: np.ndarray
    deg: np.ndarray
    pv: np.ndarray
    pk: np.ndarray
    prho: np.ndarray
    ppivot: np.ndarray
    nsc: np.ndarray
    soff: np.ndarray
    ssc: np.ndarray
    orient: np.ndarray
    exc: np.ndarray

    @classmethod
    def from_map(cls, f) -> "MapTable":
        from ..maps import Affine, Polynomial, PowerLaw, _check_tiling, unwrap

        problems = _check_tiling(f)
        if problems:
            raise ValueError("map does not tile [0,1]: " + "; ".join(problems))
        B = f.nbranches
        bases, chains = zip(*(unwrap(b.form) for b in f.branches))
        D = max((len(b.coeffs) if isinstance(b, Polynomial) else 2) for b in bases)
        K = max(max(len(c) for c in chains), 1)
        kind = np.zeros(B, dtype=np.int32)
        coef = np.zeros((B, D))
        deg = np.zeros(B, dtype=np.int32)
        pv, pk, prho, ppivot = (np.zeros(B) for _ in range(4))
        nsc = np.zeros(B, dtype=np.int32)
        soff = np.zeros((B, K))
        ssc = np.zeros((B, K))
        orient = np.zeros(B, dtype=np.int32)
        for i, (br, base, chain) in enumerate(zip(f.branches, bases, chains)):
            if isinstance(base, Affine):
                coef[i, :2] = (base.b, base.a)
                deg[i] = 1
            elif isinstance(base, Polynomial):
                coef[i, : len(base.coeffs)] = base.coeffs
                deg[i] = len(base.coeffs) - 1
            elif isinstance(base, PowerLaw):
                kind[i] = 1
                pv[i], pk[i], prho[i], ppivot[i] = base.v, base.k, base.rho, base.pivot
            else:  # pragma: no cover
                raise TypeError(f"unsupported form {base!r}")
            nsc[i] = len(chain)
            for j, (off, sc) in enumerate(chain):
                soff[i, j] = off
                ssc[i, j] = sc
            orient[i] = 0 if br.form.is_constant() else br.sign
        return cls(
            lo=np.array([b.lo for b in f.branches]),
            hi=np.array([b.hi for b in f.branches]),
            kind=kind, coef=coef, deg=deg, pv=pv, pk=pk, prho=prho, ppivot=ppivot,
            nsc=nsc, soff=soff, ssc=ssc, orient=orient,
            exc=np.array(f.exceptional_set, dtype=float),
        )


def _chunks(n, k):
    edges = np.linspace(0, n, min(k, max(n, 1)) + 1).astype(int)
    return [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_chunked(fn, n, threads):
    parts = _chunks(n, resolve_threads(threads))
    if len(parts) <= 1:
        for a, b in parts:
            fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        list(pool.map(lambda ab: fn(*ab), parts))


def iterate(table: MapTable, xs, n: int, threads=None):
    """Return (f^n(xs), status) for a batch of starting points."""
    xs = np.ascontiguousarray(xs, dtype=float).reshape(-1)
    out = np.empty_like(xs)
    status = np.zeros(len(xs), dtype=np.int8)
    impl = _impl()

    def run(a, b):
        impl.iterate(table, xs[a:b], int(n), out[a:b], status[a:b])

    _run_chunked(run, len(xs), threads)
    return out, status


def trajectories(table: MapTable, xs, n: int, threads=None):
    """Full orbits x_0..x_n per starting point (NaN after an early stop)."""
    xs = np.ascontiguousarray(xs, dtype=float).reshape(-1)
    out = np.empty((len(xs), int(n) + 1))
    status = np.zeros(len(xs), dtype=np.int8)
    impl = _impl()

    def run(a, b):
        impl.trajectories(table, xs[a:b], int(n), out[a:b], status[a:b])

    _run_chunked(run, len(xs), threads)
    return out, status


def cells_for(resolution: float) -> int:
    """Number of equal cells of width ~resolution tiling [0,1]."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    return max(int(np.ceil(1.0 / resolution - 1e-9)), 1)


def omega_scan(table: MapTable, xs, burn_in: int, tail: int, resolutions, probe=(0.0, 0.0),
               period_tol: float = 1e-9, threads=None) -> dict:
    xs = np.ascontiguousarray(xs, dtype=float).reshape(-1)
    S = len(xs)
    ncells = np.array([cells_for(r) for r in resolutions], dtype=np.int_)
    offsets = np.concatenate([[0], np.cumsum(ncells)[:-1]]).astype(np.int_)
    occ = np.zeros((S, int(ncells.sum())), dtype=np.uint8)
    period = np.zeros(S, dtype=np.int32)
    cycle = np.full((S, 64), np.nan)
    status = np.zeros(S, dtype=np.int8)
    mindist = np.full(S, np.inf)
    probe_count = np.zeros(S, dtype=np.int_)
    last = np.empty(S)
    impl = _impl()

    def run(a, b):
        impl.omega_scan(table, xs[a:b], int(burn_in), int(tail), ncells, offsets, occ[a:b],
                        period[a:b], cycle[a:b], status[a:b], mindist[a:b],
                        float(probe[0]), float(probe[1]), probe_count[a:b], last[a:b],
                        float(period_tol))

    _run_chunked(run, S, threads)
    occupancy = [occ[:, o:o + n].astype(bool) for o, n in zip(offsets, ncells)]
    return {
        "occupancy": occupancy,
        "ncells": ncells,
        "period": period,
        "cycle": cycle,
        "status": status,
        "mindist": mindist,
        "probe_count": probe_count,
        "last": last,
    }


def lateral_orbit(table: MapTable, x: float, side: int, n: int):
    """Return (coords, sides, branch_idx, status) for the lateral orbit of (x, side)."""
    n = int(n)
    coords = np.empty(n + 1)
    sides = np.zeros(n + 1, dtype=np.int8)
    idx = np.zeros(n + 1, dtype=np.int32)
    length, st = _impl().lateral_orbit(table, float(x), int(side), n, coords, sides, idx)
    return coords[:length], sides[:length], idx[:length], int(st)
