"""Pure-Python (numpy-vectorized) twins of the compiled kernels.

Batch kernels vectorize over samples, one numpy pass per map step; the lateral
orbit kernel is a scalar loop.  Status codes: 0 ok, 1 exceptional point hit,
2 left [0, 1], 3 degenerate side.
"""
import bisect
import math

import numpy as np

SLACK = 1e-12
OK, HIT, ESCAPE, DEGENERATE = 0, 1, 2, 3

# numpy's vectorized pow can differ from libm by an ulp for non-integer exponents
_libm_pow = np.frompyfunc(math.pow, 2, 1)


def _pow(a, rho):
    if float(rho).is_integer():
        return np.power(a, rho)
    return _libm_pow(a, rho).astype(float)


def _branch_values(tab, i, x):
    if tab.kind[i] == 0:
        k = int(tab.deg[i])
        h = tab.coef[i, k]
        while k > 0:
            k -= 1
            h = h * x + tab.coef[i, k]
    else:
        h = tab.pv[i] + tab.pk[i] * _pow(np.abs(x - tab.ppivot[i]), tab.prho[i])
    for j in range(int(tab.nsc[i])):
        o = tab.soff[i, j]
        h = o + tab.ssc[i, j] * (h - o)
    return h


def _scalar_value(tab, i, x):
    if tab.kind[i] == 0:
        k = int(tab.deg[i])
        h = float(tab.coef[i, k])
        while k > 0:
            k -= 1
            h = h * x + float(tab.coef[i, k])
    else:
        h = float(tab.pv[i]) + float(tab.pk[i]) * math.pow(abs(x - float(tab.ppivot[i])), float(tab.prho[i]))
    for j in range(int(tab.nsc[i])):
        o = float(tab.soff[i, j])
        h = o + float(tab.ssc[i, j]) * (h - o)
    return h


def _step(tab, x, status):
    """One step for the samples with status 0; others are left untouched."""
    act = status == OK
    xa = x[act]
    idx = np.searchsorted(tab.lo, xa, side="left") - 1
    np.maximum(idx, 0, out=idx)
    hit = (idx < len(tab.lo) - 1) & (xa == tab.hi[idx])
    h = np.empty_like(xa)
    for i in range(len(tab.lo)):
        m = idx == i
        if m.any():
            h[m] = _branch_values(tab, i, xa[m])
    st = np.zeros(len(xa), dtype=np.int8)
    low = h < 0.0
    high = h > 1.0
    st[(h < -SLACK) | (h > 1.0 + SLACK) | np.isnan(h)] = ESCAPE
    h[low & (st == OK)] = 0.0
    h[high & (st == OK)] = 1.0
    st[hit] = HIT
    h = np.where(st == OK, h, xa)
    x[act] = h
    status[act] = st


def iterate(tab, xs, n, out, status):
    x = np.array(xs, dtype=float)
    st = np.zeros(len(x), dtype=np.int8)
    for _ in range(n):
        if not (st == OK).any():
            break
        _step(tab, x, st)
    out[:] = x
    status[:] = st


def trajectories(tab, xs, n, out, status):
    x = np.array(xs, dtype=float)
    st = np.zeros(len(x), dtype=np.int8)
    out[:, 0] = x
    for k in range(n):
        _step(tab, x, st)
        out[:, k + 1] = np.where(st == OK, x, np.nan)
    status[:] = st


def omega_scan(tab, xs, burn_in, tail, ncells, offsets, occ, period, cycle, status,
               mindist, probe_lo, probe_hi, probe_count, last, period_tol):
    S = len(xs)
    x = np.array(xs, dtype=float)
    st = np.zeros(S, dtype=np.int8)
    for _ in range(burn_in):
        _step(tab, x, st)
    md = np.full(S, np.inf)
    cnt = np.zeros(S, dtype=np.int64)
    ring = np.empty((S, 128))
    pos = np.zeros(S, dtype=np.int64)
    rows = np.arange(S)
    exc = np.asarray(tab.exc)
    for k in range(tail):
        act = st == OK
        if not act.any():
            break
        r_ = rows[act]
        xa = x[act]
        for nc, off in zip(ncells, offsets):
            c = np.minimum((xa * nc).astype(np.int64), nc - 1)
            occ[r_, off + c] = 1
        if exc.size:
            md[act] = np.minimum(md[act], np.abs(xa[:, None] - exc[None, :]).min(axis=1))
        cnt[act] += (xa > probe_lo) & (xa < probe_hi)
        ring[r_, pos[act] & 127] = xa
        pos[act] += 1
        if k + 1 < tail:
            _step(tab, x, st)
    status[:] = st
    mindist[:] = md
    probe_count[:] = cnt
    last[:] = x
    period[:] = 0
    for s in range(S):
        if st[s] != OK or pos[s] < 128:
            continue
        p_ = int(pos[s])
        seq = ring[s, [(p_ - 128 + j) & 127 for j in range(128)]]
        for p in range(1, 65):
            if np.all(np.abs(seq[-64:] - seq[-64 - p:128 - p]) < period_tol):
                period[s] = p
                cycle[s, :p] = seq[128 - p:]
                break


def lateral_orbit(tab, x, side, n, coords, sides, idx):
    lo = [float(v) for v in tab.lo]
    x = float(x)
    coords[0] = x
    sides[0] = side
    length = 1
    st = OK
    for k in range(n + 1):
        if side < 0:
            i = max(bisect.bisect_left(lo, x) - 1, 0)
        else:
            i = max(bisect.bisect_right(lo, x) - 1, 0)
        idx[k] = i
        if k == n:
            break
        o = int(tab.orient[i])
        if o == 0:
            st = DEGENERATE
            break
        h = _scalar_value(tab, i, x)
        if h < 0.0:
            if h < -SLACK:
                st = ESCAPE
                break
            h = 0.0
        elif h > 1.0:
            if h > 1.0 + SLACK:
                st = ESCAPE
                break
            h = 1.0
        x = h
        side = side * o
        coords[k + 1] = x
        sides[k + 1] = side
        length += 1
    return length, st
