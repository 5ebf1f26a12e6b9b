# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled orbit kernels.

Every function mirrors one in ``_pykernels`` and must produce the same
results; branch arithmetic follows the operation order of the Python branch
forms exactly (Horner, then the rescale chain innermost first).
"""
from libc.math cimport pow, fabs, INFINITY, NAN

cdef double SLACK = 1e-12

# status codes (shared with the Python fallback)
cdef enum:
    OK = 0
    HIT = 1
    ESCAPE = 2
    DEGENERATE = 3


cdef struct Tab:
    int B
    int D
    int K
    int E
    const double* lo
    const double* hi
    const int* kind
    const double* coef
    const int* deg
    const double* pv
    const double* pk
    const double* prho
    const double* ppivot
    const int* nsc
    const double* soff
    const double* ssc
    const int* orient
    const double* exc


cdef class _TabHolder:
    # keeps the memoryviews alive while the struct points into them
    cdef const double[::1] lo, hi, coef, pv, pk, prho, ppivot, soff, ssc, exc
    cdef const int[::1] kind, deg, nsc, orient
    cdef Tab t

    def __init__(self, tab):
        self.lo = tab.lo
        self.hi = tab.hi
        self.kind = tab.kind
        self.coef = tab.coef.reshape(-1)
        self.deg = tab.deg
        self.pv = tab.pv
        self.pk = tab.pk
        self.prho = tab.prho
        self.ppivot = tab.ppivot
        self.nsc = tab.nsc
        self.soff = tab.soff.reshape(-1)
        self.ssc = tab.ssc.reshape(-1)
        self.orient = tab.orient
        self.t.B = tab.lo.shape[0]
        self.t.D = tab.coef.shape[1]
        self.t.K = tab.soff.shape[1]
        self.t.E = tab.exc.shape[0]
        self.exc = tab.exc if tab.exc.shape[0] else _one_nan
        self.t.lo = &self.lo[0]
        self.t.hi = &self.hi[0]
        self.t.kind = &self.kind[0]
        self.t.coef = &self.coef[0]
        self.t.deg = &self.deg[0]
        self.t.pv = &self.pv[0]
        self.t.pk = &self.pk[0]
        self.t.prho = &self.prho[0]
        self.t.ppivot = &self.ppivot[0]
        self.t.nsc = &self.nsc[0]
        self.t.soff = &self.soff[0]
        self.t.ssc = &self.ssc[0]
        self.t.orient = &self.orient[0]
        self.t.exc = &self.exc[0]


import numpy as _np
_one_nan = _np.array([_np.nan])


cdef inline int find_left(const Tab* t, double x) noexcept nogil:
    # largest i with lo[i] < x (0 if none): the branch whose closure holds x from the left
    cdef int a = 0, b = t.B, m
    while a < b:
        m = (a + b) >> 1
        if t.lo[m] < x:
            a = m + 1
        else:
            b = m
    return a - 1 if a > 0 else 0


cdef inline int find_right(const Tab* t, double x) noexcept nogil:
    # largest i with lo[i] <= x
    cdef int a = 0, b = t.B, m
    while a < b:
        m = (a + b) >> 1
        if t.lo[m] <= x:
            a = m + 1
        else:
            b = m
    return a - 1 if a > 0 else 0


cdef inline double branch_value(const Tab* t, int i, double x) noexcept nogil:
    cdef double h, o
    cdef int k, j
    if t.kind[i] == 0:
        k = t.deg[i]
        h = t.coef[i * t.D + k]
        while k > 0:
            k -= 1
            h = h * x + t.coef[i * t.D + k]
    else:
        h = t.pv[i] + t.pk[i] * pow(fabs(x - t.ppivot[i]), t.prho[i])
    for j in range(t.nsc[i]):
        o = t.soff[i * t.K + j]
        h = o + t.ssc[i * t.K + j] * (h - o)
    return h


cdef inline int clamp(double* h) noexcept nogil:
    if h[0] < 0.0:
        if h[0] < -SLACK:
            return ESCAPE
        h[0] = 0.0
    elif h[0] > 1.0:
        if h[0] > 1.0 + SLACK:
            return ESCAPE
        h[0] = 1.0
    elif h[0] != h[0]:
        return ESCAPE
    return OK


cdef inline int real_step(const Tab* t, double* x) noexcept nogil:
    cdef int i = find_left(t, x[0])
    if i < t.B - 1 and x[0] == t.hi[i]:
        return HIT
    x[0] = branch_value(t, i, x[0])
    return clamp(x)


def iterate(tab, double[::1] xs, long n, double[::1] out, signed char[::1] status):
    """out[s] = f^n(xs[s]); status[s] != 0 when the orbit stopped early."""
    cdef _TabHolder th = _TabHolder(tab)
    cdef const Tab* t = &th.t
    cdef Py_ssize_t s, S = xs.shape[0]
    cdef long k
    cdef double x
    cdef int st
    with nogil:
        for s in range(S):
            x = xs[s]
            st = OK
            for k in range(n):
                st = real_step(t, &x)
                if st != OK:
                    break
            out[s] = x
            status[s] = st


def trajectories(tab, double[::1] xs, long n, double[:, ::1] out, signed char[::1] status):
    cdef _TabHolder th = _TabHolder(tab)
    cdef const Tab* t = &th.t
    cdef Py_ssize_t s, S = xs.shape[0]
    cdef long k, j
    cdef double x
    cdef int st
    with nogil:
        for s in range(S):
            x = xs[s]
            out[s, 0] = x
            st = OK
            for k in range(n):
                st = real_step(t, &x)
                if st != OK:
                    for j in range(k + 1, n + 1):
                        out[s, j] = NAN
                    break
                out[s, k + 1] = x
            status[s] = st


def omega_scan(tab, double[::1] xs, long burn_in, long tail,
               long[::1] ncells, long[::1] offsets, unsigned char[:, ::1] occ,
               int[::1] period, double[:, ::1] cycle, signed char[::1] status,
               double[::1] mindist, double probe_lo, double probe_hi,
               long[::1] probe_count, double[::1] last, double period_tol):
    """Burn in, then record the tail: visited cells per resolution, distance to
    the exceptional set, visits to (probe_lo, probe_hi), and tail periodicity."""
    cdef _TabHolder th = _TabHolder(tab)
    cdef const Tab* t = &th.t
    cdef Py_ssize_t s, S = xs.shape[0]
    cdef int R = ncells.shape[0]
    cdef long k, c, pos, cnt
    cdef int st, r, p, j, e, found
    cdef double x, md, d
    cdef double ring[128]
    with nogil:
        for s in range(S):
            x = xs[s]
            st = OK
            for k in range(burn_in):
                st = real_step(t, &x)
                if st != OK:
                    break
            md = INFINITY
            pos = 0
            cnt = 0
            if st == OK:
                for k in range(tail):
                    for r in range(R):
                        c = <long>(x * ncells[r])
                        if c >= ncells[r]:
                            c = ncells[r] - 1
                        occ[s, offsets[r] + c] = 1
                    for e in range(t.E):
                        d = fabs(x - t.exc[e])
                        if d < md:
                            md = d
                    if probe_lo < x < probe_hi:
                        cnt += 1
                    ring[pos & 127] = x
                    pos += 1
                    if k + 1 < tail:
                        st = real_step(t, &x)
                        if st != OK:
                            break
            status[s] = st
            mindist[s] = md
            probe_count[s] = cnt
            last[s] = x
            period[s] = 0
            if st == OK and pos >= 128:
                for p in range(1, 65):
                    found = 1
                    for j in range(64):
                        if fabs(ring[(pos - 1 - j) & 127] - ring[(pos - 1 - j - p) & 127]) >= period_tol:
                            found = 0
                            break
                    if found:
                        period[s] = p
                        for j in range(p):
                            cycle[s, j] = ring[(pos - p + j) & 127]
                        break


def lateral_orbit(tab, double x, int side, long n, double[::1] coords,
                  signed char[::1] sides, int[::1] idx):
    """Iterate the lateral state (x, side) n times.

    Returns (length, status); ``length`` counts the filled states including
    the start, and ``idx[k]`` is the branch used to leave state k.
    """
    cdef _TabHolder th = _TabHolder(tab)
    cdef const Tab* t = &th.t
    cdef long k, length = 1
    cdef int i, st = OK, o
    coords[0] = x
    sides[0] = side
    with nogil:
        for k in range(n + 1):
            if side < 0:
                i = find_left(t, x)
            else:
                i = find_right(t, x)
            idx[k] = i
            if k == n:
                break
            o = t.orient[i]
            if o == 0:
                st = DEGENERATE
                break
            x = branch_value(t, i, x)
            st = clamp(&x)
            if st != OK:
                break
            side = side * o
            coords[k + 1] = x
            sides[k + 1] = side
            length += 1
    return length, st
