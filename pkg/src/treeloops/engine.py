"""Replica simulation kernels.

One replica samples the link process at the top rate ``beta_max`` on the
(lazy or explicit) depth-D tree, then evaluates reach-depth-D events at
every grid rate by Poisson thinning: link i survives at beta iff its
thinning mark is below beta/beta_max.  That single shared stream makes
curves comparable across the grid and the link event pathwise monotone
in beta.  Only the root's beta_max link cluster is ever materialised;
vertices that no rate can reach are never sampled.

Replica ``i`` draws from streams addressed by (master seed, i), so
results are independent of scheduling and thread count.  Kernels are
numba-compiled and release the GIL; a pure-Python fallback keeps the
package importable (slowly) without numba.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


LAW_DETERMINISTIC = 0
LAW_POISSON = 1
LAW_BINOMIAL = 2
LAW_GEOMETRIC = 3
LAW_TABLE = 4

MODEL_LINK = 0
MODEL_LINKDELAY = 1
MODEL_LOOP = 2

ERR_NONE = 0
ERR_VERTICES = 1
ERR_LINKS = 2
ERR_DEGENERATE_START = 3
ERR_STEP_BOUND = 4

_TAG_TREE = 0x7EE5
_TAG_MASK = 0xA55A

_U64 = np.uint64
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _scramble(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True, nogil=True, inline="always")
def _stream(master, rep, tag):
    z = _U64(master) ^ (_U64(rep) * _U64(0x9E3779B97F4A7C15)) ^ (_U64(tag) * _U64(0xD1B54A32D192ED03))
    z = _scramble(z)
    z = _scramble(z ^ _U64(0x2545F4914F6CDD1D))
    return z


@njit(cache=True, nogil=True, inline="always")
def _next(state):
    state = state + _U64(0x9E3779B97F4A7C15)
    return state, _scramble(state)


@njit(cache=True, nogil=True, inline="always")
def _uniform(state):
    state, z = _next(state)
    return state, float(z >> _U64(11)) * _INV53


@njit(cache=True, nogil=True, inline="always")
def _poisson(state, lam):
    # Knuth product method; fine for the lam <= ~30 used here
    thresh = math.exp(-lam)
    k = -1
    p = 1.0
    while p > thresh:
        state, u = _uniform(state)
        p *= u
        k += 1
    return state, k


@njit(cache=True, nogil=True, inline="always")
def _offspring(state, code, a, b, cdf):
    if code == LAW_DETERMINISTIC:
        return state, int(a)
    if code == LAW_POISSON:
        return _poisson(state, a)
    if code == LAW_BINOMIAL:
        k = 0
        for _ in range(int(a)):
            state, u = _uniform(state)
            if u < b:
                k += 1
        return state, k
    if code == LAW_GEOMETRIC:
        state, u = _uniform(state)
        if a >= 1.0:
            return state, 0
        return state, int(math.floor(math.log1p(-u) / math.log(1.0 - a)))
    state, u = _uniform(state)
    lo = 0
    hi = cdf.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    return state, lo


@njit(cache=True, nogil=True, inline="always")
def _bisect_right_f8(arr, x, lo, hi):
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def _trace_reach(ptr, ev_time, ev_other, ev_kind, ev_edge, dep, n_links, D):
    """Trace the root loop on the thinned event index; 1 if it visits
    depth >= D, 0 if it closes first, negative on defects."""
    v = 0
    t = 0.0
    d = 1
    at = -1
    j0 = _bisect_right_f8(ev_time, -1.0, ptr[0], ptr[1])
    if j0 < ptr[1] and ev_time[j0] == 0.0:
        return -int(ERR_DEGENERATE_START)
    max_steps = 4 * n_links + 8
    for _ in range(max_steps):
        lo = ptr[v]
        hi = ptr[v + 1]
        k = hi - lo
        if k == 0:
            return 0 if v == 0 and d == 1 else -9
        if at >= 0:
            j = lo + (at - lo + d) % k
        else:
            pos = _bisect_right_f8(ev_time, t, lo, hi) - lo
            if d == 1:
                j = lo + pos % k
            else:
                j = lo + (pos - 1) % k
        te = ev_time[j]
        full = j == at
        if v == 0 and d == 1:
            if d == 1:
                d1 = (0.0 - t) % 1.0
                d2 = (te - t) % 1.0
            else:
                d1 = t % 1.0
                d2 = (t - te) % 1.0
            if full:
                d2 = 1.0
            if 0.0 < d1 < d2:
                return 0
        w = ev_other[j]
        if dep[w] >= D:
            return 1
        if ev_kind[j] != 0:
            d = -d
        e = ev_edge[j]
        wlo = ptr[w]
        whi = ptr[w + 1]
        jw = _bisect_right_f8(ev_time, te, wlo, whi) - 1
        while jw >= wlo and ev_time[jw] == te and ev_edge[jw] != e:
            jw -= 1
        if jw < wlo or ev_time[jw] != te or ev_edge[jw] != e:
            return -8
        v = w
        t = te
        at = jw
    return -int(ERR_STEP_BOUND)


@njit(cache=True, nogil=True)
def _replica_block(
    master,
    rep_lo,
    rep_hi,
    explicit_mode,
    tree_cstart,
    root_code,
    root_a,
    root_b,
    root_cdf,
    inner_code,
    inner_a,
    inner_b,
    inner_cdf,
    beta_max,
    u,
    D,
    grid,
    want_link,
    want_delay,
    want_loop,
    r_table,
    max_vertices,
    out,
    err,
):
    G = grid.shape[0]
    cap = r_table.shape[1] - 1
    for rep in range(rep_lo, rep_hi):
        s = _stream(_U64(master), rep, _TAG_TREE)
        # --- phase A: beta_max cluster, BFS order -----------------------
        nv_cap = 1024
        par = np.empty(nv_cap, dtype=np.int64)
        dep = np.empty(nv_cap, dtype=np.int64)
        orig = np.empty(nv_cap, dtype=np.int64)
        lk_cap = 4096
        lk_time = np.empty(lk_cap, dtype=np.float64)
        lk_thin = np.empty(lk_cap, dtype=np.float64)
        lk_kind = np.empty(lk_cap, dtype=np.uint8)
        lk_child = np.empty(lk_cap, dtype=np.int64)
        par[0] = -1
        dep[0] = 0
        orig[0] = 0
        nv = 1
        nl = 0
        head = 0
        failed = 0
        while head < nv:
            v = head
            head += 1
            if dep[v] >= D:
                continue
            if explicit_mode == 1:
                ov = orig[v]
                nkids = int(tree_cstart[ov + 1] - tree_cstart[ov])
            elif v == 0:
                s, nkids = _offspring(s, root_code, root_a, root_b, root_cdf)
            else:
                s, nkids = _offspring(s, inner_code, inner_a, inner_b, inner_cdf)
            for ci in range(nkids):
                s, kk = _poisson(s, beta_max)
                if kk == 0:
                    continue
                if nv >= nv_cap:
                    nv_cap *= 2
                    par2 = np.empty(nv_cap, dtype=np.int64)
                    dep2 = np.empty(nv_cap, dtype=np.int64)
                    orig2 = np.empty(nv_cap, dtype=np.int64)
                    par2[:nv] = par[:nv]
                    dep2[:nv] = dep[:nv]
                    orig2[:nv] = orig[:nv]
                    par = par2
                    dep = dep2
                    orig = orig2
                if nv > max_vertices:
                    failed = ERR_VERTICES
                    break
                w = nv
                par[w] = v
                dep[w] = dep[v] + 1
                if explicit_mode == 1:
                    orig[w] = tree_cstart[orig[v]] + ci
                else:
                    orig[w] = 0
                nv += 1
                while nl + kk > lk_cap:
                    lk_cap *= 2
                    a1 = np.empty(lk_cap, dtype=np.float64)
                    a2 = np.empty(lk_cap, dtype=np.float64)
                    a3 = np.empty(lk_cap, dtype=np.uint8)
                    a4 = np.empty(lk_cap, dtype=np.int64)
                    a1[:nl] = lk_time[:nl]
                    a2[:nl] = lk_thin[:nl]
                    a3[:nl] = lk_kind[:nl]
                    a4[:nl] = lk_child[:nl]
                    lk_time = a1
                    lk_thin = a2
                    lk_kind = a3
                    lk_child = a4
                for _ in range(kk):
                    s, t1 = _uniform(s)
                    s, t2 = _uniform(s)
                    s, t3 = _uniform(s)
                    lk_time[nl] = t1
                    lk_thin[nl] = t2
                    lk_kind[nl] = 0 if t3 < u else 1
                    lk_child[nl] = w
                    nl += 1
            if failed != 0:
                break
        if failed != 0:
            err[rep] = failed
            continue
        # --- scratch ----------------------------------------------------
        member = np.zeros(nv, dtype=np.uint8)
        kept = np.zeros(nv, dtype=np.uint8)
        retained = np.zeros(nv, dtype=np.uint8)
        nchild = np.zeros(nv, dtype=np.int64)
        dstar = np.zeros(nv, dtype=np.int64)
        ev_ptr = np.zeros(nv + 1, dtype=np.int64)
        ev_time = np.empty(2 * nl, dtype=np.float64)
        ev_other = np.empty(2 * nl, dtype=np.int64)
        ev_kind = np.empty(2 * nl, dtype=np.uint8)
        ev_edge = np.empty(2 * nl, dtype=np.int64)
        fill = np.zeros(nv + 1, dtype=np.int64)
        for g in range(G):
            thr = grid[g] / beta_max
            # link membership at this rate
            for i in range(nv):
                retained[i] = 0
            for i in range(nl):
                if lk_thin[i] <= thr:
                    retained[lk_child[i]] = 1
            member[0] = 1
            reach_link = 0
            for w in range(1, nv):
                member[w] = retained[w] & member[par[w]]
                if member[w] and dep[w] >= D:
                    reach_link = 1
            if want_link:
                out[rep, g, MODEL_LINK] = reach_link
            if want_delay:
                if reach_link == 0:
                    out[rep, g, MODEL_LINKDELAY] = 0
                else:
                    for i in range(nv):
                        nchild[i] = 0
                        dstar[i] = -1
                    for w in range(1, nv):
                        if member[w]:
                            nchild[par[w]] += 1
                    for w in range(1, nv):
                        if member[w]:
                            dw = nchild[w] + 1
                            pw = par[w]
                            if dstar[pw] < 0 or dw < dstar[pw]:
                                dstar[pw] = dw
                    sm = _stream(_U64(master), rep, _TAG_MASK + 131 * g)
                    kept[0] = 1
                    reach_delay = 0
                    for w in range(1, nv):
                        ok = member[w] & kept[par[w]]
                        if ok == 1 and dep[w] % 3 == 1 and dstar[w] >= 0:
                            degw = nchild[w] + 1
                            di = degw if degw < cap else cap
                            si = dstar[w] if dstar[w] < cap else cap
                            r = r_table[g, di, si]
                            if r > 0.0:
                                sm, uu = _uniform(sm)
                                if uu < r:
                                    ok = 0
                        kept[w] = ok
                        if ok == 1 and dep[w] >= D:
                            reach_delay = 1
                    out[rep, g, MODEL_LINKDELAY] = reach_delay
            if want_loop:
                if reach_link == 0 and (want_link or want_delay):
                    out[rep, g, MODEL_LOOP] = 0
                    continue
                # thinned per-vertex event index
                for i in range(nv + 1):
                    ev_ptr[i] = 0
                n2 = 0
                for i in range(nl):
                    if lk_thin[i] <= thr:
                        w = lk_child[i]
                        ev_ptr[w + 1] += 1
                        ev_ptr[par[w] + 1] += 1
                        n2 += 1
                for i in range(nv):
                    ev_ptr[i + 1] += ev_ptr[i]
                for i in range(nv + 1):
                    fill[i] = ev_ptr[i]
                for i in range(nl):
                    if lk_thin[i] <= thr:
                        w = lk_child[i]
                        pv = par[w]
                        for which in range(2):
                            vv = w if which == 0 else pv
                            oo = pv if which == 0 else w
                            pos = fill[vv]
                            # insertion by (time, edge) keeps ties deterministic
                            q = pos
                            while q > ev_ptr[vv] and (
                                ev_time[q - 1] > lk_time[i]
                                or (ev_time[q - 1] == lk_time[i] and ev_edge[q - 1] > w)
                            ):
                                ev_time[q] = ev_time[q - 1]
                                ev_other[q] = ev_other[q - 1]
                                ev_kind[q] = ev_kind[q - 1]
                                ev_edge[q] = ev_edge[q - 1]
                                q -= 1
                            ev_time[q] = lk_time[i]
                            ev_other[q] = oo
                            ev_kind[q] = lk_kind[i]
                            ev_edge[q] = w
                            fill[vv] = pos + 1
                r = _trace_reach(ev_ptr, ev_time, ev_other, ev_kind, ev_edge, dep, n2, D)
                if r < 0:
                    if r == -int(ERR_STEP_BOUND):
                        err[rep] = ERR_STEP_BOUND
                    elif r == -int(ERR_DEGENERATE_START):
                        err[rep] = ERR_DEGENERATE_START
                    else:
                        err[rep] = ERR_LINKS  # internal index invariant failed
                    break
                out[rep, g, MODEL_LOOP] = r
        # next replica
    return 0
