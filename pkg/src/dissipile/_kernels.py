"""Numba kernels shared by the simulation modules.

Everything here is deterministic given explicit 64-bit seeds: randomness
comes from a splitmix-style counter hash keyed by (seed, object, counter),
so results are independent of thread scheduling and identical across
runs. Positions are always carried as three int64 coordinates (z fixed at
0 in dimension 2) and packed into a single int64 key for table lookups.

Internal module: no stability guarantees for these signatures.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U = np.uint64

_MA = U(0x9E3779B97F4A7C15)
_MB = U(0xBF58476D1CE4E5B9)
_MC = U(0x94D049BB133111EB)
_MD = U(0xD6E8FEB86659FD93)
_INV53 = 1.0 / 9007199254740992.0

_OFF = np.int64(1) << np.int64(20)
_SPAN = np.int64(1) << np.int64(21)

# walk absorption kinds
K_EXIT = 0    # left the truncation ball; wired root
K_KILL = 1    # consumed a marked arrow; dissipative root
K_FOREST = 2  # hit the existing forest
K_INCON = 3   # budget/guard/overflow; replica is inconclusive

BIG = np.int64(1) << np.int64(62)


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> U(30))) * _MB
    z = (z ^ (z >> U(27))) * _MC
    return z ^ (z >> U(31))


@njit(cache=True, inline="always")
def _h2(seed, a, b):
    return _mix(_mix(seed ^ (_MA * a)) ^ (_MD * b))


@njit(cache=True, inline="always")
def _u01(h):
    return (h >> U(11)) * _INV53


@njit(cache=True, inline="always")
def derive_seed(seed, idx):
    return _h2(seed, U(idx), U(0x5EEDFACE))


@njit(cache=True, inline="always")
def _arrow(seed, vkey, depth, ndir):
    """Arrow #depth at a vertex: (direction, marker-uniform)."""
    h = _h2(seed, U(vkey), U(depth))
    d = np.int64(h % U(ndir))
    u = _u01(_mix(h ^ _MD))
    return d, u


@njit(cache=True, inline="always")
def _step_dir(seed, t, ndir):
    return np.int64(_h2(seed, U(t), U(0xA11CE)) % U(ndir))


@njit(cache=True, inline="always")
def _pack(x, y, z):
    return ((x + _OFF) * _SPAN + (y + _OFF)) * _SPAN + (z + _OFF)


@njit(cache=True, inline="always")
def _unpack(key):
    z = key % _SPAN - _OFF
    key //= _SPAN
    y = key % _SPAN - _OFF
    x = key // _SPAN - _OFF
    return x, y, z


@njit(cache=True, inline="always")
def _tbl_slot(keys, stamps, stamp, key):
    mask = np.int64(keys.shape[0] - 1)
    i = np.int64(_mix(U(key)) & U(mask))
    while stamps[i] == stamp and keys[i] != key:
        i = (i + 1) & mask
    return i


@njit(cache=True)
def geometric_from_u(u, lam):
    """Support {0,1,...}: number of unmarked steps before the kill."""
    if lam <= 0.0:
        return BIG
    if u <= 0.0:
        u = _INV53
    t = np.floor(np.log(u) / np.log1p(-lam))
    if t >= 1e18:
        return BIG
    return np.int64(t)


# ---------------------------------------------------------------------------
# sandpile stabilization and chain driving
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def stabilize_int(h, nbr, thr, odo):
    """FIFO-queue stabilization, integer heights. Returns total topplings."""
    n = h.shape[0]
    deg = nbr.shape[1]
    cap = n + 1
    q = np.empty(cap, np.int64)
    inq = np.zeros(n, np.uint8)
    head = 0
    tail = 0
    for i in range(n):
        if h[i] >= thr:
            q[tail] = i
            tail = (tail + 1) % cap
            inq[i] = 1
    total = np.int64(0)
    while head != tail:
        v = q[head]
        head = (head + 1) % cap
        inq[v] = 0
        if h[v] < thr:
            continue
        t = h[v] // thr
        h[v] -= t * thr
        odo[v] += t
        total += t
        for s in range(deg):
            w = nbr[v, s]
            if w >= 0:
                h[w] += t
                if h[w] >= thr and inq[w] == 0:
                    q[tail] = w
                    tail = (tail + 1) % cap
                    inq[w] = 1
    return total


@njit(cache=True, nogil=True)
def stabilize_float(h, nbr, thr, odo):
    n = h.shape[0]
    deg = nbr.shape[1]
    cap = n + 1
    q = np.empty(cap, np.int64)
    inq = np.zeros(n, np.uint8)
    head = 0
    tail = 0
    for i in range(n):
        if h[i] >= thr:
            q[tail] = i
            tail = (tail + 1) % cap
            inq[i] = 1
    total = np.int64(0)
    while head != tail:
        v = q[head]
        head = (head + 1) % cap
        inq[v] = 0
        while h[v] >= thr:
            h[v] -= thr
            odo[v] += 1
            total += 1
            for s in range(deg):
                w = nbr[v, s]
                if w >= 0:
                    h[w] += 1.0
                    if h[w] >= thr and inq[w] == 0:
                        q[tail] = w
                        tail = (tail + 1) % cap
                        inq[w] = 1
    return total


@njit(cache=True, nogil=True)
def stabilize_int_random(h, nbr, thr, odo, seed):
    """One legal toppling at a time at a hash-chosen active site."""
    n = h.shape[0]
    deg = nbr.shape[1]
    act = np.empty(n, np.int64)
    pos = np.full(n, -1, np.int64)
    cnt = 0
    for i in range(n):
        if h[i] >= thr:
            act[cnt] = i
            pos[i] = cnt
            cnt += 1
    step = np.int64(0)
    while cnt > 0:
        pick = np.int64(_h2(seed, U(step), U(0xD1CE)) % U(cnt))
        step += 1
        v = act[pick]
        h[v] -= thr
        odo[v] += 1
        for s in range(deg):
            w = nbr[v, s]
            if w >= 0:
                h[w] += 1
                if h[w] >= thr and pos[w] < 0:
                    act[cnt] = w
                    pos[w] = cnt
                    cnt += 1
        if h[v] < thr:
            cnt -= 1
            last = act[cnt]
            act[pick] = last
            pos[last] = pick
            pos[v] = -1
    return step


@njit(cache=True, nogil=True)
def stabilize_float_random(h, nbr, thr, odo, seed):
    n = h.shape[0]
    deg = nbr.shape[1]
    act = np.empty(n, np.int64)
    pos = np.full(n, -1, np.int64)
    cnt = 0
    for i in range(n):
        if h[i] >= thr:
            act[cnt] = i
            pos[i] = cnt
            cnt += 1
    step = np.int64(0)
    while cnt > 0:
        pick = np.int64(_h2(seed, U(step), U(0xD1CE)) % U(cnt))
        step += 1
        v = act[pick]
        h[v] -= thr
        odo[v] += 1
        for s in range(deg):
            w = nbr[v, s]
            if w >= 0:
                h[w] += 1.0
                if h[w] >= thr and pos[w] < 0:
                    act[cnt] = w
                    pos[w] = cnt
                    cnt += 1
        if h[v] < thr:
            cnt -= 1
            last = act[cnt]
            act[pick] = last
            pos[last] = pick
            pos[v] = -1
    return step


@njit(cache=True, nogil=True)
def chain_record_vertex(h, nbr, thr, sites, vertex, out):
    """Add at sites[s], stabilize, record h[vertex] after each step."""
    odo = np.zeros(h.shape[0], np.int64)
    for s in range(sites.shape[0]):
        h[sites[s]] += 1
        stabilize_int(h, nbr, thr, odo)
        out[s] = h[vertex]


@njit(cache=True, nogil=True)
def chain_record_code(h, nbr, thr, sites, base, out):
    """Record the full state as sum h[i] * base^i (tiny domains only)."""
    n = h.shape[0]
    odo = np.zeros(n, np.int64)
    for s in range(sites.shape[0]):
        h[sites[s]] += 1
        stabilize_int(h, nbr, thr, odo)
        code = np.int64(0)
        mult = np.int64(1)
        for i in range(n):
            code += h[i] * mult
            mult *= base
        out[s] = code


# ---------------------------------------------------------------------------
# Wilson's algorithm on a finite wired graph
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def wilson_finite(seed, lam, use_markers, nbr, order, parents):
    """Cycle-popping Wilson rooted at the wired vertex.

    parents[i] is filled with the chosen slot: 0..2d-1 ordinary, 2d for a
    marked (dissipative) arrow. Returns (consumed, kept, popped) arrow
    counts; consumed == kept + popped exactly.
    """
    n = nbr.shape[0]
    ndir = nbr.shape[1]
    popcount = np.zeros(n, np.int64)
    intree = np.zeros(n, np.uint8)
    le_path = np.empty(n + 1, np.int64)
    le_slot = np.empty(n + 1, np.int64)
    le_pos = np.zeros(n, np.int64)
    le_stamp = np.zeros(n, np.int64)
    parents[:] = -1
    consumed = np.int64(0)
    kept = np.int64(0)
    for oi in range(order.shape[0]):
        start = order[oi]
        if intree[start]:
            continue
        stamp = oi + 1
        le_path[0] = start
        le_pos[start] = 0
        le_stamp[start] = stamp
        le_len = 1
        v = start
        kind = -1
        term_slot = np.int64(-1)
        while True:
            d, u = _arrow(seed, v, popcount[v], ndir)
            popcount[v] += 1
            consumed += 1
            if use_markers and u < lam:
                kind = K_KILL
                break
            w = nbr[v, d]
            le_slot[le_len - 1] = d
            if w < 0:
                kind = K_EXIT
                term_slot = d
                break
            if intree[w]:
                kind = K_FOREST
                le_path[le_len] = w
                le_len += 1
                break
            if le_stamp[w] == stamp and le_path[le_pos[w]] == w and le_pos[w] < le_len:
                le_len = le_pos[w] + 1
            else:
                le_path[le_len] = w
                le_pos[w] = le_len
                le_stamp[w] = stamp
                le_len += 1
            v = w
        if kind == K_FOREST:
            for i in range(le_len - 1):
                x = le_path[i]
                parents[x] = le_slot[i]
                intree[x] = 1
            kept += le_len - 1
        else:
            for i in range(le_len - 1):
                x = le_path[i]
                parents[x] = le_slot[i]
                intree[x] = 1
            last = le_path[le_len - 1]
            parents[last] = ndir if kind == K_KILL else term_slot
            intree[last] = 1
            kept += le_len
    return consumed, kept, consumed - kept


# ---------------------------------------------------------------------------
# plain lattice walks (pre-drawn directions; used by the public run_walk)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def walk_chunk(pos, steps, dirs, exit_r2, hit_sorted, out):
    """Advance through pre-drawn direction indices.

    Writes visited coordinates to out, returns (count, code): code 0 =
    chunk exhausted, 1 = exited the ball, 2 = hit the set. Stops *after*
    recording the triggering site.
    """
    nhit = hit_sorted.shape[0]
    for t in range(steps.shape[0]):
        d = steps[t]
        pos[0] += dirs[d, 0]
        pos[1] += dirs[d, 1]
        pos[2] += dirs[d, 2]
        out[t, 0] = pos[0]
        out[t, 1] = pos[1]
        out[t, 2] = pos[2]
        if exit_r2 >= 0:
            r2 = pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]
            if r2 > exit_r2:
                return t + 1, 1
        if nhit > 0:
            key = _pack(pos[0], pos[1], pos[2])
            lo = 0
            hi = nhit
            while lo < hi:
                mid = (lo + hi) >> 1
                if hit_sorted[mid] < key:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < nhit and hit_sorted[lo] == key:
                return t + 1, 2
    return steps.shape[0], 0


# ---------------------------------------------------------------------------
# loop erasure over packed-coordinate arrays
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def loop_erase_packed(keys, out):
    """Chronological loop erasure; returns the erased length."""
    n = keys.shape[0]
    cap = np.int64(1)
    while cap < 2 * n + 2:
        cap <<= 1
    tk = np.empty(cap, np.int64)
    ts = np.zeros(cap, np.int64)
    tv = np.empty(cap, np.int64)
    le_len = np.int64(0)
    for i in range(n):
        key = keys[i]
        s = _tbl_slot(tk, ts, 1, key)
        if ts[s] == 1 and tv[s] < le_len and out[tv[s]] == key:
            le_len = tv[s] + 1
        else:
            out[le_len] = key
            tk[s] = key
            ts[s] = 1
            tv[s] = le_len
            le_len += 1
    return le_len


@njit(cache=True, nogil=True)
def lerw_exit_ball(seed, ndir, dirs, r_exit, budget, out):
    """Loop-erased walk from the origin, stopped on leaving the ball.

    Returns the loop-erasure length (terminal outside site included),
    or -1 if the step budget ran out.
    """
    cap = np.int64(1) << np.int64(18)
    tk = np.empty(cap, np.int64)
    ts = np.zeros(cap, np.int64)
    tv = np.empty(cap, np.int64)
    x = np.int64(0)
    y = np.int64(0)
    z = np.int64(0)
    r2max = r_exit * r_exit
    le_len = np.int64(1)
    out[0] = _pack(x, y, z)
    tk_s = _tbl_slot(tk, ts, 1, out[0])
    tk[tk_s] = out[0]
    ts[tk_s] = 1
    tv[tk_s] = 0
    filled = np.int64(1)
    for t in range(1, budget + 1):
        d = _step_dir(seed, t, ndir)
        x += dirs[d, 0]
        y += dirs[d, 1]
        z += dirs[d, 2]
        key = _pack(x, y, z)
        s = _tbl_slot(tk, ts, 1, key)
        if ts[s] == 1 and tv[s] < le_len and out[tv[s]] == key:
            le_len = tv[s] + 1
        else:
            if le_len >= out.shape[0] or filled * 2 >= cap:
                return -1
            out[le_len] = key
            tk[s] = key
            ts[s] = 1
            tv[s] = le_len
            le_len += 1
            filled += 1
        if x * x + y * y + z * z > r2max:
            return le_len
    return -1


# ---------------------------------------------------------------------------
# cut-time scanning
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def cut_time_block(seed, wlo, whi, ndir, dirs, m, n, trunc_r, budget,
                   out_ok, out_incon):
    """Walks from the origin truncated on leaving B(trunc_r); out_ok[w]
    is 1 when there is a cut time k in [tau_m, tau_n] with no return to
    B(m) at or after k."""
    cap = np.int64(1)
    while cap < 4 * budget:
        cap <<= 1
    if cap > (np.int64(1) << np.int64(23)):
        cap = np.int64(1) << np.int64(23)
    tk = np.empty(cap, np.int64)
    ts = np.zeros(cap, np.int64)
    tfirst = np.empty(cap, np.int64)
    tlast = np.empty(cap, np.int64)
    slots = np.empty(budget + 2, np.int64)
    cover = np.zeros(budget + 3, np.int64)
    m2 = m * m
    n2 = n * n
    R2 = trunc_r * trunc_r
    for w in range(wlo, whi):
        wseed = derive_seed(seed, w)
        stamp = w - wlo + 1
        x = np.int64(0)
        y = np.int64(0)
        z = np.int64(0)
        tau_m = np.int64(-1)
        tau_n = np.int64(-1)
        last_m = np.int64(0)
        nslots = np.int64(0)
        key = _pack(x, y, z)
        s = _tbl_slot(tk, ts, stamp, key)
        tk[s] = key
        ts[s] = stamp
        tfirst[s] = 0
        tlast[s] = 0
        slots[nslots] = s
        nslots += 1
        L = np.int64(-1)
        overflow = False
        for t in range(1, budget + 1):
            d = _step_dir(wseed, t, ndir)
            x += dirs[d, 0]
            y += dirs[d, 1]
            z += dirs[d, 2]
            key = _pack(x, y, z)
            s = _tbl_slot(tk, ts, stamp, key)
            if ts[s] == stamp:
                tlast[s] = t
            else:
                if 2 * nslots >= cap:
                    overflow = True
                    break
                tk[s] = key
                ts[s] = stamp
                tfirst[s] = t
                tlast[s] = t
                slots[nslots] = s
                nslots += 1
            r2 = x * x + y * y + z * z
            if r2 <= m2:
                last_m = t
            else:
                if tau_m < 0:
                    tau_m = t
                if r2 > n2 and tau_n < 0:
                    tau_n = t
                if r2 > R2:
                    L = t
                    break
        idx = w - wlo
        if L < 0 or overflow:
            out_incon[idx] = 1
            out_ok[idx] = 0
            continue
        out_incon[idx] = 0
        ok = 0
        if tau_m >= 0 and tau_n >= 0:
            lo = tau_m
            if last_m + 1 > lo:
                lo = last_m + 1
            hi = tau_n
            if lo <= hi:
                for i in range(L + 2):
                    cover[i] = 0
                for i in range(nslots):
                    s = slots[i]
                    cover[tfirst[s]] += 1
                    cover[tlast[s]] -= 1
                run = np.int64(0)
                for kk in range(hi + 1):
                    run += cover[kk]
                    if kk >= lo and run == 0:
                        ok = 1
                        break
        out_ok[idx] = ok


# ---------------------------------------------------------------------------
# Beurling non-hitting trials
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def beurling_block(seed, tlo, thi, ndir, dirs, z0, obstacle_sorted, big_r,
                   budget):
    """Trials from z0: walk until it leaves B(big_r) (a non-hit) or hits
    the obstacle set at some step >= 1. Returns (nonhit, unresolved)."""
    R2 = big_r * big_r
    nobs = obstacle_sorted.shape[0]
    nonhit = np.int64(0)
    unresolved = np.int64(0)
    for trial in range(tlo, thi):
        tseed = derive_seed(seed, trial)
        x = z0[0]
        y = z0[1]
        z = z0[2]
        done = False
        for t in range(1, budget + 1):
            d = _step_dir(tseed, t, ndir)
            x += dirs[d, 0]
            y += dirs[d, 1]
            z += dirs[d, 2]
            r2 = x * x + y * y + z * z
            if r2 > R2:
                nonhit += 1
                done = True
                break
            key = _pack(x, y, z)
            lo = 0
            hi = nobs
            while lo < hi:
                mid = (lo + hi) >> 1
                if obstacle_sorted[mid] < key:
                    lo = mid + 1
                else:
                    hi = mid
            if lo < nobs and obstacle_sorted[lo] == key:
                done = True
                break
        if not done:
            unresolved += 1
    return nonhit, unresolved


# ---------------------------------------------------------------------------
# two-path quadruple (pair reduction experiment, d = 3)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def two_path_one(seed, ndir, dirs, m, n_big, lam, budget,
                 le_inf, le_t, le_s1, le_s1k):
    """One replica of the two-walk experiment.

    Returns (len_inf, len_t, len_s1, len_s1k, flag_i, flag_ii, flag_iii,
    f_nohit, incon). Lengths refer to the four loop-erasures; flags are
    the hit-before-exit, survive-to-exit and prefix-stability events, and
    f_nohit records LE(S[0,T]) not being hit by S1[0,T1].
    """
    R2 = n_big * n_big
    m2 = m * m
    # S with its killing clock
    u = _u01(_h2(seed, U(1), U(0x7E11)))
    T = geometric_from_u(u, lam)
    cap = np.int64(1)
    while cap < 4 * budget:
        cap <<= 1
    if cap > (np.int64(1) << np.int64(22)):
        cap = np.int64(1) << np.int64(22)
    tk = np.empty(cap, np.int64)
    ts = np.zeros(cap, np.int64)
    tv = np.empty(cap, np.int64)
    x = np.int64(0)
    y = np.int64(0)
    z = np.int64(0)
    le_len = np.int64(1)
    le_inf[0] = _pack(x, y, z)
    s = _tbl_slot(tk, ts, 1, le_inf[0])
    tk[s] = le_inf[0]
    ts[s] = 1
    tv[s] = 0
    len_t = np.int64(-1)
    if T == 0:
        len_t = 1
        le_t[0] = le_inf[0]
    exited = np.int64(-1)
    wseed = derive_seed(seed, 11)
    t = np.int64(0)
    incon = 0
    while True:
        t += 1
        if t > budget:
            incon = 1
            break
        d = _step_dir(wseed, t, ndir)
        x += dirs[d, 0]
        y += dirs[d, 1]
        z += dirs[d, 2]
        key = _pack(x, y, z)
        s = _tbl_slot(tk, ts, 1, key)
        if ts[s] == 1 and tv[s] < le_len and le_inf[tv[s]] == key:
            le_len = tv[s] + 1
        else:
            if le_len >= le_inf.shape[0]:
                incon = 1
                break
            le_inf[le_len] = key
            tk[s] = key
            ts[s] = 1
            tv[s] = le_len
            le_len += 1
        if t == T:
            len_t = le_len
            for i in range(le_len):
                le_t[i] = le_inf[i]
        if exited < 0 and x * x + y * y + z * z > R2:
            exited = t
        if exited >= 0 and t >= T:
            break
        if exited >= 0 and T >= BIG:
            len_t = -2  # lam == 0: LE(S[0,T]) == LE(S[0,inf)) proxy
            break
    len_inf = le_len
    if len_t == -2:
        len_t = len_inf
        for i in range(len_inf):
            le_t[i] = le_inf[i]
    if incon == 1 or len_t < 0:
        return len_inf, np.int64(0), np.int64(0), np.int64(0), 0, 0, 0, 0, 1
    # flag iii: prefix agreement up to the last index of le_inf inside B(m)
    last_in = np.int64(-1)
    for i in range(len_inf):
        xx, yy, zz = _unpack(le_inf[i])
        if xx * xx + yy * yy + zz * zz <= m2:
            last_in = i
    flag_iii = 1
    if last_in >= 0:
        if len_t < last_in + 1:
            flag_iii = 0
        else:
            for i in range(last_in + 1):
                if le_t[i] != le_inf[i]:
                    flag_iii = 0
                    break
    # S1 from a lattice neighbour of the origin
    u1 = _u01(_h2(seed, U(2), U(0x7E11)))
    T1 = geometric_from_u(u1, lam)
    s1seed = derive_seed(seed, 12)
    # membership tables for the two prefixes
    ck = np.empty(cap, np.int64)
    cs = np.zeros(cap, np.int64)
    for i in range(len_inf):
        s = _tbl_slot(ck, cs, 1, le_inf[i])
        if cs[s] != 1:
            ck[s] = le_inf[i]
            cs[s] = 1
    ck2 = np.empty(cap, np.int64)
    cs2 = np.zeros(cap, np.int64)
    for i in range(len_t):
        s = _tbl_slot(ck2, cs2, 1, le_t[i])
        if cs2[s] != 1:
            ck2[s] = le_t[i]
            cs2[s] = 1
    x = dirs[0, 0]
    y = dirs[0, 1]
    z = dirs[0, 2]
    tk2 = np.empty(cap, np.int64)
    ts2 = np.zeros(cap, np.int64)
    tv2 = np.empty(cap, np.int64)
    xi1 = np.int64(-1)
    xi1k = np.int64(-1)
    tau1m = np.int64(-1)
    hit_before_t1 = 0
    le1_len = np.int64(1)
    le_s1[0] = _pack(x, y, z)
    s = _tbl_slot(tk2, ts2, 1, le_s1[0])
    tk2[s] = le_s1[0]
    ts2[s] = 1
    tv2[s] = 0
    key = le_s1[0]
    s = _tbl_slot(ck, cs, 1, key)
    if cs[s] == 1:
        xi1 = 0
    s = _tbl_slot(ck2, cs2, 1, key)
    if cs2[s] == 1:
        xi1k = 0
        if T1 >= 0:
            hit_before_t1 = 1
    len_s1 = np.int64(-1)
    len_s1k = np.int64(-1)
    if xi1 == 0:
        len_s1 = 1
    if xi1k == 0 or T1 == 0:
        len_s1k = 1
        le_s1k[0] = le_s1[0]
    t = np.int64(0)
    guard2 = 16 * R2
    while True:
        if len_s1 >= 0 and len_s1k >= 0 and tau1m >= 0:
            break
        t += 1
        if t > budget:
            incon = 1
            break
        d = _step_dir(s1seed, t, ndir)
        x += dirs[d, 0]
        y += dirs[d, 1]
        z += dirs[d, 2]
        key = _pack(x, y, z)
        s = _tbl_slot(tk2, ts2, 1, key)
        if ts2[s] == 1 and tv2[s] < le1_len and le_s1[tv2[s]] == key:
            le1_len = tv2[s] + 1
        else:
            if le1_len >= le_s1.shape[0]:
                incon = 1
                break
            le_s1[le1_len] = key
            tk2[s] = key
            ts2[s] = 1
            tv2[s] = le1_len
            le1_len += 1
        r2 = x * x + y * y + z * z
        if tau1m < 0 and r2 > m2:
            tau1m = t
        if xi1 < 0:
            s = _tbl_slot(ck, cs, 1, key)
            if cs[s] == 1:
                xi1 = t
                len_s1 = le1_len
        if xi1k < 0:
            s = _tbl_slot(ck2, cs2, 1, key)
            if cs2[s] == 1:
                xi1k = t
                if t <= T1:
                    hit_before_t1 = 1
        if len_s1k < 0 and (xi1k >= 0 or t >= T1):
            len_s1k = le1_len
            for i in range(le1_len):
                le_s1k[i] = le_s1[i]
        if r2 > guard2:
            break
    if len_s1 < 0:
        len_s1 = 0  # escaped without hitting: unresolved hit
    if len_s1k < 0:
        len_s1k = 0
    flag_i = 1 if (xi1 >= 0 and tau1m >= 0 and xi1 < tau1m) else 0
    flag_ii = 1 if (tau1m >= 0 and T1 >= tau1m) else 0
    f_nohit = 1 - hit_before_t1
    return len_inf, len_t, len_s1, len_s1k, flag_i, flag_ii, flag_iii, f_nohit, incon


@njit(cache=True, nogil=True)
def two_path_flag_block(seed, rlo, rhi, ndir, dirs, m, n_big, lam, budget,
                        out_flags):
    """Flags (i'), (ii'), (iii'), F-nohit, incon for a replica range."""
    le_cap = 1 << 16
    a = np.empty(le_cap, np.int64)
    b = np.empty(le_cap, np.int64)
    c = np.empty(le_cap, np.int64)
    dd = np.empty(le_cap, np.int64)
    for r in range(rlo, rhi):
        rs = derive_seed(seed, r)
        res = two_path_one(rs, ndir, dirs, m, n_big, lam, budget, a, b, c, dd)
        out_flags[r - rlo, 0] = res[4]
        out_flags[r - rlo, 1] = res[5]
        out_flags[r - rlo, 2] = res[6]
        out_flags[r - rlo, 3] = res[7]
        out_flags[r - rlo, 4] = res[8]


# ---------------------------------------------------------------------------
# coupled Wilson replica engine (shared arrow stacks, two variants)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _walk_le(rseed, use_markers, lam, ndir, dirs,
             sx, sy, sz, exit_r, exit_is_root, budget,
             fk, fs, fw, fp, fstamp, fcap_used,
             pk, ps, pv, pstamp, pcap_used,
             lk, ls, lv, lstamp,
             pathbuf, off, walk_id):
    """One Wilson walk with online loop erasure onto shared arrow stacks.

    Writes the loop-erased path into pathbuf[off:]; returns
    (le_len, kind, target_walk, target_pos).
    """
    key0 = _pack(sx, sy, sz)
    s = _tbl_slot(fk, fs, fstamp, key0)
    if fs[s] == fstamp:
        pathbuf[off] = key0
        return np.int64(1), K_FOREST, fw[s], fp[s]
    exit_r2 = exit_r * exit_r
    pcap = pk.shape[0]
    fcap = fk.shape[0]
    x = sx
    y = sy
    z = sz
    le_len = np.int64(1)
    pathbuf[off] = key0
    s = _tbl_slot(lk, ls, lstamp, key0)
    lk[s] = key0
    ls[s] = lstamp
    lv[s] = 0
    kind = K_INCON
    tw = np.int32(-1)
    tp = np.int32(-1)
    t = np.int64(0)
    while True:
        key = _pack(x, y, z)
        s = _tbl_slot(pk, ps, pstamp, key)
        if ps[s] == pstamp:
            cnt = np.int64(pv[s])
            pv[s] = pv[s] + 1
        else:
            if 2 * pcap_used[0] >= pcap:
                kind = K_INCON
                break
            pk[s] = key
            ps[s] = pstamp
            pv[s] = 1
            pcap_used[0] += 1
            cnt = np.int64(0)
        d, u = _arrow(rseed, key, cnt, ndir)
        if use_markers and u < lam:
            kind = K_KILL
            break
        x += dirs[d, 0]
        y += dirs[d, 1]
        z += dirs[d, 2]
        t += 1
        if t > budget:
            kind = K_INCON
            break
        key = _pack(x, y, z)
        s = _tbl_slot(fk, fs, fstamp, key)
        if fs[s] == fstamp:
            kind = K_FOREST
            tw = fw[s]
            tp = fp[s]
            if off + le_len >= pathbuf.shape[0]:
                kind = K_INCON
                break
            pathbuf[off + le_len] = key
            le_len += 1
            break
        if x * x + y * y + z * z > exit_r2:
            kind = K_EXIT if exit_is_root else K_INCON
            if off + le_len >= pathbuf.shape[0]:
                kind = K_INCON
                break
            pathbuf[off + le_len] = key
            le_len += 1
            break
        s = _tbl_slot(lk, ls, lstamp, key)
        if ls[s] == lstamp and lv[s] < le_len and pathbuf[off + lv[s]] == key:
            le_len = np.int64(lv[s] + 1)
        else:
            if off + le_len >= pathbuf.shape[0]:
                kind = K_INCON
                break
            pathbuf[off + le_len] = key
            lk[s] = key
            ls[s] = lstamp
            lv[s] = le_len
            le_len += 1
    if kind != K_INCON:
        reg = le_len if kind == K_KILL else le_len - 1
        for i in range(reg):
            key = pathbuf[off + i]
            s = _tbl_slot(fk, fs, fstamp, key)
            if fs[s] != fstamp:
                if 2 * fcap_used[0] >= fcap:
                    kind = K_INCON
                    break
                fk[s] = key
                fs[s] = fstamp
                fw[s] = walk_id
                fp[s] = np.int32(i)
                fcap_used[0] += 1
    return le_len, kind, tw, tp


@njit(cache=True, inline="always")
def _tp_canon(w, p, off, kind, tgtw, tgtp):
    ln = off[w + 1] - off[w]
    while p == ln - 1 and kind[w] == K_FOREST:
        p2 = np.int64(tgtp[w])
        w = np.int64(tgtw[w])
        p = p2
        ln = off[w + 1] - off[w]
    return w, p


@njit(cache=True, inline="always")
def _tp_next(w, p, off, kind, tgtw, tgtp):
    ln = off[w + 1] - off[w]
    if p < ln - 1:
        return _tp_canon(w, p + 1, off, kind, tgtw, tgtp)
    return np.int64(-1), np.int64(-1)


@njit(cache=True)
def _agree_len(j, off0, kind0, tw0, tp0, pb0, offg, kindg, twg, tpg, pbg, cap):
    wa, pa = _tp_canon(j, np.int64(0), off0, kind0, tw0, tp0)
    wb, pb = _tp_canon(j, np.int64(0), offg, kindg, twg, tpg)
    cnt = np.int64(0)
    while cnt < cap:
        if wa < 0 or wb < 0:
            break
        if pb0[off0[wa] + pa] != pbg[offg[wb] + pb]:
            break
        cnt += 1
        wa, pa = _tp_next(wa, pa, off0, kind0, tw0, tp0)
        wb, pb = _tp_next(wb, pb, offg, kindg, twg, tpg)
    return cnt


@njit(cache=True)
def _fill_path_set(j, off, kind, tgtw, tgtp, pathbuf, sk, ss, stamp, cap):
    """Insert all tree-path vertices of walk j; returns count or -1."""
    w, p = _tp_canon(j, np.int64(0), off, kind, tgtw, tgtp)
    n = np.int64(0)
    while w >= 0:
        key = pathbuf[off[w] + p]
        s = _tbl_slot(sk, ss, stamp, key)
        if ss[s] != stamp:
            if 2 * n >= cap:
                return np.int64(-1)
            sk[s] = key
            ss[s] = stamp
            n += 1
        w, p = _tp_next(w, p, off, kind, tgtw, tgtp)
    return n


@njit(cache=True)
def _scan_hit_exits(j, off, kind, tgtw, tgtp, pathbuf, sk, ss, stamp,
                    m2s, out_exit):
    """First tree-path index of walk j inside the stamped set, plus the
    first index outside each ball radius (BIG when the path ends first)."""
    nm = m2s.shape[0]
    for i in range(nm):
        out_exit[i] = BIG
    w, p = _tp_canon(j, np.int64(0), off, kind, tgtw, tgtp)
    idx = np.int64(0)
    hit = BIG
    pending = nm
    while w >= 0:
        key = pathbuf[off[w] + p]
        if hit == BIG:
            s = _tbl_slot(sk, ss, stamp, key)
            if ss[s] == stamp:
                hit = idx
        if pending > 0:
            x, y, z = _unpack(key)
            r2 = x * x + y * y + z * z
            for i in range(nm):
                if out_exit[i] == BIG and r2 > m2s[i]:
                    out_exit[i] = idx
                    pending -= 1
        if hit < BIG and pending == 0:
            break
        idx += 1
        w, p = _tp_next(w, p, off, kind, tgtw, tgtp)
    return hit


@njit(cache=True)
def _last_inside(j, off, kind, tgtw, tgtp, pathbuf, m2s, out_last):
    nm = m2s.shape[0]
    for i in range(nm):
        out_last[i] = np.int64(-1)
    w, p = _tp_canon(j, np.int64(0), off, kind, tgtw, tgtp)
    idx = np.int64(0)
    while w >= 0:
        x, y, z = _unpack(pathbuf[off[w] + p])
        r2 = x * x + y * y + z * z
        for i in range(nm):
            if r2 <= m2s[i]:
                out_last[i] = idx
        idx += 1
        w, p = _tp_next(w, p, off, kind, tgtw, tgtp)


@njit(cache=True)
def _walk_depths(nw, off, kind, tgtw, tgtp, E):
    for w in range(nw):
        if kind[w] == K_EXIT:
            E[w] = 0
        elif kind[w] == K_KILL:
            E[w] = 1
        else:
            t = np.int64(tgtw[w])
            E[w] = E[t] + (off[t + 1] - off[t] - 1 - np.int64(tgtp[w]))


@njit(cache=True)
def _vertex_depth(key, fk, fs, fw, fp, fstamp, off, E, exit_root_r2):
    if exit_root_r2 >= 0:
        x, y, z = _unpack(key)
        if x * x + y * y + z * z > exit_root_r2:
            return np.int64(0)
    s = _tbl_slot(fk, fs, fstamp, key)
    if fs[s] != fstamp:
        return np.int64(-1)
    w = np.int64(fw[s])
    p = np.int64(fp[s])
    return E[w] + (off[w + 1] - off[w] - 1 - p)


@njit(cache=True)
def _height_at(sx, sy, sz, ndir, dirs,
               fk, fs, fw, fp, fstamp,
               off, kind, tgtw, tgtp, pathbuf, E, exit_root_r2):
    """Star height from depth comparisons around one site; -1 if the
    local tree data is unavailable."""
    key = _pack(sx, sy, sz)
    s = _tbl_slot(fk, fs, fstamp, key)
    if fs[s] != fstamp:
        return np.int64(-1)
    w = np.int64(fw[s])
    p = np.int64(fp[s])
    ln = off[w + 1] - off[w]
    if p == ln - 1 and kind[w] == K_KILL:
        return np.int64(ndir)
    dx = E[w] + (ln - 1 - p)
    wn, pn = _tp_next(w, p, off, kind, tgtw, tgtp)
    if wn < 0:
        return np.int64(-1)
    pkey = pathbuf[off[wn] + pn]
    px, py, pz = _unpack(pkey)
    ydir = np.int64(-1)
    for t in range(ndir):
        if px - sx == dirs[t, 0] and py - sy == dirs[t, 1] and pz - sz == dirs[t, 2]:
            ydir = t
            break
    if ydir < 0:
        return np.int64(-1)
    n_x = np.int64(0)
    rank = np.int64(0)
    for t in range(ndir):
        nb_key = _pack(sx + dirs[t, 0], sy + dirs[t, 1], sz + dirs[t, 2])
        dn = _vertex_depth(nb_key, fk, fs, fw, fp, fstamp, off, E, exit_root_r2)
        if dn < 0:
            return np.int64(-1)
        if dn < dx:
            n_x += 1
        if dn == dx - 1 and t < ydir:
            rank += 1
    return ndir - n_x + rank


@njit(cache=True, nogil=True)
def coupled_replica_block(master_seed, rep_lo, rep_hi, ndir, dirs, lam,
                          starts, witness_abs, n_pre, n_boundary,
                          m_vals, exit0_r, exitg_r, gamma_exit_root,
                          budget, le_cap, pop_exp, forest_exp,
                          out_success, out_i, out_ii, out_iii, out_iv,
                          out_incon, out_hmis, out_h0, out_hg,
                          out_pairfail, out_ivfail):
    """Coupled truncated Wilson replicas over a z-ordered walk list.

    Both variants consume the same counter-keyed arrow stacks: variant 0
    ignores the red markers, the gamma variant treats a marked arrow as a
    jump to the root.
    """
    nw = starts.shape[0]
    nm = m_vals.shape[0]
    nb = n_boundary
    ni = nw - n_pre - n_boundary
    capP = np.int64(1) << pop_exp
    capF = np.int64(1) << forest_exp
    capL = capP
    capC = np.int64(1) << np.int64(18)
    pk0 = np.empty(capP, np.int64)
    ps0 = np.zeros(capP, np.int32)
    pv0 = np.empty(capP, np.int32)
    pkg = np.empty(capP, np.int64)
    psg = np.zeros(capP, np.int32)
    pvg = np.empty(capP, np.int32)
    fk0 = np.empty(capF, np.int64)
    fs0 = np.zeros(capF, np.int32)
    fw0 = np.empty(capF, np.int32)
    fp0 = np.empty(capF, np.int32)
    fkg = np.empty(capF, np.int64)
    fsg = np.zeros(capF, np.int32)
    fwg = np.empty(capF, np.int32)
    fpg = np.empty(capF, np.int32)
    lk = np.empty(capL, np.int64)
    ls = np.zeros(capL, np.int32)
    lv = np.empty(capL, np.int32)
    sk = np.empty(capC, np.int64)
    ss = np.zeros(capC, np.int32)
    pb0 = np.empty(le_cap, np.int64)
    pbg = np.empty(le_cap, np.int64)
    off0 = np.zeros(nw + 1, np.int64)
    offg = np.zeros(nw + 1, np.int64)
    kind0 = np.empty(nw, np.int32)
    kindg = np.empty(nw, np.int32)
    tw0 = np.empty(nw, np.int32)
    tp0 = np.empty(nw, np.int32)
    twg = np.empty(nw, np.int32)
    tpg = np.empty(nw, np.int32)
    E0 = np.zeros(nw, np.int64)
    Eg = np.zeros(nw, np.int64)
    agree = np.empty(nw, np.int64)
    m2s = np.empty(nm, np.int64)
    for i in range(nm):
        m2s[i] = m_vals[i] * m_vals[i]
    exits = np.empty(nm, np.int64)
    lastin = np.empty(nm, np.int64)
    pcap_used = np.zeros(1, np.int64)
    fcap_used = np.zeros(1, np.int64)
    exit0_r2 = exit0_r * exit0_r
    exitg_r2 = exitg_r * exitg_r if gamma_exit_root else np.int64(-1)
    tick = np.int64(1)
    for rep in range(rep_lo, rep_hi):
        ri = rep - rep_lo
        rseed = derive_seed(master_seed, rep)
        incon = False
        # variant 0
        stamp_p = tick
        tick += 1
        stamp_f = tick
        tick += 1
        pcap_used[0] = 0
        fcap_used[0] = 0
        for w in range(nw):
            stamp_l = tick
            tick += 1
            ln, kd, tw_, tp_ = _walk_le(
                rseed, False, lam, ndir, dirs,
                starts[w, 0], starts[w, 1], starts[w, 2],
                exit0_r, True, budget,
                fk0, fs0, fw0, fp0, stamp_f, fcap_used,
                pk0, ps0, pv0, stamp_p, pcap_used,
                lk, ls, lv, stamp_l,
                pb0, off0[w], np.int32(w))
            off0[w + 1] = off0[w] + ln
            kind0[w] = kd
            tw0[w] = tw_
            tp0[w] = tp_
            if kd == K_INCON:
                incon = True
                break
        fstamp0 = stamp_f
        if not incon:
            # gamma variant
            stamp_p = tick
            tick += 1
            stamp_f = tick
            tick += 1
            pcap_used[0] = 0
            fcap_used[0] = 0
            for w in range(nw):
                stamp_l = tick
                tick += 1
                ln, kd, tw_, tp_ = _walk_le(
                    rseed, True, lam, ndir, dirs,
                    starts[w, 0], starts[w, 1], starts[w, 2],
                    exitg_r, gamma_exit_root, budget,
                    fkg, fsg, fwg, fpg, stamp_f, fcap_used,
                    pkg, psg, pvg, stamp_p, pcap_used,
                    lk, ls, lv, stamp_l,
                    pbg, offg[w], np.int32(w))
                offg[w + 1] = offg[w] + ln
                kindg[w] = kd
                twg[w] = tw_
                tpg[w] = tp_
                if kd == K_INCON:
                    incon = True
                    break
        fstampg = stamp_f
        if incon:
            out_incon[ri] = 1
            out_hmis[ri] = 1
            for mi in range(nm):
                out_success[ri, mi] = 0
                out_pairfail[ri, mi] = np.int16(max(nb - 1, 0))
                for j in range(nb):
                    out_i[ri, mi, j] = 0
                    out_ii[ri, mi, j] = 0
                    out_iii[ri, mi, j] = 0
            out_ivfail[ri] = np.int16(ni)
            for j in range(ni):
                out_iv[ri, j] = 0
                out_h0[ri, j] = -1
                out_hg[ri, j] = -1
            continue
        out_incon[ri] = 0
        _walk_depths(nw, off0, kind0, tw0, tp0, E0)
        _walk_depths(nw, offg, kindg, twg, tpg, Eg)
        for w in range(nw):
            agree[w] = _agree_len(np.int64(w), off0, kind0, tw0, tp0, pb0,
                                  offg, kindg, twg, tpg, pbg, np.int64(le_cap))
        # pair conditions (i)(ii)(iii)
        for mi in range(nm):
            out_pairfail[ri, mi] = 0
        for jb in range(nb):
            j = n_pre + jb
            wj = np.int64(witness_abs[j])
            if wj < 0:
                for mi in range(nm):
                    out_i[ri, mi, jb] = 1
                    out_ii[ri, mi, jb] = 1
                    out_iii[ri, mi, jb] = 1
                continue
            stamp_s = tick
            tick += 1
            cnt = _fill_path_set(wj, off0, kind0, tw0, tp0, pb0, sk, ss,
                                 stamp_s, capC)
            if cnt < 0:
                incon = True
                break
            hj = _scan_hit_exits(np.int64(j), off0, kind0, tw0, tp0, pb0,
                                 sk, ss, stamp_s, m2s, exits)
            _last_inside(wj, off0, kind0, tw0, tp0, pb0, m2s, lastin)
            flag_ii = 1 if (hj < BIG and agree[j] >= hj + 1) else 0
            for mi in range(nm):
                flag_i = 1 if hj < exits[mi] else 0
                flag_iii = 1 if agree[wj] >= lastin[mi] + 1 else 0
                out_i[ri, mi, jb] = flag_i
                out_ii[ri, mi, jb] = flag_ii
                out_iii[ri, mi, jb] = flag_iii
                if not (flag_i and flag_ii and flag_iii):
                    out_pairfail[ri, mi] += 1
        # interior condition (iv): first hit on the union of earlier paths
        if not incon:
            stamp_s = tick
            tick += 1
            total = np.int64(0)
            for w in range(n_pre + nb):
                cnt = _fill_path_set(np.int64(w), off0, kind0, tw0, tp0, pb0,
                                     sk, ss, stamp_s, capC)
                if cnt < 0:
                    incon = True
                    break
                total += cnt
            ivfail = np.int16(0)
            if not incon:
                for ji in range(ni):
                    j = n_pre + nb + ji
                    q = _scan_hit_exits(np.int64(j), off0, kind0, tw0, tp0,
                                        pb0, sk, ss, stamp_s, m2s, exits)
                    flag = 1 if (q < BIG and agree[j] >= q + 1) else 0
                    out_iv[ri, ji] = flag
                    if flag == 0:
                        ivfail += 1
            out_ivfail[ri] = ivfail
        # heights from depth comparisons, both variants
        hmis = 0
        if not incon:
            for ji in range(ni):
                j = n_pre + nb + ji
                h0 = _height_at(starts[j, 0], starts[j, 1], starts[j, 2],
                                ndir, dirs, fk0, fs0, fw0, fp0, fstamp0,
                                off0, kind0, tw0, tp0, pb0, E0, exit0_r2)
                hg = _height_at(starts[j, 0], starts[j, 1], starts[j, 2],
                                ndir, dirs, fkg, fsg, fwg, fpg, fstampg,
                                offg, kindg, twg, tpg, pbg, Eg, exitg_r2)
                out_h0[ri, ji] = np.int8(h0)
                out_hg[ri, ji] = np.int8(hg)
                if h0 < 0 or hg < 0 or h0 != hg:
                    hmis = 1
        if incon:
            out_incon[ri] = 1
            out_hmis[ri] = 1
            for mi in range(nm):
                out_success[ri, mi] = 0
            continue
        out_hmis[ri] = hmis
        for mi in range(nm):
            ok = (out_pairfail[ri, mi] == 0 and out_ivfail[ri] == 0
                  and hmis == 0)
            out_success[ri, mi] = 1 if ok else 0


@njit(cache=True, nogil=True)
def height_sample_block(master_seed, rep_lo, rep_hi, ndir, dirs, lam,
                        use_markers, starts, n_interior_from,
                        exit_r, exit_is_root, budget, le_cap, pop_exp,
                        forest_exp, out_h, out_incon):
    """Single-variant truncated Wilson heights over the interior sites."""
    nw = starts.shape[0]
    ni = nw - n_interior_from
    capP = np.int64(1) << pop_exp
    capF = np.int64(1) << forest_exp
    pk = np.empty(capP, np.int64)
    ps = np.zeros(capP, np.int32)
    pv = np.empty(capP, np.int32)
    fk = np.empty(capF, np.int64)
    fs = np.zeros(capF, np.int32)
    fw = np.empty(capF, np.int32)
    fp = np.empty(capF, np.int32)
    lk = np.empty(capP, np.int64)
    ls = np.zeros(capP, np.int32)
    lv = np.empty(capP, np.int32)
    pb = np.empty(le_cap, np.int64)
    off = np.zeros(nw + 1, np.int64)
    kind = np.empty(nw, np.int32)
    tw = np.empty(nw, np.int32)
    tp = np.empty(nw, np.int32)
    E = np.zeros(nw, np.int64)
    pcap_used = np.zeros(1, np.int64)
    fcap_used = np.zeros(1, np.int64)
    exit_r2 = exit_r * exit_r if exit_is_root else np.int64(-1)
    tick = np.int64(1)
    for rep in range(rep_lo, rep_hi):
        ri = rep - rep_lo
        rseed = derive_seed(master_seed, rep)
        incon = False
        stamp_p = tick
        tick += 1
        stamp_f = tick
        tick += 1
        pcap_used[0] = 0
        fcap_used[0] = 0
        for w in range(nw):
            stamp_l = tick
            tick += 1
            ln, kd, tw_, tp_ = _walk_le(
                rseed, use_markers, lam, ndir, dirs,
                starts[w, 0], starts[w, 1], starts[w, 2],
                exit_r, exit_is_root, budget,
                fk, fs, fw, fp, stamp_f, fcap_used,
                pk, ps, pv, stamp_p, pcap_used,
                lk, ls, lv, stamp_l,
                pb, off[w], np.int32(w))
            off[w + 1] = off[w] + ln
            kind[w] = kd
            tw[w] = tw_
            tp[w] = tp_
            if kd == K_INCON:
                incon = True
                break
        if incon:
            out_incon[ri] = 1
            for ji in range(ni):
                out_h[ri, ji] = -1
            continue
        _walk_depths(nw, off, kind, tw, tp, E)
        bad = 0
        for ji in range(ni):
            j = n_interior_from + ji
            h = _height_at(starts[j, 0], starts[j, 1], starts[j, 2],
                           ndir, dirs, fk, fs, fw, fp, stamp_f,
                           off, kind, tw, tp, pb, E, exit_r2)
            out_h[ri, ji] = np.int8(h)
            if h < 0:
                bad = 1
        out_incon[ri] = bad


@njit(cache=True, nogil=True)
def wilson_batch(seed, lam, use_markers, nbr, order, out_parents):
    """Independent finite-volume Wilson samples, one row per replica."""
    for r in range(out_parents.shape[0]):
        rs = derive_seed(seed, r)
        wilson_finite(rs, lam, use_markers, nbr, order, out_parents[r])


@njit(cache=True, nogil=True)
def coupled_wilson_batch(seed, lam, nbr, order, out0, outg):
    """Marker-coupled pairs: row r of out0/outg share arrow stacks."""
    for r in range(out0.shape[0]):
        rs = derive_seed(seed, r)
        wilson_finite(rs, lam, False, nbr, order, out0[r])
        wilson_finite(rs, lam, True, nbr, order, outg[r])
