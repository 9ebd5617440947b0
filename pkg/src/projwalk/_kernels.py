"""Numba kernels shared by the geometry, walk and statistics layers.

Conventions: words are int8 code arrays (see ``words``); a subgroup graph is
given by ``delta[v, code] -> vertex or -1`` with basepoint 0, plus a table of
greedy shortest paths ``paths[v, :plens[v]]`` from each vertex back to the
basepoint.  Every kernel that takes ``(arr, n)`` reads only ``arr[:n]``.
"""

import numba as nb
import numpy as np

_jit = nb.njit(cache=True, nogil=True)
# small helpers called once per letter: inline at the IR level to avoid call overhead
_inline = nb.njit(cache=True, nogil=True, inline="always")


@_jit
def reduce_into(src, n, out):
    top = 0
    for i in range(n):
        c = src[i]
        if top > 0 and out[top - 1] == (c ^ 1):
            top -= 1
        else:
            out[top] = c
            top += 1
    return top


@_inline
def dist(u, nu, v, nv):
    m = min(nu, nv)
    i = 0
    while i < m and u[i] == v[i]:
        i += 1
    return nu + nv - 2 * i


@_inline
def inv_mul_into(r, nr, x, nx, out):
    """out = reduce(r^-1 x); returns its length."""
    # common prefix of r and x cancels
    m = min(nr, nx)
    i = 0
    while i < m and r[i] == x[i]:
        i += 1
    top = 0
    for j in range(nr - 1, i - 1, -1):
        out[top] = r[j] ^ 1
        top += 1
    for j in range(i, nx):
        out[top] = x[j]
        top += 1
    return top


@_inline
def mul_into(u, nu, v, nv, out):
    i = 0
    m = min(nu, nv)
    while i < m and u[nu - 1 - i] == (v[i] ^ 1):
        i += 1
    top = 0
    for j in range(nu - i):
        out[top] = u[j]
        top += 1
    for j in range(i, nv):
        out[top] = v[j]
        top += 1
    return top


@_inline
def read_prefix(word, n, delta, start):
    """Longest prefix of word[:n] readable in the graph from ``start``."""
    v = start
    j = 0
    while j < n:
        nv = delta[v, word[j]]
        if nv < 0:
            break
        v = nv
        j += 1
    return j, v


@_jit
def strip_suffix(word, n, delta):
    """Longest suffix s of word[:n] with s^-1 readable from the basepoint.

    Returns (j, v): word[:j] is what remains and v is where reading s^-1 ends.
    """
    v = 0
    j = n
    while j > 0:
        nv = delta[v, word[j - 1] ^ 1]
        if nv < 0:
            break
        v = nv
        j -= 1
    return j, v


@_inline
def nearest_into(y, ny, delta, paths, plens, out):
    """Closest subgroup element to y, written to out; returns its length.

    y is in subgroup coordinates (the coset is Q itself).  The hull gate is the
    longest readable prefix; from its graph vertex the fixed greedy path leads
    to the nearest orbit point.
    """
    m, v = read_prefix(y, ny, delta, 0)
    pl = plens[v]
    k = 0
    while m > 0 and k < pl and y[m - 1] == (paths[v, k] ^ 1):
        m -= 1
        k += 1
    for j in range(m):
        out[j] = y[j]
    top = m
    for j in range(k, pl):
        out[top] = paths[v, j]
        top += 1
    return top


@_inline
def coset_gate_into(rep, nrep, x, nx, delta, paths, plens, buf, out):
    """gate(x, rep*Q) in absolute coordinates."""
    ny = inv_mul_into(rep, nrep, x, nx, buf)
    nq = nearest_into(buf, ny, delta, paths, plens, out)
    # reuse buf for the product rep*q
    nres = mul_into(rep, nrep, out, nq, buf)
    for j in range(nres):
        out[j] = buf[j]
    return nres


@_jit
def coset_proj_dist(rep, nrep, x, nx, y, ny, delta, paths, plens, b1, b2, b3):
    """d_Z(x, y) for Z = rep*Q, computed in subgroup coordinates."""
    n1 = inv_mul_into(rep, nrep, x, nx, b1)
    q1 = nearest_into(b1, n1, delta, paths, plens, b2)
    n2 = inv_mul_into(rep, nrep, y, ny, b1)
    q2 = nearest_into(b1, n2, delta, paths, plens, b3)
    return dist(b2, q1, b3, q2)


@_jit
def batch_gate(rep, nrep, X, xlens, delta, paths, plens, out, outlens):
    w = X.shape[1] + nrep + paths.shape[1] + 1
    buf = np.empty(2 * w, dtype=np.int8)
    tmp = np.empty(2 * w, dtype=np.int8)
    for i in range(X.shape[0]):
        n = coset_gate_into(rep, nrep, X[i], xlens[i], delta, paths, plens, buf, tmp)
        outlens[i] = n
        for j in range(n):
            out[i, j] = tmp[j]


@_jit
def batch_proj_dist(rep, nrep, X, xlens, y, ny, delta, paths, plens, out):
    """d_Z(X[i], y) for every row of X."""
    w = X.shape[1] + ny + nrep + paths.shape[1] + 1
    b1 = np.empty(w, dtype=np.int8)
    b2 = np.empty(w, dtype=np.int8)
    b3 = np.empty(w, dtype=np.int8)
    # the gate of y is shared by every row
    n2 = inv_mul_into(rep, nrep, y, ny, b1)
    q2 = nearest_into(b1, n2, delta, paths, plens, b3)
    for i in range(X.shape[0]):
        n1 = inv_mul_into(rep, nrep, X[i], xlens[i], b1)
        q1 = nearest_into(b1, n1, delta, paths, plens, b2)
        out[i] = dist(b2, q1, b3, q2)


@_jit
def batch_nearest(X, xlens, delta, paths, plens, out, outlens):
    for i in range(X.shape[0]):
        outlens[i] = nearest_into(X[i], xlens[i], delta, paths, plens, out[i])


@_jit
def batch_dist_to(G, glens, i0):
    out = np.empty(G.shape[0], dtype=np.int64)
    for i in range(G.shape[0]):
        out[i] = dist(G[i0], glens[i0], G[i], glens[i])
    return out


# --------------------------------------------------------------------------
# sup over cosets along a geodesic


@_jit
def _chain_value(word, j0, v0, j1, v1, paths, plens, scratch):
    # |reduce(path_{v0}^-1 . word[j0:j1] . path_{v1})|
    top = 0
    for k in range(plens[v0] - 1, -1, -1):
        c = paths[v0, k] ^ 1
        if top > 0 and scratch[top - 1] == (c ^ 1):
            top -= 1
        else:
            scratch[top] = c
            top += 1
    for k in range(j0, j1):
        c = word[k]
        if top > 0 and scratch[top - 1] == (c ^ 1):
            top -= 1
        else:
            scratch[top] = c
            top += 1
    for k in range(plens[v1]):
        c = paths[v1, k]
        if top > 0 and scratch[top - 1] == (c ^ 1):
            top -= 1
        else:
            scratch[top] = c
            top += 1
    return top


@_jit
def coset_chains(word, n, delta, paths, plens):
    """Every coset whose hull meets the geodesic [1, word] in an edge.

    Returns an (m, 5) array of rows (j0, v0, j1, v1, d): the hull meets the
    geodesic in word-prefix positions j0..j1, entering at graph vertex v0 and
    leaving at v1, and d = d_Z(1, word).
    """
    nv = delta.shape[0]
    start = np.zeros(nv, dtype=np.int64)
    sstate = np.arange(nv)
    nstart = np.zeros(nv, dtype=np.int64)
    nsstate = np.zeros(nv, dtype=np.int64)
    cap = 16
    rows = np.empty((cap, 5), dtype=np.int64)
    m = 0
    scratch = np.empty(n + 2 * paths.shape[1] + 2, dtype=np.int8)
    for j in range(n + 1):
        c = word[j] if j < n else -1
        for v in range(nv):
            ends = True
            if c >= 0 and delta[v, c] >= 0:
                ends = False
            if ends and j > start[v]:
                d = _chain_value(word, start[v], sstate[v], j, v, paths, plens, scratch)
                if m == cap:
                    cap *= 2
                    bigger = np.empty((cap, 5), dtype=np.int64)
                    bigger[:m] = rows[:m]
                    rows = bigger
                rows[m, 0] = start[v]
                rows[m, 1] = sstate[v]
                rows[m, 2] = j
                rows[m, 3] = v
                rows[m, 4] = d
                m += 1
        if c < 0:
            break
        for u in range(nv):
            pred = delta[u, c ^ 1]
            if pred >= 0:
                nstart[u] = start[pred]
                nsstate[u] = sstate[pred]
            else:
                nstart[u] = j + 1
                nsstate[u] = u
        for u in range(nv):
            start[u] = nstart[u]
            sstate[u] = nsstate[u]
    return rows[:m]


@_jit
def chain_sup(word, n, delta, paths, plens):
    """(sup, j0, v0) over all cosets; j0 = -1 when every d_Z(1, word) is 0."""
    rows = coset_chains(word, n, delta, paths, plens)
    best = 0
    bj = -1
    bv = 0
    for r in range(rows.shape[0]):
        if rows[r, 4] > best:
            best = rows[r, 4]
            bj = rows[r, 0]
            bv = rows[r, 1]
    return best, bj, bv


@_jit
def axis_run_sup(word, n, axis):
    """Longest run of axis letters (either sign); returns (sup, run start)."""
    best = 0
    bstart = -1
    run = 0
    a0 = 2 * axis
    for j in range(n):
        c = word[j]
        if c == a0 or c == a0 + 1:
            if run > 0 and word[j - 1] == c:
                run += 1
            else:
                run = 1
            if run > best:
                best = run
                bstart = j - run + 1
        else:
            run = 0
    return best, bstart


# --------------------------------------------------------------------------
# random walk


@_jit
def sample_index(u, cdf):
    m = cdf.shape[0]
    for j in range(m - 1):
        if u < cdf[j]:
            return j
    return m - 1


@_jit
def walk_increments(U, cdf, out):
    for i in range(U.shape[0]):
        out[i] = sample_index(U[i], cdf)


@_jit
def apply_steps(idx, steps, slens, stack, top):
    """Push the step words idx[...] onto a reduced stack; returns new top."""
    for i in range(idx.shape[0]):
        s = idx[i]
        for q in range(slens[s]):
            c = steps[s, q]
            if top > 0 and stack[top - 1] == (c ^ 1):
                top -= 1
            else:
                stack[top] = c
                top += 1
    return top


@_jit
def walk_sup_checkpoints(idx, steps, slens, axis, checkpoints, snaps, snaplens, sups, starts):
    """Walk the increments, streaming the longest axis run of the reduced prefix.

    Each stack slot carries the run length ending there and the prefix maximum,
    so a pop restores the previous maximum in O(1).  At each checkpoint step
    the reduced prefix is copied into ``snaps`` (when ``snaps`` has room) and
    the running sup and its run start are recorded.  ``axis < 0`` disables the
    streaming sup (recorded as -1).
    """
    n = idx.shape[0]
    cap = n * steps.shape[1] + 1
    stack = np.empty(cap, dtype=np.int8)
    run = np.zeros(cap, dtype=np.int32)
    pmax = np.zeros(cap, dtype=np.int32)
    parg = np.zeros(cap, dtype=np.int32)
    a0 = 2 * axis
    top = 0
    ck = 0
    ncheck = checkpoints.shape[0]
    while ck < ncheck and checkpoints[ck] == 0:
        snaplens[ck] = 0
        sups[ck] = 0 if axis >= 0 else -1
        starts[ck] = -1
        ck += 1
    for i in range(n):
        s = idx[i]
        for q in range(slens[s]):
            c = steps[s, q]
            if top > 0 and stack[top - 1] == (c ^ 1):
                top -= 1
            else:
                stack[top] = c
                r = 0
                if axis >= 0 and (c == a0 or c == a0 + 1):
                    r = 1
                    if top > 0 and stack[top - 1] == c:
                        r = run[top - 1] + 1
                run[top] = r
                prev = pmax[top - 1] if top > 0 else 0
                if r > prev:
                    pmax[top] = r
                    parg[top] = top
                else:
                    pmax[top] = prev
                    parg[top] = parg[top - 1] if top > 0 else -1
                top += 1
        while ck < ncheck and checkpoints[ck] == i + 1:
            if snaps.shape[1] >= top:
                for j in range(top):
                    snaps[ck, j] = stack[j]
            snaplens[ck] = top
            if axis >= 0:
                if top > 0 and pmax[top - 1] > 0:
                    sups[ck] = pmax[top - 1]
                    e = parg[top - 1]
                    starts[ck] = e - run[e] + 1
                else:
                    sups[ck] = 0
                    starts[ck] = -1
            else:
                sups[ck] = -1
                starts[ck] = -1
            ck += 1
    return top


# --------------------------------------------------------------------------
# second-moment diagnostics


@_inline
def _push_table(stack, tlen, tend, top, c, invert, delta):
    """Push c; fill the readable-prefix table for the new top slot.

    tlen[top, v] / tend[top, v]: length and end vertex of the longest prefix,
    read from the top slot downwards (letters inverted if ``invert``), that is
    readable from vertex v.
    """
    stack[top] = c
    nv = delta.shape[0]
    e = (c ^ 1) if invert else c
    for v in range(nv):
        w = delta[v, e]
        if w < 0:
            tlen[top, v] = 0
            tend[top, v] = v
        elif top == 0:
            tlen[top, v] = 1
            tend[top, v] = w
        else:
            tlen[top, v] = 1 + tlen[top - 1, w]
            tend[top, v] = tend[top - 1, w]


@_inline
def _top_projection(stack, tlen, tend, top, invert, paths, plens):
    """d_{Q}(1, u) where u is the word read from the stack top downwards."""
    if top == 0:
        return 0
    m = tlen[top - 1, 0]
    v = tend[top - 1, 0]
    pl = plens[v]
    k = 0
    # last letter of the readable prefix sits at stack slot top - m
    while m > 0 and k < pl:
        c = stack[top - m]
        last = (c ^ 1) if invert else c
        if last == (paths[v, k] ^ 1):
            m -= 1
            k += 1
        else:
            break
    return m + pl - k


@_inline
def _apply_with_table(stack, tlen, tend, top, steps, s, wl, reverse, invert, delta):
    # steps[s, :wl] is the step word; indexing the table directly avoids a row view per step
    if reverse:
        for q in range(wl - 1, -1, -1):
            c = steps[s, q]
            if top > 0 and stack[top - 1] == (c ^ 1):
                top -= 1
            else:
                _push_table(stack, tlen, tend, top, c, invert, delta)
                top += 1
    else:
        for q in range(wl):
            c = steps[s, q]
            if top > 0 and stack[top - 1] == (c ^ 1):
                top -= 1
            else:
                _push_table(stack, tlen, tend, top, c, invert, delta)
                top += 1
    return top


@_jit
def second_moment_trial(idx, steps, slens, k, wtable, mpow, thresh, delta, paths, plens,
                        ygap, wgap, ycount, wcount, lcount, rcount):
    """Indicators W_i, L_i, R_i, Y_i for i = 1..n-k of one trial.

    W_i: the k-step window after step i multiplies to x_n (looked up in
    ``wtable`` by its base-m index code).  L_i: d_Q(w_i^-1, 1) <= thresh.
    R_i: d_Q(1, w_{i+k}^-1 w_n) <= thresh.  Per-i counts are accumulated into
    the count arrays (slot i-1).  Returns (X, Y pairs with gap >= ygap,
    W pairs with gap >= wgap).
    """
    n = idx.shape[0]
    nv = delta.shape[0]
    cap = n * steps.shape[1] + 1
    stack = np.empty(cap, dtype=np.int8)
    tlen = np.zeros((cap, nv), dtype=np.int32)
    tend = np.zeros((cap, nv), dtype=np.int32)
    m = n - k
    lflag = np.zeros(m + 1, dtype=np.bool_)
    rflag = np.zeros(m + 1, dtype=np.bool_)
    # forward pass: L_i uses w_i^-1, read top-down with inverted letters
    top = 0
    for i in range(1, m + 1):
        s = idx[i - 1]
        top = _apply_with_table(stack, tlen, tend, top, steps, s, slens[s], False, True, delta)
        lflag[i] = _top_projection(stack, tlen, tend, top, True, paths, plens) <= thresh
    # backward pass: suffix w_{i+k}^-1 w_n built by prepending steps
    top = 0
    for i in range(m, 0, -1):
        if i < m:
            s = idx[i + k]
            top = _apply_with_table(stack, tlen, tend, top, steps, s, slens[s], True, False, delta)
        rflag[i] = _top_projection(stack, tlen, tend, top, False, paths, plens) <= thresh
    x = 0
    ypos = np.empty(m, dtype=np.int64)
    wpos = np.empty(m, dtype=np.int64)
    nw = 0
    mm = steps.shape[0]
    for i in range(1, m + 1):
        code = 0
        for q in range(k):
            code = code * mm + idx[i + q]
        w = wtable[code]
        if lflag[i]:
            lcount[i - 1] += 1
        if rflag[i]:
            rcount[i - 1] += 1
        if w:
            wcount[i - 1] += 1
            wpos[nw] = i
            nw += 1
            if lflag[i] and rflag[i]:
                ycount[i - 1] += 1
                ypos[x] = i
                x += 1
    return x, _pairs_with_gap(ypos, x, ygap), _pairs_with_gap(wpos, nw, wgap)


@_jit
def _pairs_with_gap(pos, m, gap):
    # pos[:m] sorted ascending; count pairs a < b with pos[b] - pos[a] >= gap
    total = 0
    a = 0
    for b in range(m):
        while a < b and pos[b] - pos[a] >= gap:
            a += 1
        total += a
    return total


@_jit
def window_codes(idx, k, mm):
    out = np.empty(idx.shape[0] - k + 1, dtype=np.int64)
    for i in range(out.shape[0]):
        code = 0
        for q in range(k):
            code = code * mm + idx[i + q]
        out[i] = code
    return out


# --------------------------------------------------------------------------
# distance formula


@_jit
def chain_profile(word, j0, v0, j1, delta, paths, plens):
    """Projection distances along one chain of the geodesic.

    For k in [j0, j1] returns (state_k, d_Z(h_0, h_k), d_Z(h_k, h_N)) where h_k
    is the length-k prefix and Z is the coset entered at (j0, v0).
    """
    m = j1 - j0 + 1
    states = np.empty(m, dtype=np.int64)
    fwd = np.empty(m, dtype=np.int64)
    bwd = np.empty(m, dtype=np.int64)
    v = v0
    for q in range(m):
        states[q] = v
        if q < m - 1:
            v = delta[v, word[j0 + q]]
    scratch = np.empty(m + 2 * paths.shape[1] + 2, dtype=np.int8)
    v1 = states[m - 1]
    for q in range(m):
        fwd[q] = _chain_value(word, j0, v0, j0 + q, states[q], paths, plens, scratch)
        bwd[q] = _chain_value(word, j0 + q, states[q], j1, v1, paths, plens, scratch)
    return states, fwd, bwd


@_jit
def reduced_from_draws(first, draws, out):
    """Reduced word from uniform draws: each later letter skips the inverse of its predecessor."""
    out[0] = first
    prev = first
    for i in range(draws.shape[0]):
        c = draws[i]
        if c >= (prev ^ 1):
            c += 1
        out[i + 1] = c
        prev = c


@_jit
def batch_chain_sup(X, xlens, delta, paths, plens, out):
    for i in range(X.shape[0]):
        best, _, _ = chain_sup(X[i], xlens[i], delta, paths, plens)
        out[i] = best
