"""Compiled inner loops. Callers pass plain arrays; see the public modules."""

from __future__ import annotations

import numpy as np
from numba import njit

# Minimum gain accepted as an improvement; integer instances gain at least 1.
IMPROVE_EPS = 1e-9


@njit(cache=True)
def nearest_neighbor(dist, cluster_of, m):
    n = dist.shape[0]
    best_tour = np.empty(m, dtype=np.int64)
    tour = np.empty(m, dtype=np.int64)
    used = np.zeros(m, dtype=np.bool_)
    best_w = np.inf
    for start in range(n):
        used[:] = False
        tour[0] = start
        used[cluster_of[start]] = True
        cur = start
        w = 0.0
        for t in range(1, m):
            nxt = -1
            nd = np.inf
            for u in range(n):
                if not used[cluster_of[u]] and dist[cur, u] < nd:
                    nd = dist[cur, u]
                    nxt = u
            tour[t] = nxt
            used[cluster_of[nxt]] = True
            w += nd
            cur = nxt
        w += dist[cur, start]
        if w < best_w:
            best_w = w
            best_tour[:] = tour
    return best_tour, best_w


@njit(cache=True)
def cluster_optimize(dist, cluster_ptr, cluster_nodes, order):
    """Shortest cycle through the clusters in ``order``, one node per cluster."""
    m = order.shape[0]
    s = 0
    for c in range(cluster_ptr.shape[0] - 1):
        s = max(s, cluster_ptr[c + 1] - cluster_ptr[c])
    cost = np.empty((m, s))
    pred = np.empty((m, s), dtype=np.int64)
    best = np.empty(m, dtype=np.int64)
    best_w = np.inf

    first = order[0]
    for si in range(cluster_ptr[first], cluster_ptr[first + 1]):
        src = cluster_nodes[si]
        c1 = order[1]
        lo1 = cluster_ptr[c1]
        for j in range(cluster_ptr[c1 + 1] - lo1):
            cost[1, j] = dist[src, cluster_nodes[lo1 + j]]
            pred[1, j] = -1
        for layer in range(2, m):
            cp = order[layer - 1]
            cc = order[layer]
            lop = cluster_ptr[cp]
            np_ = cluster_ptr[cp + 1] - lop
            loc = cluster_ptr[cc]
            for j in range(cluster_ptr[cc + 1] - loc):
                v = cluster_nodes[loc + j]
                bw = np.inf
                bp = -1
                for i in range(np_):
                    w = cost[layer - 1, i] + dist[cluster_nodes[lop + i], v]
                    if w < bw:
                        bw = w
                        bp = i
                cost[layer, j] = bw
                pred[layer, j] = bp
        cl = order[m - 1]
        lol = cluster_ptr[cl]
        close_w = np.inf
        close_j = -1
        for j in range(cluster_ptr[cl + 1] - lol):
            w = cost[m - 1, j] + dist[cluster_nodes[lol + j], src]
            if w < close_w:
                close_w = w
                close_j = j
        if close_w < best_w:
            best_w = close_w
            best[0] = src
            j = close_j
            for layer in range(m - 1, 0, -1):
                best[layer] = cluster_nodes[cluster_ptr[order[layer]] + j]
                j = pred[layer, j]
    return best, best_w


@njit(cache=True)
def apply_move(t, i, j, k, move):
    """Tour ``A B C D`` with ``B = t[i+1..j]`` and ``C = t[j+1..k]`` reconnected."""
    m = t.shape[0]
    out = np.empty(m, dtype=t.dtype)
    out[: i + 1] = t[: i + 1]
    b = t[i + 1 : j + 1]
    c = t[j + 1 : k + 1]
    lb = b.shape[0]
    lc = c.shape[0]
    p = i + 1
    if move == 1:
        out[p : p + lb] = b[::-1]
        out[p + lb : p + lb + lc] = c
    elif move == 2:
        out[p : p + lb] = b
        out[p + lb : p + lb + lc] = c[::-1]
    elif move == 3:
        out[p : p + lc] = c[::-1]
        out[p + lc : p + lc + lb] = b[::-1]
    elif move == 4:
        out[p : p + lb] = b[::-1]
        out[p + lb : p + lb + lc] = c[::-1]
    elif move == 5:
        out[p : p + lc] = c
        out[p + lc : p + lc + lb] = b
    elif move == 6:
        out[p : p + lc] = c
        out[p + lc : p + lc + lb] = b[::-1]
    else:
        out[p : p + lc] = c[::-1]
        out[p + lc : p + lc + lb] = b
    out[k + 1 :] = t[k + 1 :]
    return out


@njit(cache=True)
def position_matrix(sub, t):
    """``p[x, y]`` = distance between the nodes at tour positions x and y.

    Column m repeats column 0 so the closing edge needs no modulo.
    """
    m = t.shape[0]
    p = np.empty((m, m + 1))
    for x in range(m):
        for y in range(m):
            p[x, y] = sub[t[x], t[y]]
        p[x, m] = p[x, 0]
    return p


@njit(cache=True)
def triple_delta(p, i, j, k):
    """Best of the seven reconnections after removing edges at positions i < j < k.

    Move order: B' C, B C', C' B', B' C', C B, C B', C' B. Returns ``(delta, move)``;
    the earliest move wins ties.
    """
    ab = p[i, i + 1]
    bc = p[j, j + 1]
    cd = p[k, k + 1]
    removed = ab + bc + cd
    a_b2 = p[i, j]
    a_c1 = p[i, j + 1]
    a_c2 = p[i, k]
    b1_c1 = p[i + 1, j + 1]
    b1_c2 = p[i + 1, k]
    b1_d1 = p[i + 1, k + 1]
    b2_c2 = p[j, k]
    b2_d1 = p[j, k + 1]
    c1_d1 = p[j + 1, k + 1]
    best = a_b2 + b1_c1 + cd - removed
    move = 1
    d = ab + b2_c2 + c1_d1 - removed
    if d < best:
        best, move = d, 2
    d = a_c2 + bc + b1_d1 - removed
    if d < best:
        best, move = d, 3
    d = a_b2 + b1_c2 + c1_d1 - removed
    if d < best:
        best, move = d, 4
    d = a_c1 + b1_c2 + b2_d1 - removed
    if d < best:
        best, move = d, 5
    d = a_c1 + b2_c2 + b1_d1 - removed
    if d < best:
        best, move = d, 6
    d = a_c2 + b1_c1 + b2_d1 - removed
    if d < best:
        best, move = d, 7
    return best, move


@njit(cache=True)
def best_three_opt_move(sub, t):
    """Best (most negative) move over all edge triples; ``(delta, i, j, k, move)``.

    Scans every triple i < j < k; the first one in lexicographic order wins
    ties, then the earliest move type. ``move = -1`` if nothing improves.
    """
    m = t.shape[0]
    p = position_matrix(sub, t)
    best_delta = -IMPROVE_EPS
    bi = bj = bk = bmove = -1
    for i in range(m - 2):
        pa = p[i]
        pb1 = p[i + 1]
        ab = pa[i + 1]
        for j in range(i + 1, m - 1):
            pb2 = p[j]
            pc1 = p[j + 1]
            bc = pb2[j + 1]
            a_b2 = pa[j]
            a_c1 = pa[j + 1]
            b1_c1 = pb1[j + 1]
            for k in range(j + 1, m):
                c2_d1 = p[k, k + 1]
                removed = ab + bc + c2_d1
                a_c2 = pa[k]
                b1_c2 = pb1[k]
                b2_c2 = pb2[k]
                c1_d1 = pc1[k + 1]
                b1_d1 = pb1[k + 1]
                b2_d1 = pb2[k + 1]
                # same order as triple_delta
                d = a_b2 + b1_c1 + c2_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 1
                d = ab + b2_c2 + c1_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 2
                d = a_c2 + bc + b1_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 3
                d = a_b2 + b1_c2 + c1_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 4
                d = a_c1 + b1_c2 + b2_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 5
                d = a_c1 + b2_c2 + b1_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 6
                d = a_c2 + b1_c1 + b2_d1 - removed
                if d < best_delta:
                    best_delta, bi, bj, bk, bmove = d, i, j, k, 7
    return best_delta, bi, bj, bk, bmove


@njit(cache=True)
def _edge_at(pos, u, v, m):
    # position of the tour edge joining tour neighbours u and v
    if (pos[u] + 1) % m == pos[v]:
        return pos[u]
    return pos[v]


@njit(cache=True)
def _sorted3(a, b, c):
    if a > b:
        a, b = b, a
    if b > c:
        b, c = c, b
    if a > b:
        a, b = b, a
    return a, b, c


@njit(cache=True)
def quick_three_opt_move(sub, t, nbr, depth):
    """First improving move reachable through the ``depth`` nearest neighbours.

    Follows the usual positive-gain chain t1 t2 | t3 t4 | t5 t6: each added
    edge must be shorter than the running gain. A heuristic filter, so
    returning ``move = -1`` does not prove local optimality.
    """
    m = t.shape[0]
    p = position_matrix(sub, t)
    pos = np.empty(m, dtype=np.int64)
    for x in range(m):
        pos[t[x]] = x
    for t1 in range(m):
        for side in range(2):
            t2 = t[(pos[t1] + 1) % m] if side == 0 else t[(pos[t1] - 1) % m]
            e1 = _edge_at(pos, t1, t2, m)
            x1 = sub[t1, t2]
            for a in range(depth):
                t3 = nbr[t2, a]
                if t3 == t2 or t3 == t1:
                    continue
                g1 = x1 - sub[t2, t3]
                if g1 <= 0.0:
                    break
                for side2 in range(2):
                    t4 = t[(pos[t3] + 1) % m] if side2 == 0 else t[(pos[t3] - 1) % m]
                    e2 = _edge_at(pos, t3, t4, m)
                    if e2 == e1:
                        continue
                    g2 = g1 + sub[t3, t4]
                    for b in range(depth):
                        t5 = nbr[t4, b]
                        if t5 == t4:
                            continue
                        if g2 - sub[t4, t5] <= 0.0:
                            break
                        for side3 in range(2):
                            t6 = t[(pos[t5] + 1) % m] if side3 == 0 else t[(pos[t5] - 1) % m]
                            e3 = _edge_at(pos, t5, t6, m)
                            if e3 == e1 or e3 == e2:
                                continue
                            i, j, k = _sorted3(e1, e2, e3)
                            d, mv = triple_delta(p, i, j, k)
                            if d < -IMPROVE_EPS:
                                return d, i, j, k, mv
    return 0.0, -1, -1, -1, -1


@njit(cache=True)
def neighbour_lists(sub):
    m = sub.shape[0]
    nbr = np.empty((m, m), dtype=np.int64)
    for v in range(m):
        nbr[v] = np.argsort(sub[v], kind="mergesort")
    return nbr


@njit(cache=True)
def three_opt(sub, depth):
    """3-opt on the induced TSP to a certified local optimum.

    ``sub`` is indexed by tour position. Each step applies the best move over
    every triple until none improves. With ``depth > 0`` a first-improvement
    phase on ``depth``-nearest neighbour lists runs before that.
    """
    m = sub.shape[0]
    t = np.arange(m)
    if depth > 0:
        nbr = neighbour_lists(sub)
        depth = min(depth, m)
        while True:
            delta, i, j, k, move = quick_three_opt_move(sub, t, nbr, depth)
            if move < 0:
                break
            t = apply_move(t, i, j, k, move)
    while True:
        delta, i, j, k, move = best_three_opt_move(sub, t)
        if move < 0:
            break
        t = apply_move(t, i, j, k, move)
    return t


@njit(cache=True)
def select_next(cur, eta_beta, tau, cluster_of, used, q0, r_exploit, r_sample):
    n = tau.shape[0]
    total = 0.0
    best_a = -1.0
    best_v = -1
    for v in range(n):
        if used[cluster_of[v]]:
            continue
        a = tau[cur, v] * eta_beta[cur, v]
        total += a
        if a > best_a:
            best_a = a
            best_v = v
    if best_v < 0:
        return -1, False
    if r_exploit < q0:
        return best_v, True
    target = r_sample * total
    acc = 0.0
    last = -1
    for v in range(n):
        if used[cluster_of[v]]:
            continue
        acc += tau[cur, v] * eta_beta[cur, v]
        last = v
        if acc > target:
            return v, False
    # accumulated rounding left target just above the sum
    return last, False


@njit(cache=True)
def local_update(tau, u, v, xi, increment):
    val = (1.0 - xi) * tau[u, v] + increment
    tau[u, v] = val
    tau[v, u] = val


@njit(cache=True)
def construct_ant(start, eta_beta, tau, cluster_of, m, q0, xi, increment, uniforms):
    """Build one tour with local updates after every step and on the closing edge.

    ``uniforms`` holds two draws per step: the exploit test, then the roulette.
    Returns the tour and the number of greedy (argmax) choices made.
    """
    tour = np.empty(m, dtype=np.int64)
    used = np.zeros(m, dtype=np.bool_)
    tour[0] = start
    used[cluster_of[start]] = True
    cur = start
    greedy = 0
    for t in range(1, m):
        v, took_max = select_next(cur, eta_beta, tau, cluster_of, used, q0, uniforms[2 * (t - 1)], uniforms[2 * (t - 1) + 1])
        if took_max:
            greedy += 1
        local_update(tau, cur, v, xi, increment)
        tour[t] = v
        used[cluster_of[v]] = True
        cur = v
    local_update(tau, cur, start, xi, increment)
    return tour, greedy

