"""Numba kernels for the hot loops: cluster counting, sweeps, reachability,
and unit-capacity max-flow.  Pure array code; all graph structure arrives as
CSR arrays built by the domain constructors."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def cluster_count_bits(bits, edge_a, edge_b, nv, pm_a, pm_b):
    """Components of the open subgraph on all nv vertices, after pre-merging
    the wiring pairs (pm_a[i], pm_b[i])."""
    parent = np.empty(nv, np.int32)
    for v in range(nv):
        parent[v] = v
    comp = nv
    for i in range(pm_a.shape[0]):
        ra, rb = _find(parent, pm_a[i]), _find(parent, pm_b[i])
        if ra != rb:
            parent[rb] = ra
            comp -= 1
    for e in range(edge_a.shape[0]):
        if bits[e]:
            ra, rb = _find(parent, edge_a[e]), _find(parent, edge_b[e])
            if ra != rb:
                parent[rb] = ra
                comp -= 1
    return comp


@njit(cache=True, nogil=True)
def cluster_counts_range(edge_a, edge_b, nv, pm_a, pm_b, start, stop, out_k, out_o):
    """Cluster and open-edge counts for configuration indices [start, stop).

    Bit j of the configuration index is the state of edge j.
    """
    ne = edge_a.shape[0]
    parent = np.empty(nv, np.int32)
    for idx in range(start, stop):
        for v in range(nv):
            parent[v] = v
        comp = nv
        for i in range(pm_a.shape[0]):
            ra, rb = _find(parent, pm_a[i]), _find(parent, pm_b[i])
            if ra != rb:
                parent[rb] = ra
                comp -= 1
        o = 0
        for e in range(ne):
            if (idx >> e) & 1:
                o += 1
                ra, rb = _find(parent, edge_a[e]), _find(parent, edge_b[e])
                if ra != rb:
                    parent[rb] = ra
                    comp -= 1
        out_k[idx - start] = comp
        out_o[idx - start] = o


@njit(cache=True, nogil=True)
def cluster_roots(bits, edge_a, edge_b, nv, pm_a, pm_b, roots_out):
    """Fully path-compressed root of every vertex in the open subgraph."""
    parent = np.empty(nv, np.int32)
    for v in range(nv):
        parent[v] = v
    for i in range(pm_a.shape[0]):
        ra, rb = _find(parent, pm_a[i]), _find(parent, pm_b[i])
        if ra != rb:
            parent[rb] = ra
    for e in range(edge_a.shape[0]):
        if bits[e]:
            ra, rb = _find(parent, edge_a[e]), _find(parent, edge_b[e])
            if ra != rb:
                parent[rb] = ra
    for v in range(nv):
        roots_out[v] = _find(parent, v)


@njit(cache=True, nogil=True)
def heat_bath_sweep_kernel(bits, edge_a, edge_b, indptr, nbr, nbr_edge,
                           vclass, cls_indptr, cls_members, p, q, u):
    """One deterministic-scan heat-bath sweep, in place.

    For each edge in index order: resample open with probability p if the
    endpoints are connected in the configuration without that edge (wired
    classes act as teleports), else p / (p + (1-p) q).
    """
    nv = indptr.shape[0] - 1
    ncls = cls_indptr.shape[0] - 1
    visited = np.full(nv, -1, np.int64)
    cls_seen = np.full(ncls, -1, np.int64)
    queue = np.empty(nv, np.int32)
    p_iso = p / (p + (1.0 - p) * q)
    for e in range(edge_a.shape[0]):
        a, b = edge_a[e], edge_b[e]
        stamp = e
        head, tail = 0, 0
        queue[tail] = a
        tail += 1
        visited[a] = stamp
        connected = False
        c = vclass[a]
        if c >= 0:
            cls_seen[c] = stamp
            for t in range(cls_indptr[c], cls_indptr[c + 1]):
                w = cls_members[t]
                if visited[w] != stamp:
                    visited[w] = stamp
                    queue[tail] = w
                    tail += 1
        if visited[b] == stamp:
            connected = True
        while head < tail and not connected:
            v = queue[head]
            head += 1
            for t in range(indptr[v], indptr[v + 1]):
                ee = nbr_edge[t]
                if ee == e or bits[ee] == 0:
                    continue
                w = nbr[t]
                if visited[w] != stamp:
                    visited[w] = stamp
                    if w == b:
                        connected = True
                        break
                    queue[tail] = w
                    tail += 1
                    cw = vclass[w]
                    if cw >= 0 and cls_seen[cw] != stamp:
                        cls_seen[cw] = stamp
                        for s in range(cls_indptr[cw], cls_indptr[cw + 1]):
                            m = cls_members[s]
                            if visited[m] != stamp:
                                if m == b:
                                    connected = True
                                visited[m] = stamp
                                queue[tail] = m
                                tail += 1
                        if connected:
                            break
        p_open = p if connected else p_iso
        bits[e] = 1 if u[e] < p_open else 0


@njit(cache=True, nogil=True)
def reach_mask(indptr, nbr, nbr_edge, passable, source_mask, reached_out):
    """Mark everything reachable from source_mask through passable edges.

    nbr_edge entries of -1 denote virtual always-passable connections.
    """
    n = indptr.shape[0] - 1
    queue = np.empty(n, np.int32)
    tail = 0
    for v in range(n):
        reached_out[v] = source_mask[v]
        if source_mask[v]:
            queue[tail] = v
            tail += 1
    head = 0
    while head < tail:
        v = queue[head]
        head += 1
        for t in range(indptr[v], indptr[v + 1]):
            ee = nbr_edge[t]
            if ee >= 0 and not passable[ee]:
                continue
            w = nbr[t]
            if not reached_out[w]:
                reached_out[w] = True
                queue[tail] = w
                tail += 1


@njit(cache=True, nogil=True)
def max_vertex_disjoint_paths(indptr, nbr, nbr_edge, open_mask,
                              is_source, is_target, need):
    """Maximum number of vertex-disjoint open paths from sources to targets,
    stopping early once `need` paths are found (Menger via unit-cap flow).

    Vertices are split (in = 2v, out = 2v+1); every vertex, including
    sources and targets, carries unit capacity.
    """
    nv = indptr.shape[0] - 1
    # arc pairs (i, i^1 are mutual reverses): one split arc per vertex,
    # one directed arc per open incidence
    n_open_inc = 0
    for v in range(nv):
        for t in range(indptr[v], indptr[v + 1]):
            if open_mask[nbr_edge[t]]:
                n_open_inc += 1
    pair_count = nv + n_open_inc
    a_from = np.empty(2 * pair_count, np.int32)
    a_to = np.empty(2 * pair_count, np.int32)
    a_cap = np.empty(2 * pair_count, np.int8)
    k = 0
    for v in range(nv):
        a_from[k] = 2 * v
        a_to[k] = 2 * v + 1
        a_cap[k] = 1
        a_from[k + 1] = 2 * v + 1
        a_to[k + 1] = 2 * v
        a_cap[k + 1] = 0
        k += 2
    for v in range(nv):
        for t in range(indptr[v], indptr[v + 1]):
            if open_mask[nbr_edge[t]]:
                w = nbr[t]
                a_from[k] = 2 * v + 1
                a_to[k] = 2 * w
                a_cap[k] = 1
                a_from[k + 1] = 2 * w
                a_to[k + 1] = 2 * v + 1
                a_cap[k + 1] = 0
                k += 2
    # CSR over split nodes
    deg2 = np.zeros(2 * nv + 1, np.int32)
    for i in range(k):
        deg2[a_from[i] + 1] += 1
    for i in range(1, 2 * nv + 1):
        deg2[i] += deg2[i - 1]
    order = np.empty(k, np.int32)
    cur = deg2[:-1].copy()
    for i in range(k):
        order[cur[a_from[i]]] = i
        cur[a_from[i]] += 1

    parent_arc = np.full(2 * nv, -1, np.int32)
    in_queue = np.zeros(2 * nv, np.uint8)
    queue = np.empty(2 * nv, np.int32)
    flow = 0
    while flow < need:
        for i in range(2 * nv):
            parent_arc[i] = -1
            in_queue[i] = 0
        headq, tailq = 0, 0
        for v in range(nv):
            if is_source[v]:
                queue[tailq] = 2 * v
                tailq += 1
                in_queue[2 * v] = 1
        found = -1
        while headq < tailq and found < 0:
            nd = queue[headq]
            headq += 1
            for t in range(deg2[nd], deg2[nd + 1]):
                ai = order[t]
                if a_cap[ai] <= 0:
                    continue
                to = a_to[ai]
                if in_queue[to]:
                    continue
                in_queue[to] = 1
                parent_arc[to] = ai
                if to % 2 == 1 and is_target[to // 2]:
                    found = to
                    break
                queue[tailq] = to
                tailq += 1
        if found < 0:
            break
        nd = found
        while True:
            ai = parent_arc[nd]
            if ai < 0:
                break
            a_cap[ai] -= 1
            a_cap[ai ^ 1] += 1
            nd = a_from[ai]
        flow += 1
    return flow


@njit(cache=True, nogil=True)
def heat_bath_block(bits, edge_a, edge_b, indptr, nbr, nbr_edge,
                    vclass, cls_indptr, cls_members, p, q, u_block,
                    sweep0, thinning, codes_out, n_codes_before):
    """Run u_block.shape[0] heat-bath sweeps in place; record the
    configuration as a bit-code after every sweep whose 1-based global index
    is a multiple of `thinning`.  Returns the number of codes recorded.
    Codes require <= 62 edges."""
    ne = edge_a.shape[0]
    recorded = 0
    for s in range(u_block.shape[0]):
        heat_bath_sweep_kernel(bits, edge_a, edge_b, indptr, nbr, nbr_edge,
                               vclass, cls_indptr, cls_members, p, q, u_block[s])
        if (sweep0 + s + 1) % thinning == 0:
            code = np.int64(0)
            for e in range(ne):
                if bits[e]:
                    code |= np.int64(1) << np.int64(e)
            codes_out[n_codes_before + recorded] = code
            recorded += 1
    return recorded


@njit(cache=True, nogil=True)
def sw_sweep(bits, edge_a, edge_b, nv, pm_a, pm_b, q_int, u_vertex, u_edge, p,
             roots_buf):
    """One Swendsen-Wang sweep in place: uniform color per cluster root,
    then edges between equal-colored endpoints resampled Bernoulli(p)."""
    cluster_roots(bits, edge_a, edge_b, nv, pm_a, pm_b, roots_buf)
    for e in range(edge_a.shape[0]):
        ca = int(u_vertex[roots_buf[edge_a[e]]] * q_int)
        cb = int(u_vertex[roots_buf[edge_b[e]]] * q_int)
        bits[e] = 1 if (ca == cb and u_edge[e] < p) else 0


@njit(cache=True, nogil=True)
def cm_sweep(bits, edge_a, edge_b, nv, pm_a, pm_b, q, u_vertex, u_edge, p,
             roots_buf):
    """One Chayes-Machta sweep in place: clusters active with probability
    1/q; the active sub-lattice is refreshed as Bernoulli(p), the rest kept."""
    cluster_roots(bits, edge_a, edge_b, nv, pm_a, pm_b, roots_buf)
    inv_q = 1.0 / q
    for e in range(edge_a.shape[0]):
        if u_vertex[roots_buf[edge_a[e]]] < inv_q and u_vertex[roots_buf[edge_b[e]]] < inv_q:
            bits[e] = 1 if u_edge[e] < p else 0


@njit(cache=True, nogil=True)
def cluster_block(bits, edge_a, edge_b, nv, pm_a, pm_b, is_sw, q, p, u_block,
                  sweep0, thinning, codes_out, n_codes_before):
    """Block of SW (is_sw) or CM sweeps with per-sweep uniform rows laid out
    as [vertex uniforms | edge uniforms]; records thinned bit-codes."""
    ne = edge_a.shape[0]
    roots = np.empty(nv, np.int32)
    recorded = 0
    for s in range(u_block.shape[0]):
        uv = u_block[s, :nv]
        ue = u_block[s, nv:]
        if is_sw:
            sw_sweep(bits, edge_a, edge_b, nv, pm_a, pm_b, int(q), uv, ue, p, roots)
        else:
            cm_sweep(bits, edge_a, edge_b, nv, pm_a, pm_b, q, uv, ue, p, roots)
        if (sweep0 + s + 1) % thinning == 0:
            code = np.int64(0)
            for e in range(ne):
                if bits[e]:
                    code |= np.int64(1) << np.int64(e)
            codes_out[n_codes_before + recorded] = code
            recorded += 1
    return recorded


@njit(cache=True, nogil=True)
def dual_territory_bottom(bits, h_grid, v_grid, reached_out):
    """Flood the dual-closed territory attached below the bottom side of a
    rectangle.

    Faces are indexed (row, col) with row r standing for the unit squares at
    height y0 - 1 + r; rows 0 and H+1 are the fringe rows below and above the
    rectangle.  A vertical move crosses the horizontal edge h_grid[r, c]; a
    sideways move crosses the vertical edge v_grid[r-1, c]; moves across the
    boundary columns are forbidden (there are no faces beyond them).  A move
    is passable iff the crossed edge is closed.
    """
    n_rows, W = reached_out.shape
    H = n_rows - 2
    queue = np.empty(n_rows * W, np.int64)
    tail = 0
    for c in range(W):
        reached_out[0, c] = 1
        queue[tail] = c  # encoded r * W + c with r = 0
        tail += 1
    head = 0
    while head < tail:
        code = queue[head]
        head += 1
        r = code // W
        c = code % W
        # up: crosses h edge at (r, c) -- valid for r in [0, H]
        if r <= H and not reached_out[r + 1, c] and bits[h_grid[r, c]] == 0:
            reached_out[r + 1, c] = 1
            queue[tail] = (r + 1) * W + c
            tail += 1
        # down
        if r >= 1 and not reached_out[r - 1, c] and bits[h_grid[r - 1, c]] == 0:
            reached_out[r - 1, c] = 1
            queue[tail] = (r - 1) * W + c
            tail += 1
        # sideways moves exist only for real rows 1..H and interior columns
        if 1 <= r <= H:
            if c + 1 <= W - 1 and not reached_out[r, c + 1] and bits[v_grid[r - 1, c + 1]] == 0:
                reached_out[r, c + 1] = 1
                queue[tail] = r * W + c + 1
                tail += 1
            if c - 1 >= 0 and not reached_out[r, c - 1] and bits[v_grid[r - 1, c]] == 0:
                reached_out[r, c - 1] = 1
                queue[tail] = r * W + c - 1
                tail += 1


@njit(cache=True, nogil=True)
def multi_source_bfs_dist(indptr, nbr, nbr_edge, passable, source_mask, dist_out):
    """Edge-count BFS distances from the source set through passable edges;
    unreachable vertices get -1."""
    n = indptr.shape[0] - 1
    queue = np.empty(n, np.int32)
    tail = 0
    for v in range(n):
        if source_mask[v]:
            dist_out[v] = 0
            queue[tail] = v
            tail += 1
        else:
            dist_out[v] = -1
    head = 0
    while head < tail:
        v = queue[head]
        head += 1
        for t in range(indptr[v], indptr[v + 1]):
            if not passable[nbr_edge[t]]:
                continue
            w = nbr[t]
            if dist_out[w] < 0:
                dist_out[w] = dist_out[v] + 1
                queue[tail] = w
                tail += 1
