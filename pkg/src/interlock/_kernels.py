"""Numba kernels for the heavy per-source graph traversals.

All kernels operate on CSR adjacency (indptr int64, indices int32). The
per-source work runs in parallel, but every accumulated quantity is reduced
serially in ascending source order, so results are bit-identical regardless
of thread count or schedule.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def distance_pass(indptr, indices, sources, delta_sum, invd_sum,
                  sum_invd_out, ecc_out, reached_out, delta_buf, invd_buf,
                  with_delta):
    """BFS + shortest-path dependency accumulation for a chunk of sources.

    Per source s = sources[row]:
      delta_buf[row, v] = sum over t of sigma_st(v)/sigma_st  (Brandes delta)
      invd_buf[row, v]  = 1/d(s, v) for reached v != s, else 0
      sum_invd_out[row] = sum_v invd_buf[row, v]
      ecc_out[row]      = max finite d(s, v)
      reached_out[row]  = number of nodes reached from s (excluding s)

    The scratch rows are then folded into delta_sum / invd_sum in ascending
    row order and re-zeroed; callers must pass zeroed buffers on first use.
    with_delta=False skips the dependency accumulation (distance-only pass).
    """
    n = indptr.shape[0] - 1
    c = sources.shape[0]
    for row in prange(c):
        s = sources[row]
        dist = np.full(n, -1, dtype=np.int32)
        sigma = np.empty(n, dtype=np.float64)
        order = np.empty(n, dtype=np.int32)
        invd = invd_buf[row]

        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv1 = dist[v] + 1
            sv = sigma[v]
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                dw = dist[w]
                if dw < 0:
                    dist[w] = dv1
                    sigma[w] = sv
                    order[tail] = w
                    tail += 1
                elif dw == dv1:
                    sigma[w] += sv

        if with_delta:
            # Reverse-BFS dependency accumulation; rescanning edges instead
            # of storing predecessor lists keeps memory at O(n) per source.
            delta = delta_buf[row]
            for i in range(tail - 1, 0, -1):
                w = order[i]
                dwm = dist[w] - 1
                coeff = (1.0 + delta[w]) / sigma[w]
                for e in range(indptr[w], indptr[w + 1]):
                    v = indices[e]
                    if dist[v] == dwm:
                        delta[v] += sigma[v] * coeff
            delta[s] = 0.0  # endpoints are excluded from pair dependencies

        ecc = 0
        for i in range(1, tail):
            v = order[i]
            d = dist[v]
            if d > ecc:
                ecc = d
            invd[v] = 1.0 / d
        ecc_out[row] = ecc
        reached_out[row] = tail - 1

    # Ordered serial reduction: totals accumulate source by source so any
    # node's running sum sees contributions in ascending source order.
    for row in range(c):
        invd = invd_buf[row]
        total = 0.0
        if with_delta:
            delta = delta_buf[row]
            for v in range(n):
                delta_sum[v] += delta[v]
                delta[v] = 0.0
                x = invd[v]
                invd_sum[v] += x
                total += x
                invd[v] = 0.0
        else:
            for v in range(n):
                x = invd[v]
                invd_sum[v] += x
                total += x
                invd[v] = 0.0
        sum_invd_out[row] = total


@njit(cache=True)
def connected_components_labels(indptr, indices):
    """Component label per node; labels are dense and ordered by the
    smallest node index in each component."""
    n = indptr.shape[0] - 1
    labels = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    next_label = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = next_label
        queue[0] = start
        head = 0
        tail = 1
        while head < tail:
            v = queue[head]
            head += 1
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                if labels[w] < 0:
                    labels[w] = next_label
                    queue[tail] = w
                    tail += 1
        next_label += 1
    return labels


@njit(cache=True)
def bfs_relabel_order(indptr, indices, start):
    """BFS visitation order over the whole graph (restarting at the lowest
    unvisited node), used to relabel big graphs for cache locality."""
    n = indptr.shape[0] - 1
    visited = np.zeros(n, dtype=np.uint8)
    order = np.empty(n, dtype=np.int32)
    tail = 0
    for s0 in range(-1, n):
        s = start if s0 < 0 else s0
        if visited[s]:
            continue
        visited[s] = 1
        order[tail] = s
        head = tail
        tail += 1
        while head < tail:
            v = order[head]
            head += 1
            for e in range(indptr[v], indptr[v + 1]):
                w = indices[e]
                if not visited[w]:
                    visited[w] = 1
                    order[tail] = w
                    tail += 1
    return order


@njit(cache=True)
def like_degree_counts(indptr, indices, codes):
    """Per node, the number of neighbors carrying the same code."""
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    for v in range(n):
        c = codes[v]
        cnt = 0
        for e in range(indptr[v], indptr[v + 1]):
            if codes[indices[e]] == c:
                cnt += 1
        out[v] = cnt
    return out


@njit(cache=True, parallel=True)
def triangle_counts(indptr, indices):
    """Per-node triangle counts; neighbor lists must be sorted ascending."""
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    for v in prange(n):
        t = 0
        for e in range(indptr[v], indptr[v + 1]):
            u = indices[e]
            # Merge-intersect N(v) and N(u); every triangle through v is
            # found once per incident edge, i.e. twice in total.
            i = indptr[v]
            j = indptr[u]
            iend = indptr[v + 1]
            jend = indptr[u + 1]
            while i < iend and j < jend:
                a = indices[i]
                b = indices[j]
                if a == b:
                    t += 1
                    i += 1
                    j += 1
                elif a < b:
                    i += 1
                else:
                    j += 1
        out[v] = t // 2
    return out


@njit(cache=True)
def board_pair_keys(board_indptr, board_members, n_nodes):
    """Encode every within-board node pair (u < v) as u * n_nodes + v."""
    total = 0
    n_boards = board_indptr.shape[0] - 1
    for b in range(n_boards):
        s = board_indptr[b + 1] - board_indptr[b]
        total += s * (s - 1) // 2
    keys = np.empty(total, dtype=np.uint64)
    k = 0
    for b in range(n_boards):
        lo = board_indptr[b]
        hi = board_indptr[b + 1]
        for i in range(lo, hi):
            a = board_members[i]
            for j in range(i + 1, hi):
                c = board_members[j]
                if a < c:
                    u, v = a, c
                else:
                    u, v = c, a
                keys[k] = np.uint64(u) * np.uint64(n_nodes) + np.uint64(v)
                k += 1
    return keys
