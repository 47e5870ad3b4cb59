"""Numba kernels: cluster decomposition, Metropolis sweeps, batch enumeration.

Everything here works on the flat CSR arrays produced by
``CellComplex.arrays()``. The Monte Carlo state is a flat face->cluster-id
labeling plus doubly-linked face lists and per-cluster aggregates
(size, sum of per-face upper-bound exponents, merge-vertex counts per
degree level), so both directions of a single-site flip can be evaluated
without touching more than the affected clusters. Removing a merge vertex
runs a multi-source search that stops as soon as at most one component is
still open, which keeps the common "cluster does not actually split" case
cheap; the one unexplored component's aggregates are recovered by
subtraction.

Cluster weight factor per mode (log scale), singletons always contribute 0:

    mode 0 (|g|<=1):       (1 - size) * ln 2
    mode 1 (lower bound):  ln(min_b) - size * ln 2
    mode 2 (upper bound):  sum_sigma - size * ln 2   (0 weight if min_b == 0)
    mode 3 (exact):        ln(q_exact) - size * ln 2
"""

import numpy as np
from numba import njit, types
from numba.typed import Dict

LN2 = float(np.log(2.0))

MAX_DEG = 4
NEG_INF = float("-inf")

_MEMO_KEY = types.UniTuple(types.uint64, 2)


# ---------------------------------------------------------------------------
# from-scratch decomposition (observations, oracle, reference paths)


@njit(cache=True)
def uf_decompose(labels, vf_indptr, vf_data, offx, offy, n_F, use_winding):
    """Union faces through merge vertices; track winding on tori.

    Returns (root, windx, windy): per-face root id and, stored at root
    position, whether the cluster winds each fundamental cycle.
    """
    parent = np.arange(n_F, dtype=np.int64)
    ox = np.zeros(n_F, dtype=np.int64)
    oy = np.zeros(n_F, dtype=np.int64)
    sz = np.ones(n_F, dtype=np.int64)
    windx = np.zeros(n_F, dtype=np.bool_)
    windy = np.zeros(n_F, dtype=np.bool_)

    for v in range(labels.shape[0]):
        if labels[v] == 0:
            continue
        s0 = vf_indptr[v]
        s1 = vf_indptr[v + 1]
        f0 = vf_data[s0]
        for s in range(s0 + 1, s1):
            f1 = vf_data[s]
            dx = offx[s] - offx[s0]
            dy = offy[s] - offy[s0]
            # find roots with accumulated offsets
            ra = f0
            ax = 0
            ay = 0
            while parent[ra] != ra:
                ax += ox[ra]
                ay += oy[ra]
                ra = parent[ra]
            rb = f1
            bx = 0
            by = 0
            while parent[rb] != rb:
                bx += ox[rb]
                by += oy[rb]
                rb = parent[rb]
            # path compression (two passes, rewriting offsets to root)
            node = f0
            cx = 0
            cy = 0
            while parent[node] != node:
                nxt = parent[node]
                px = ox[node]
                py = oy[node]
                ox[node] = ax - cx
                oy[node] = ay - cy
                parent[node] = ra
                cx += px
                cy += py
                node = nxt
            node = f1
            cx = 0
            cy = 0
            while parent[node] != node:
                nxt = parent[node]
                px = ox[node]
                py = oy[node]
                ox[node] = bx - cx
                oy[node] = by - cy
                parent[node] = rb
                cx += px
                cy += py
                node = nxt
            if ra == rb:
                if use_winding:
                    ddx = bx - ax - dx
                    ddy = by - ay - dy
                    if ddx != 0:
                        windx[ra] = True
                    if ddy != 0:
                        windy[ra] = True
                continue
            # attach smaller under larger: pos(f1) - pos(f0) = (dx, dy)
            if sz[ra] >= sz[rb]:
                parent[rb] = ra
                ox[rb] = ax + dx - bx
                oy[rb] = ay + dy - by
                sz[ra] += sz[rb]
                windx[ra] = windx[ra] or windx[rb]
                windy[ra] = windy[ra] or windy[rb]
            else:
                parent[ra] = rb
                ox[ra] = bx - dx - ax
                oy[ra] = by - dy - ay
                sz[rb] += sz[ra]
                windx[rb] = windx[rb] or windx[ra]
                windy[rb] = windy[rb] or windy[ra]

    root = np.empty(n_F, dtype=np.int64)
    for f in range(n_F):
        r = f
        while parent[r] != r:
            r = parent[r]
        root[f] = r
    return root, windx, windy


# ---------------------------------------------------------------------------
# exact component counting for one cluster


@njit(cache=True)
def count_valid_colorings(masks, k):
    """Number of k-bit colorings where no mask is monochromatic.

    ``masks[i]`` selects the faces around one merge vertex (as local bits);
    a coloring survives iff every selected group is neither all 0 nor all 1.
    """
    total = 0
    n_masks = masks.shape[0]
    for x in range(1 << k):
        ok = True
        for i in range(n_masks):
            m = masks[i]
            b = x & m
            if b == 0 or b == m:
                ok = False
                break
        if ok:
            total += 1
    return total


# ---------------------------------------------------------------------------
# exhaustive enumeration over outcome configurations (oracle support)


@njit(cache=True)
def batch_enumerate(
    n_V,
    n_F,
    vf_indptr,
    vf_data,
    offx,
    offy,
    fv_indptr,
    fv_data,
    b_v,
    sigma_f,
    bmask_f,
    use_winding,
    mode,
    cap,
    out_nmerge,
    out_nclusters,
    out_sumphi,
    out_spans,
):
    """Per outcome configuration (index bits = per-vertex labels): merge
    count, cluster count, summed log cluster factors for ``mode``, and
    whether a cluster spans (winds the torus / touches opposite sides).

    Returns 0, or -1 if exact mode hit a cluster above ``cap`` faces.
    """
    n_cfg = out_nmerge.shape[0]
    labels = np.zeros(n_V, dtype=np.uint8)
    sig = np.zeros(n_F, dtype=np.float64)
    sizes = np.zeros(n_F, dtype=np.int64)
    minb = np.zeros(n_F, dtype=np.float64)
    contact = np.zeros(n_F, dtype=np.uint8)
    local_idx = np.zeros(n_F, dtype=np.int64)
    cluster_faces = np.zeros(n_F, dtype=np.int64)
    masks = np.zeros(n_V, dtype=np.int64)
    memo = Dict.empty(key_type=_MEMO_KEY, value_type=types.int64)

    for cfg in range(n_cfg):
        n_merge = 0
        for v in range(n_V):
            bit = (cfg >> v) & 1
            labels[v] = bit
            n_merge += bit
        root, windx, windy = uf_decompose(
            labels, vf_indptr, vf_data, offx, offy, n_F, use_winding
        )
        for f in range(n_F):
            sizes[f] = 0
            sig[f] = 0.0
            minb[f] = np.inf
            contact[f] = 0
        for f in range(n_F):
            r = root[f]
            sizes[r] += 1
            sig[r] += sigma_f[f]
            contact[r] |= bmask_f[f]
        for v in range(n_V):
            if labels[v] == 1:
                r = root[vf_data[vf_indptr[v]]]
                if b_v[v] < minb[r]:
                    minb[r] = b_v[v]
        n_clusters = 0
        sum_phi = 0.0
        spans = False
        for r in range(n_F):
            if root[r] != r:
                continue
            n_clusters += 1
            if use_winding:
                if windx[r] or windy[r]:
                    spans = True
            else:
                c = contact[r]
                if ((c & 1) and (c & 2)) or ((c & 4) and (c & 8)):
                    spans = True
            if mode == 3:
                if minb[r] <= 0.0:
                    sum_phi = NEG_INF
                    continue
                if sizes[r] == 1:
                    continue
                if sizes[r] > cap:
                    return -1
                fmask = np.uint64(0)
                k = 0
                for f in range(n_F):
                    if root[f] == r:
                        local_idx[f] = k
                        cluster_faces[k] = f
                        k += 1
                        fmask |= np.uint64(1) << np.uint64(f)
                vmask = np.uint64(0)
                n_masks = 0
                for v in range(n_V):
                    if labels[v] == 1 and root[vf_data[vf_indptr[v]]] == r:
                        vmask |= np.uint64(1) << np.uint64(v)
                        m = 0
                        for s in range(vf_indptr[v], vf_indptr[v + 1]):
                            m |= 1 << local_idx[vf_data[s]]
                        masks[n_masks] = m
                        n_masks += 1
                key = (fmask, vmask)
                if key in memo:
                    q = memo[key]
                else:
                    q = count_valid_colorings(masks[:n_masks], k)
                    memo[key] = q
                if q == 0:
                    sum_phi = NEG_INF
                else:
                    sum_phi += np.log(float(q)) - sizes[r] * LN2
            else:
                sum_phi += _phi(mode, sizes[r], sig[r], minb[r])
        out_nmerge[cfg] = n_merge
        out_nclusters[cfg] = n_clusters
        out_sumphi[cfg] = sum_phi
        out_spans[cfg] = spans
    return 0


# ---------------------------------------------------------------------------
# Metropolis sweep kernel


@njit(cache=True, inline="always")
def _phi(mode, size, sigma, minb):
    if mode == 0:
        return (1.0 - size) * LN2
    if minb <= 0.0:
        return NEG_INF  # merge at a 1-face rim site: no surviving coloring
    if size <= 1:
        return 0.0
    if mode == 1:
        return np.log(minb) - size * LN2
    return sigma - size * LN2


@njit(cache=True, inline="always")
def _minb_from_counts(cnt, levels, n_levels, c):
    for l in range(n_levels):
        if cnt[c, l] > 0:
            return levels[l]
    return np.inf


@njit(cache=True)
def run_sweeps(
    # state
    labels,
    cluster_of,
    cl_next,
    cl_prev,
    chead,
    csize,
    csigma,
    cbcnt,
    free_stack,
    regs,
    # lattice
    vf_indptr,
    vf_data,
    fv_indptr,
    fv_data,
    b_v,
    blevel_v,
    sigma_f,
    levels,
    # model
    mode,
    lnR,
    # randomness (len = n_steps each)
    rand_v,
    rand_u,
    # scratch
    vertex_epoch,
    face_epoch,
    face_group,
    qbuf,
    explored,
):
    """Run single-site Metropolis steps in place; returns accepted count.

    regs layout: [0]=free_top, [1]=n_merge, [2]=n_clusters, [3]=accepted,
    [4]=proposed, [5]=epoch counter.
    """
    n_levels = levels.shape[0]
    n_steps = rand_v.shape[0]
    accepted0 = regs[3]
    comb_cnt = np.zeros(8, dtype=np.int64)
    qhead = np.zeros(MAX_DEG, dtype=np.int64)
    qtail = np.zeros(MAX_DEG, dtype=np.int64)
    gparent = np.zeros(MAX_DEG, dtype=np.int64)
    gsize = np.zeros(MAX_DEG, dtype=np.int64)
    gsigma = np.zeros(MAX_DEG, dtype=np.float64)
    gcnt = np.zeros((MAX_DEG, 8), dtype=np.int64)
    seeds = np.zeros(MAX_DEG, dtype=np.int64)
    uniq = np.zeros(MAX_DEG, dtype=np.int64)

    for step in range(n_steps):
        v = rand_v[step]
        u_rand = rand_u[step]
        regs[4] += 1
        s0 = vf_indptr[v]
        s1 = vf_indptr[v + 1]
        deg = s1 - s0

        if labels[v] == 0:
            # ---- propose Keep -> Merge: unite the clusters of v's faces
            k = 0
            for s in range(s0, s1):
                c = cluster_of[vf_data[s]]
                dup = False
                for t in range(k):
                    if uniq[t] == c:
                        dup = True
                        break
                if not dup:
                    uniq[k] = c
                    k += 1
            if mode == 0:
                delta = lnR + LN2 * (1.0 - k)
            else:
                tot_size = 0
                tot_sigma = 0.0
                for l in range(n_levels):
                    comb_cnt[l] = 0
                phi_old = 0.0
                for t in range(k):
                    c = uniq[t]
                    tot_size += csize[c]
                    tot_sigma += csigma[c]
                    for l in range(n_levels):
                        comb_cnt[l] += cbcnt[c, l]
                    minb_c = _minb_from_counts(cbcnt, levels, n_levels, c)
                    phi_old += _phi(mode, csize[c], csigma[c], minb_c)
                comb_cnt[blevel_v[v]] += 1
                minb_new = np.inf
                for l in range(n_levels):
                    if comb_cnt[l] > 0:
                        minb_new = levels[l]
                        break
                phi_new = _phi(mode, tot_size, tot_sigma, minb_new)
                delta = lnR + phi_new - phi_old
            if delta >= 0.0 or u_rand < np.exp(delta):
                regs[3] += 1
                labels[v] = 1
                # absorb all clusters into the largest
                tgt = uniq[0]
                for t in range(1, k):
                    if csize[uniq[t]] > csize[tgt]:
                        tgt = uniq[t]
                for t in range(k):
                    c = uniq[t]
                    if c == tgt:
                        continue
                    f = chead[c]
                    while True:
                        cluster_of[f] = tgt
                        nxt = cl_next[f]
                        if nxt == chead[c]:
                            break
                        f = nxt
                    # splice circular list c into tgt
                    a_head = chead[tgt]
                    a_tail = cl_prev[a_head]
                    b_head = chead[c]
                    b_tail = cl_prev[b_head]
                    cl_next[a_tail] = b_head
                    cl_prev[b_head] = a_tail
                    cl_next[b_tail] = a_head
                    cl_prev[a_head] = b_tail
                    csize[tgt] += csize[c]
                    csigma[tgt] += csigma[c]
                    for l in range(n_levels):
                        cbcnt[tgt, l] += cbcnt[c, l]
                    chead[c] = -1
                    csize[c] = 0
                    csigma[c] = 0.0
                    for l in range(n_levels):
                        cbcnt[c, l] = 0
                    regs[0] += 1
                    free_stack[regs[0] - 1] = c
                cbcnt[tgt, blevel_v[v]] += 1
                regs[1] += 1
                regs[2] -= k - 1

        else:
            # ---- propose Merge -> Keep: does the cluster split?
            old = cluster_of[vf_data[s0]]
            regs[5] += 1
            epoch = regs[5]
            nseeds = 0
            for s in range(s0, s1):
                f = vf_data[s]
                if face_epoch[f] != epoch:
                    face_epoch[f] = epoch
                    face_group[f] = nseeds
                    qbuf[nseeds, 0] = f
                    qhead[nseeds] = 0
                    qtail[nseeds] = 1
                    seeds[nseeds] = f
                    nseeds += 1
            for g in range(nseeds):
                gparent[g] = g
                gsize[g] = 1
                gsigma[g] = sigma_f[seeds[g]]
                for l in range(n_levels):
                    gcnt[g, l] = 0
            n_explored = 0
            for g in range(nseeds):
                explored[n_explored] = seeds[g]
                n_explored += 1

            # round-robin expansion until at most one component stays open
            rr = 0
            while True:
                n_active = 0
                r0 = -1
                r1 = -1
                r2 = -1
                for g in range(nseeds):
                    if qhead[g] < qtail[g]:
                        r = g
                        while gparent[r] != r:
                            r = gparent[r]
                        if r != r0 and r != r1 and r != r2:
                            if n_active == 0:
                                r0 = r
                            elif n_active == 1:
                                r1 = r
                            else:
                                r2 = r
                            n_active += 1
                if n_active <= 1:
                    break
                for t in range(nseeds):
                    g = (rr + t) % nseeds
                    if qhead[g] >= qtail[g]:
                        continue
                    rr = (g + 1) % nseeds
                    f = qbuf[g, qhead[g]]
                    qhead[g] += 1
                    ra = face_group[f]
                    while gparent[ra] != ra:
                        ra = gparent[ra]
                    for tt in range(fv_indptr[f], fv_indptr[f + 1]):
                        u = fv_data[tt]
                        if u == v or labels[u] == 0:
                            continue
                        if vertex_epoch[u] != epoch:
                            vertex_epoch[u] = epoch
                            gcnt[ra, blevel_v[u]] += 1
                        for s in range(vf_indptr[u], vf_indptr[u + 1]):
                            f2 = vf_data[s]
                            if face_epoch[f2] == epoch:
                                rb = face_group[f2]
                                while gparent[rb] != rb:
                                    rb = gparent[rb]
                                if rb != ra:
                                    # union: smaller index becomes root
                                    if rb < ra:
                                        ra, rb = rb, ra
                                    gparent[rb] = ra
                                    gsize[ra] += gsize[rb]
                                    gsigma[ra] += gsigma[rb]
                                    for l in range(n_levels):
                                        gcnt[ra, l] += gcnt[rb, l]
                            else:
                                face_epoch[f2] = epoch
                                face_group[f2] = ra
                                qbuf[g, qtail[g]] = f2
                                qtail[g] += 1
                                gsize[ra] += 1
                                gsigma[ra] += sigma_f[f2]
                                explored[n_explored] = f2
                                n_explored += 1
                    break  # expand one face per round, then recount

            # final roots and the (single) still-open root, if any
            open_root = -1
            for g in range(nseeds):
                if qhead[g] < qtail[g]:
                    r = g
                    while gparent[r] != r:
                        r = gparent[r]
                    open_root = r
            kprime = 0
            for g in range(nseeds):
                if gparent[g] == g:
                    kprime += 1

            if kprime == 1:
                # no split; only the vertex-count bookkeeping changes
                minb_old = _minb_from_counts(cbcnt, levels, n_levels, old)
                phi_old = _phi(mode, csize[old], csigma[old], minb_old)
                cbcnt[old, blevel_v[v]] -= 1
                minb_new = _minb_from_counts(cbcnt, levels, n_levels, old)
                phi_new = _phi(mode, csize[old], csigma[old], minb_new)
                cbcnt[old, blevel_v[v]] += 1
                delta = -lnR + phi_new - phi_old
                if delta >= 0.0 or u_rand < np.exp(delta):
                    regs[3] += 1
                    labels[v] = 0
                    cbcnt[old, blevel_v[v]] -= 1
                    regs[1] -= 1
                continue

            # choose remainder: the open root, else the largest completed root
            if open_root < 0:
                best = -1
                for g in range(nseeds):
                    if gparent[g] == g and (best < 0 or gsize[g] > gsize[best]):
                        best = g
                open_root = best
                rem_size = gsize[open_root]
                rem_sigma = gsigma[open_root]
                for l in range(n_levels):
                    comb_cnt[l] = gcnt[open_root, l]
            else:
                rem_size = csize[old]
                rem_sigma = csigma[old]
                for l in range(n_levels):
                    comb_cnt[l] = cbcnt[old, l]
                comb_cnt[blevel_v[v]] -= 1
                for g in range(nseeds):
                    if gparent[g] == g and g != open_root:
                        rem_size -= gsize[g]
                        rem_sigma -= gsigma[g]
                        for l in range(n_levels):
                            comb_cnt[l] -= gcnt[g, l]

            minb_old = _minb_from_counts(cbcnt, levels, n_levels, old)
            phi_old = _phi(mode, csize[old], csigma[old], minb_old)
            phi_new = 0.0
            for g in range(nseeds):
                if gparent[g] == g and g != open_root:
                    minb_g = np.inf
                    for l in range(n_levels):
                        if gcnt[g, l] > 0:
                            minb_g = levels[l]
                            break
                    phi_new += _phi(mode, gsize[g], gsigma[g], minb_g)
            minb_rem = np.inf
            for l in range(n_levels):
                if comb_cnt[l] > 0:
                    minb_rem = levels[l]
                    break
            phi_new += _phi(mode, rem_size, rem_sigma, minb_rem)
            delta = -lnR + phi_new - phi_old

            if delta >= 0.0 or u_rand < np.exp(delta):
                regs[3] += 1
                labels[v] = 0
                regs[1] -= 1
                regs[2] += kprime - 1
                # move completed components out of the old cluster
                for g in range(nseeds):
                    if gparent[g] != g or g == open_root:
                        continue
                    nc = free_stack[regs[0] - 1]
                    regs[0] -= 1
                    first = -1
                    for e in range(n_explored):
                        f = explored[e]
                        r = face_group[f]
                        while gparent[r] != r:
                            r = gparent[r]
                        if r != g:
                            continue
                        # unlink f from the old circular list
                        if chead[old] == f:
                            chead[old] = cl_next[f]
                        cl_next[cl_prev[f]] = cl_next[f]
                        cl_prev[cl_next[f]] = cl_prev[f]
                        cluster_of[f] = nc
                        if first < 0:
                            first = f
                            cl_next[f] = f
                            cl_prev[f] = f
                            chead[nc] = f
                        else:
                            tail = cl_prev[chead[nc]]
                            cl_next[tail] = f
                            cl_prev[f] = tail
                            cl_next[f] = chead[nc]
                            cl_prev[chead[nc]] = f
                    csize[nc] = gsize[g]
                    csigma[nc] = gsigma[g]
                    for l in range(n_levels):
                        cbcnt[nc, l] = gcnt[g, l]
                csize[old] = rem_size
                csigma[old] = rem_sigma
                for l in range(n_levels):
                    cbcnt[old, l] = comb_cnt[l]

    return regs[3] - accepted0
