"""Compiled inner loops for the discrete snake.

Every streaming kernel seeds numba's per-thread generator from its ``seed``
argument on entry, so results depend only on the arguments and not on which
thread runs them.  Materialized helpers take their randomness as input arrays.

Stack conventions shared by the scans (``d`` is the current tree depth):

``comp[d]``
    depth of the anchor whose component holds the vertex at depth ``d``;
    ``NOT_ABOVE`` if its label is <= h, ``ROOT_COMP`` if it is connected to the
    root through labels > h (that component has no bottom vertex at level h).
``closed[a, j]``
    True once the anchor at depth ``a`` can no longer be counted at threshold
    ``j`` (already counted, or not fresh).
"""

import numpy as np
from numba import njit

NOT_ABOVE = -1
ROOT_COMP = -2

_INIT_STACK = 1 << 12


@njit(cache=True)
def _grow_f8(a):
    b = np.empty(a.shape[0] * 2, np.float64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_i8(a):
    b = np.empty(a.shape[0] * 2, np.int64)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_b2(a):
    b = np.empty((a.shape[0] * 2, a.shape[1]), np.bool_)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _flip(buf):
    # buf = [random bits, bits left]; one randint call yields 62 fair coins
    if buf[1] == 0:
        buf[0] = np.random.randint(0, 1 << 62)
        buf[1] = 62
    bit = buf[0] & 1
    buf[0] >>= 1
    buf[1] -= 1
    return bit == 1


# ---------------------------------------------------------------------------
# tree decoding (materialized contours)


@njit(cache=True)
def decode_tree(steps):
    """Vertex id per contour index and parent/depth per vertex.

    Vertex ``k >= 1`` is created by the ``k``-th up-step; the root is 0.
    """
    n = steps.shape[0]
    n_up = 0
    for i in range(n):
        if steps[i] > 0:
            n_up += 1
    vid = np.empty(n + 1, np.int64)
    parent = np.empty(n_up + 1, np.int64)
    depth = np.empty(n_up + 1, np.int64)
    parent[0] = -1
    depth[0] = 0
    stack = np.empty(n_up + 1, np.int64)
    stack[0] = 0
    d = 0
    nxt = 1
    vid[0] = 0
    for i in range(n):
        if steps[i] > 0:
            parent[nxt] = stack[d]
            d += 1
            depth[nxt] = d
            stack[d] = nxt
            nxt += 1
        else:
            d -= 1
        vid[i + 1] = stack[d]
    return vid, parent, depth


@njit(cache=True)
def labels_from_noise(steps, noise, label0):
    """Head labels of the stack construction given one increment per up-step."""
    n = steps.shape[0]
    out = np.empty(n + 1, np.float64)
    stack = np.empty(n // 2 + 2, np.float64)
    stack[0] = label0
    out[0] = label0
    d = 0
    k = 0
    for i in range(n):
        if steps[i] > 0:
            stack[d + 1] = stack[d] + noise[k]
            k += 1
            d += 1
        else:
            d -= 1
        out[i + 1] = stack[d]
    return out


@njit(cache=True)
def replay_snake_property(steps, labels):
    """Number of contour indices whose label differs from the stored vertex label."""
    n = steps.shape[0]
    stack = np.empty(n // 2 + 2, np.float64)
    stack[0] = labels[0]
    d = 0
    bad = 0
    for i in range(n):
        if steps[i] > 0:
            d += 1
            stack[d] = labels[i + 1]
        else:
            d -= 1
            if labels[i + 1] != stack[d]:
                bad += 1
    return bad


# ---------------------------------------------------------------------------
# upcrossing scans over a materialized snake


@njit(cache=True)
def upcross_scan(steps, labels, h, eps, fresh):
    """Anchor-stack scan; returns (count, anchors, witnesses, anchor_pushes).

    With ``fresh`` an anchor only counts if the path from the root down to
    the anchor's parent stayed below ``h + eps``.
    """
    n = steps.shape[0]
    cap = n // 2 + 2
    lab = np.empty(cap, np.float64)
    pmax = np.empty(cap, np.float64)
    comp = np.empty(cap, np.int64)
    closed = np.zeros(cap, np.bool_)
    anchor_at = np.empty(cap, np.int64)
    anchors = np.empty(cap, np.int64)
    witnesses = np.empty(cap, np.int64)
    lab[0] = labels[0]
    pmax[0] = labels[0]
    comp[0] = ROOT_COMP if labels[0] > h else NOT_ABOVE
    top = h + eps
    count = 0
    pushes = 0
    d = 0
    for i in range(n):
        if steps[i] > 0:
            x = labels[i + 1]
            d += 1
            lab[d] = x
            pmax[d] = max(pmax[d - 1], x)
            if x > h:
                if comp[d - 1] == NOT_ABOVE:
                    comp[d] = d
                    closed[d] = fresh and pmax[d - 1] >= top
                    anchor_at[d] = i
                    pushes += 1
                else:
                    comp[d] = comp[d - 1]
                a = comp[d]
                if a >= 0 and not closed[a] and x >= top:
                    closed[a] = True
                    anchors[count] = anchor_at[a]
                    witnesses[count] = i + 1
                    count += 1
            else:
                comp[d] = NOT_ABOVE
        else:
            d -= 1
    # events are found in witness order; nested events can close before the
    # enclosing one, so report them sorted by anchor
    order = np.argsort(anchors[:count], kind="mergesort")
    return count, anchors[:count][order], witnesses[:count][order], pushes


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def components_above(vlabel, vparent, h, eps, include_root):
    """Union-find over tree edges whose two ends both carry label > h."""
    m = vlabel.shape[0]
    uf = np.arange(m)
    rank = np.zeros(m, np.int64)
    for v in range(1, m):
        p = vparent[v]
        if vlabel[v] > h and vlabel[p] > h:
            a = _find(uf, v)
            b = _find(uf, p)
            if a != b:
                if rank[a] < rank[b]:
                    a, b = b, a
                uf[b] = a
                if rank[a] == rank[b]:
                    rank[a] += 1
    hit = np.zeros(m, np.bool_)
    for v in range(m):
        if vlabel[v] >= h + eps:
            hit[_find(uf, v)] = True
    root_rep = _find(uf, 0) if vlabel[0] > h else -1
    count = 0
    for v in range(m):
        if uf[v] == v and hit[v] and vlabel[v] > h:
            if v == root_rep and not include_root:
                continue
            count += 1
    return count


# ---------------------------------------------------------------------------
# generators


@njit(cache=True, nogil=True)
def excursion_heights(seed, n_exc, cap):
    """Max height (in steps, capped at ``cap``) of ``n_exc`` walk excursions."""
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    out = np.empty(n_exc, np.int64)
    for k in range(n_exc):
        z = 1
        top = 1
        while z > 0 and top < cap:
            if _flip(buf):
                z += 1
                if z > top:
                    top = z
            else:
                z -= 1
        out[k] = top
    return out


@njit(cache=True, nogil=True)
def walk_forest(seed, n_exc, sd, max_steps):
    """Materialize ``n_exc`` labeled excursions of the reflected walk.

    Returns (steps, labels, ends, truncated); ``labels`` has one entry per
    contour index (len(steps) + 1) and ``ends[k]`` is the step count after
    the k-th excursion.
    """
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    size = 1 << 16
    steps = np.empty(size, np.int8)
    labels = np.empty(size + 1, np.float64)
    stack = np.empty(_INIT_STACK, np.float64)
    ends = np.empty(n_exc, np.int64)
    labels[0] = 0.0
    stack[0] = 0.0
    t = 0
    truncated = False
    for k in range(n_exc):
        d = 0
        up = True  # reflection at 0
        while True:
            if t >= max_steps:
                truncated = True
                break
            if t + 1 >= size:
                s2 = np.empty(size * 2, np.int8)
                s2[:size] = steps
                steps = s2
                l2 = np.empty(size * 2 + 1, np.float64)
                l2[: size + 1] = labels[: size + 1]
                labels = l2
                size *= 2
            if not up:
                up = _flip(buf)
            if up:
                if d + 1 >= stack.shape[0]:
                    stack = _grow_f8(stack)
                stack[d + 1] = stack[d] + sd * np.random.standard_normal()
                d += 1
                steps[t] = 1
            else:
                d -= 1
                steps[t] = -1
            t += 1
            labels[t] = stack[d]
            up = False
            if d == 0:
                break
        if truncated:
            return steps[:t], labels[: t + 1], ends[:k], True
        ends[k] = t
    return steps[:t], labels[: t + 1], ends, truncated


@njit(cache=True, nogil=True)
def forest_hits(seed, n_exc, sd, levels, max_steps):
    """Count excursions whose max vertex label reaches each of ``levels``.

    An excursion is abandoned as soon as it reaches ``max(levels)``; the rest of
    it cannot change any indicator.  Returns (counts, steps_simulated, truncated).
    """
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    top = levels.max()
    counts = np.zeros(levels.shape[0], np.int64)
    stack = np.empty(_INIT_STACK, np.float64)
    stack[0] = 0.0
    t = 0
    for k in range(n_exc):
        d = 0
        best = 0.0
        up = True
        while True:
            if t >= max_steps:
                return counts, t, True
            if not up:
                up = _flip(buf)
            if up:
                if d + 1 >= stack.shape[0]:
                    stack = _grow_f8(stack)
                x = stack[d] + sd * np.random.standard_normal()
                stack[d + 1] = x
                d += 1
                if x > best:
                    best = x
                    if best >= top:
                        t += 1
                        break
            else:
                d -= 1
            t += 1
            up = False
            if d == 0:
                break
        for j in range(levels.shape[0]):
            if best >= levels[j]:
                counts[j] += 1
    return counts, t, False


@njit(cache=True, nogil=True)
def forest_upcross(seed, n_exc, sd, h, eps_arr, w_arr, max_steps):
    """Stream a labeled forest and accumulate level-h statistics.

    Returns (upcross counts per eps, window counts per w, steps, truncated)
    where window counts are #{contour indices i >= 1 : |label_i - h| <= w}.
    """
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    ne = eps_arr.shape[0]
    nw = w_arr.shape[0]
    lab = np.empty(_INIT_STACK, np.float64)
    comp = np.empty(_INIT_STACK, np.int64)
    closed = np.zeros((_INIT_STACK, ne), np.bool_)
    counts = np.zeros(ne, np.int64)
    window = np.zeros(nw, np.int64)
    lab[0] = 0.0
    comp[0] = ROOT_COMP if 0.0 > h else NOT_ABOVE
    t = 0
    for k in range(n_exc):
        d = 0
        up = True
        while True:
            if t >= max_steps:
                return counts, window, t, True
            if not up:
                up = _flip(buf)
            if up:
                if d + 1 >= lab.shape[0]:
                    lab = _grow_f8(lab)
                    comp = _grow_i8(comp)
                    closed = _grow_b2(closed)
                x = lab[d] + sd * np.random.standard_normal()
                d += 1
                lab[d] = x
                if x > h:
                    if comp[d - 1] == NOT_ABOVE:
                        comp[d] = d
                        for j in range(ne):
                            closed[d, j] = False
                    else:
                        comp[d] = comp[d - 1]
                    a = comp[d]
                    if a >= 0:
                        for j in range(ne):
                            if not closed[a, j] and x >= h + eps_arr[j]:
                                closed[a, j] = True
                                counts[j] += 1
                else:
                    comp[d] = NOT_ABOVE
            else:
                d -= 1
            t += 1
            x = lab[d]
            for j in range(nw):
                if abs(x - h) <= w_arr[j]:
                    window[j] += 1
            up = False
            if d == 0:
                break
    return counts, window, t, False


@njit(cache=True)
def _fresh_excursion(buf, sd, eps_arr, top, prune, lab, pmax, comp, closed, counts, t0, max_steps):
    # one excursion from label 0 with fresh-upcrossing counting at level 0;
    # returns (t, hit, truncated) and the possibly regrown stacks
    ne = eps_arr.shape[0]
    d = 0
    up = True
    hit = False
    t = t0
    while True:
        if t >= max_steps:
            return t, hit, True, lab, pmax, comp, closed
        if not up:
            up = _flip(buf)
        pruned = False
        if up:
            if d + 1 >= lab.shape[0]:
                lab = _grow_f8(lab)
                pmax = _grow_f8(pmax)
                comp = _grow_i8(comp)
                closed = _grow_b2(closed)
            x = lab[d] + sd * np.random.standard_normal()
            d += 1
            lab[d] = x
            pmax[d] = max(pmax[d - 1], x)
            if x > 0.0:
                if comp[d - 1] == NOT_ABOVE:
                    comp[d] = d
                    for j in range(ne):
                        closed[d, j] = pmax[d - 1] >= eps_arr[j]
                else:
                    comp[d] = comp[d - 1]
                a = comp[d]
                if a >= 0:
                    for j in range(ne):
                        if not closed[a, j] and x >= eps_arr[j]:
                            closed[a, j] = True
                            counts[j] += 1
            else:
                comp[d] = NOT_ABOVE
            if pmax[d] >= top:
                hit = True
                pruned = prune
        else:
            d -= 1
        t += 1
        if pruned:
            # every path below this vertex has already reached the top level:
            # none of its descendants can anchor a fresh upcrossing
            d -= 1
            t += 1
        up = False
        if d == 0:
            return t, hit, False, lab, pmax, comp, closed


@njit(cache=True)
def _fresh_stacks(ne):
    lab = np.empty(_INIT_STACK, np.float64)
    pmax = np.empty(_INIT_STACK, np.float64)
    comp = np.empty(_INIT_STACK, np.int64)
    closed = np.zeros((_INIT_STACK, ne), np.bool_)
    lab[0] = 0.0
    pmax[0] = 0.0
    comp[0] = NOT_ABOVE
    return lab, pmax, comp, closed


@njit(cache=True, nogil=True)
def forest_fresh(seed, n_exc, sd, eps_arr, max_steps, prune):
    """Fresh upcrossing counts from 0 to each eps over a forest.

    With ``prune`` the subtree of any vertex whose ancestral path reached
    ``max(eps_arr)`` is never generated.  Returns (counts, steps, truncated).
    """
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    ne = eps_arr.shape[0]
    top = eps_arr.max()
    lab, pmax, comp, closed = _fresh_stacks(ne)
    counts = np.zeros(ne, np.int64)
    t = 0
    for k in range(n_exc):
        t, hit, trunc, lab, pmax, comp, closed = _fresh_excursion(
            buf, sd, eps_arr, top, prune, lab, pmax, comp, closed, counts, t, max_steps
        )
        if trunc:
            return counts, t, True
    return counts, t, False


@njit(cache=True, nogil=True)
def conditioned_fresh(seed, sd, eps, max_attempts, max_steps):
    """Fresh upcrossing count of the first excursion whose labels reach ``eps``.

    Returns (count, attempts, steps, status) with status 0 = ok,
    1 = attempt cap exceeded, 2 = step cap exceeded.
    """
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    eps_arr = np.array([eps])
    lab, pmax, comp, closed = _fresh_stacks(1)
    t = 0
    for k in range(max_attempts):
        counts = np.zeros(1, np.int64)
        t, hit, trunc, lab, pmax, comp, closed = _fresh_excursion(
            buf, sd, eps_arr, eps, True, lab, pmax, comp, closed, counts, t, max_steps
        )
        if trunc:
            return 0, k + 1, t, 2
        if hit:
            return counts[0], k + 1, t, 0
    return 0, max_attempts, t, 1


@njit(cache=True, nogil=True)
def first_hitting_excursion(seed, sd, h, max_attempts, max_steps):
    """Materialize the first excursion whose max label reaches ``h`` (sign-aware).

    Non-hitting excursions are generated without storage.  Returns
    (steps, labels, attempts, status) with the same status codes as
    :func:`conditioned_fresh`.
    """
    np.random.seed(seed)
    buf = np.zeros(2, np.int64)
    stack = np.empty(_INIT_STACK, np.float64)
    stack[0] = 0.0
    size = 1 << 12
    steps = np.empty(size, np.int8)
    labels = np.empty(size + 1, np.float64)
    total = 0
    for k in range(max_attempts):
        d = 0
        t = 0
        up = True
        hit = False
        labels[0] = 0.0
        while True:
            if total >= max_steps:
                return steps[:0], labels[:1], k + 1, 2
            if t + 1 >= size:
                s2 = np.empty(size * 2, np.int8)
                s2[:size] = steps
                steps = s2
                l2 = np.empty(size * 2 + 1, np.float64)
                l2[: size + 1] = labels[: size + 1]
                labels = l2
                size *= 2
            if not up:
                up = _flip(buf)
            if up:
                if d + 1 >= stack.shape[0]:
                    stack = _grow_f8(stack)
                x = stack[d] + sd * np.random.standard_normal()
                stack[d + 1] = x
                d += 1
                steps[t] = 1
                if (h > 0 and x >= h) or (h < 0 and x <= h):
                    hit = True
            else:
                d -= 1
                steps[t] = -1
            t += 1
            total += 1
            labels[t] = stack[d]
            up = False
            if d == 0:
                break
        if hit:
            return steps[:t].copy(), labels[: t + 1].copy(), k + 1, 0
    return steps[:0], labels[:1], max_attempts, 1


# ---------------------------------------------------------------------------
# tree queries on materialized snakes


@njit(cache=True)
def sparse_query(table, i, j):
    if i > j:
        i, j = j, i
    k = _log2(j - i + 1)
    a = table[k, i]
    b = table[k, j - (1 << k) + 1]
    return a if a <= b else b


@njit(cache=True)
def _log2(x):
    k = 0
    while (2 << k) <= x:
        k += 1
    return k


@njit(cache=True)
def segment_min(parent, depth, vlabel, a, b, mrca_depth):
    """Min vertex label on the tree path a -> b whose top vertex has depth ``mrca_depth``."""
    m = vlabel[a]
    while depth[a] > mrca_depth:
        a = parent[a]
        if vlabel[a] < m:
            m = vlabel[a]
    if vlabel[b] < m:
        m = vlabel[b]
    while depth[b] > mrca_depth:
        b = parent[b]
        if vlabel[b] < m:
            m = vlabel[b]
    return m


@njit(cache=True)
def d_circ_pairs(labels, table, vptr, vidx, a, b):
    """D-circ between vertices a and b, maximizing over all visit pairs.

    For visits i <= j the inner min is over [i, j] or over the cyclic
    complement [j, n] + [0, i], whichever is larger.
    """
    n = labels.shape[0] - 1
    best = -np.inf
    for p in range(vptr[a], vptr[a + 1]):
        for q in range(vptr[b], vptr[b + 1]):
            i = vidx[p]
            j = vidx[q]
            if i > j:
                i, j = j, i
            inner = sparse_query(table, i, j)
            outer = min(sparse_query(table, j, n), sparse_query(table, 0, i))
            v = inner if inner > outer else outer
            if v > best:
                best = v
    la = labels[vidx[vptr[a]]]
    lb = labels[vidx[vptr[b]]]
    return la + lb - 2.0 * best
