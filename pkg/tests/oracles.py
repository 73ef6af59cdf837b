"""Slow, independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy import integrate, special, stats

# frozen with 30-digit mpmath quadrature and root finding
C1_FROZEN = 8.27055236506585163259
PROFILE_INTEGRAL_FROZEN = 2.80436421065090852235
A_FROZEN = {
    (1.0, 0.1): 0.622667404118960223782,
    (2.0, 0.2): 0.155666851029740055946,
    (1.0, 1e-2): 0.0802733812275626826553,
    (1.0, 1e-3): 0.00824579027136755813923,
    (1.0, 1e-4): 0.000826807169552956806078,
    (0.5, 0.25): 5.43225657822640106855,
}


def c1_closed_form() -> float:
    """(3/8) I^3 with I = Gamma(1/3) Gamma(1/6) / (3 sqrt(pi))."""
    i = math.gamma(1 / 3) * math.gamma(1 / 6) / (3 * math.sqrt(math.pi))
    return 3.0 / 8.0 * i**3


def c1_scipy_quad() -> float:
    """(3/8) I^3 with I by scipy's QUADPACK on [0, inf)."""
    f = lambda t: 1 / math.sqrt(1 + t**3)  # noqa: E731
    i = integrate.quad(f, 0, 1, epsabs=1e-13, epsrel=1e-13)[0]
    i += integrate.quad(f, 1, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return 3.0 / 8.0 * i**3


def c1_beta() -> float:
    # int_0^inf dt / sqrt(1+t^3) = B(1/3, 1/6) / 3
    return 3.0 / 8.0 * (special.beta(1 / 3, 1 / 6) / 3) ** 3


# ---------------------------------------------------------------------------
# trees


def dyck_paths(n):
    """All Dyck paths with n steps, as tuples of +-1."""
    m = n // 2
    for ups in itertools.combinations(range(n), m):
        s = [-1] * n
        for u in ups:
            s[u] = 1
        h = 0
        ok = True
        for x in s:
            h += x
            if h < 0:
                ok = False
                break
        if ok:
            yield tuple(s)


def explicit_tree(steps):
    """(vertex of each contour index, parent dict, children dict), built with a Python stack."""
    stack = [0]
    parent = {0: None}
    children = {0: []}
    visit = [0]
    nxt = 1
    for st in steps:
        if st > 0:
            v = nxt
            nxt += 1
            parent[v] = stack[-1]
            children[v] = []
            children[stack[-1]].append(v)
            stack.append(v)
        else:
            stack.pop()
        visit.append(stack[-1])
    return visit, parent, children


def vertex_label_map(steps, labels):
    visit, parent, children = explicit_tree(steps)
    lab = {}
    for i, v in enumerate(visit):
        lab.setdefault(v, labels[i])
    return visit, parent, children, lab


def ancestors(parent, v):
    out = [v]
    while parent[out[-1]] is not None:
        out.append(parent[out[-1]])
    return out


def brute_components(steps, labels, h, eps, include_root=False):
    """DFS over {label > h}; counts components reaching h + eps."""
    _, parent, children, lab = vertex_label_map(steps, labels)
    seen = set()
    count = 0
    for v in lab:
        if v in seen or not lab[v] > h:
            continue
        comp = []
        todo = [v]
        seen.add(v)
        while todo:
            x = todo.pop()
            comp.append(x)
            nbrs = list(children[x]) + ([parent[x]] if parent[x] is not None else [])
            for y in nbrs:
                if y not in seen and lab[y] > h:
                    seen.add(y)
                    todo.append(y)
        if 0 in comp and not include_root:
            continue
        if any(lab[x] >= h + eps for x in comp):
            count += 1
    return count


def brute_upcrossings(steps, labels, h, eps, fresh=False):
    """Count anchors (parent <= h < child) whose subtree component reaches h + eps.

    With ``fresh`` the root-to-parent path must stay below h + eps.
    """
    _, parent, children, lab = vertex_label_map(steps, labels)
    count = 0
    for v in lab:
        p = parent[v]
        if p is None or not (lab[p] <= h < lab[v]):
            continue
        if fresh and max(lab[a] for a in ancestors(parent, p)) >= h + eps:
            continue
        todo = [v]
        found = False
        while todo and not found:
            x = todo.pop()
            if lab[x] >= h + eps:
                found = True
            todo.extend(c for c in children[x] if lab[c] > h)
        count += found
    return count


def brute_segment_min(steps, labels, s, t):
    _, parent, _, lab = vertex_label_map(steps, labels)
    visit = explicit_tree(steps)[0]
    a = ancestors(parent, visit[s])
    b = ancestors(parent, visit[t])
    common = set(a) & set(b)
    path = [x for x in a if x not in common] + [x for x in b if x not in common]
    top = next(x for x in a if x in common)
    return min(lab[x] for x in path + [top])


def brute_d_circ(steps, labels, s, t):
    visit = explicit_tree(steps)[0]
    va = [i for i, v in enumerate(visit) if v == visit[s]]
    vb = [i for i, v in enumerate(visit) if v == visit[t]]
    n = len(steps)
    best = -math.inf
    for i in va:
        for j in vb:
            lo, hi = min(i, j), max(i, j)
            inner = min(labels[lo:hi + 1])
            outer = min(min(labels[hi:n + 1]), min(labels[0:lo + 1]))
            best = max(best, inner, outer)
    return labels[s] + labels[t] - 2 * best


# ---------------------------------------------------------------------------
# discrete hitting probability of one excursion


def excursion_hit_probability(tau, h, span=60.0, per=8):
    """P(an excursion of the labeled reflected walk has a label >= h), h > 0.

    Every vertex has a critical geometric number of children, so the
    probability v(x) that the subtree of a vertex at label x reaches h solves
    v = Kv / (1 + Kv) below h and v = 1 at or above h, where K averages over
    one Gaussian edge.  The excursion is a single edge from the root, so the
    answer is (Kv)(0).  Solved by Newton iteration on a grid of spacing sd/per.
    """
    sd = tau ** 0.25
    g = sd / per
    k0 = int(math.ceil(span / g))
    x = g * np.arange(-k0, int(math.ceil((h + 8 * sd) / g)))
    n = x.size
    band = 8 * per
    offs = np.arange(-band, band + 1)
    w = stats.norm.pdf(offs * g, scale=sd) * g
    w /= w.sum()
    K = sp.diags([np.full(n - abs(o), wi) for o, wi in zip(offs, w)], offs, shape=(n, n), format="csr")
    inside = x < h
    v = np.where(inside, np.minimum(1.0, 3 * math.sqrt(tau) / np.maximum(h - x, 1e-9) ** 2), 1.0)
    idx = np.flatnonzero(inside)
    for _ in range(80):
        kv = K @ v
        f = (v * (1 + kv) - kv)[idx]
        jac = (sp.diags(1 + kv) + sp.diags(v) @ K - K).tocsr()[idx][:, idx]
        dv = spl.spsolve(jac.tocsc(), -f)
        v[idx] += dv
        if np.abs(dv).max() < 1e-14:
            break
    return float((K @ v)[k0])


# ---------------------------------------------------------------------------
# random-walk oracles


def walk_window_occupation(h, eps, step, replicas, rng):
    """Time spent in [h - eps, h] by a +-step walk before hitting h.

    Time is in units of step^2; the bottom site of the window carries weight
    1/2 (trapezoid rule), which makes the exact mean equal eps^2.  Excursions
    below the window add no occupation and always return, so the walk is
    simulated on the window sites only.
    """
    m = int(round(eps / step))
    pos = np.zeros(replicas, np.int64)          # steps below h, starting at the bottom
    pos[:] = m
    occ = np.zeros(replicas)
    alive = np.ones(replicas, bool)
    while alive.any():
        idx = np.flatnonzero(alive)
        occ[idx] += np.where(pos[idx] == m, 0.5, 1.0)
        up = rng.random(idx.size) < 0.5
        pos[idx] = np.where(up, pos[idx] - 1, np.minimum(pos[idx] + 1, m))
        alive[idx[pos[idx] == 0]] = False
    return occ * step * step


def walk_exit_low(eps, delta, step, replicas, rng):
    """Indicator that a +-step walk from 0 leaves (-delta, eps) at -delta."""
    lo = -int(round(delta / step))
    hi = int(round(eps / step))
    pos = np.zeros(replicas, np.int64)
    alive = np.ones(replicas, bool)
    while alive.any():
        idx = np.flatnonzero(alive)
        pos[idx] += np.where(rng.random(idx.size) < 0.5, 1, -1)
        alive[idx[(pos[idx] <= lo) | (pos[idx] >= hi)]] = False
    return (pos <= lo).astype(float)
