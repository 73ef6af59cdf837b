"""Experiment definitions: per-replica rows and per-cell summaries.

Each experiment splits its work into groups (one per level ``h`` for the
forest sweeps, a single group otherwise).  Replica ``i`` of every group uses
seed ``replica_seed(master, i)``.  Rows are tuples of strings so that files
written now and files read back on resume are interchangeable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from . import analytic
from .excursion import count_high_excursions, dyck_excursion
from .occupation import default_bandwidth, local_time
from .seeding import mix64, replica_seed
from .snake import argmin_label, attach_labels, reroot
from .superprocess import (
    CSV_HEADER as FOREST_HEADER,
    stream_conditioned_fresh,
    stream_fresh,
    stream_hits,
    stream_upcross,
)
from .upcross import cactus_vertex_count, count_components_above, count_upcrossings

SUMMARY_HEADER = ("experiment", "h", "eps", "statistic", "value", "se", "replicas")


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def mean_se(x):
    x = np.asarray(x, dtype=np.float64)
    se = x.std(ddof=1) / math.sqrt(x.size) if x.size > 1 else math.nan
    return float(x.mean()), float(se)


def ratio_of_means(x, y):
    """Ratio of sample means with its delta-method standard error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ym = y.mean()
    if ym == 0:
        return math.nan, math.nan
    r = x.mean() / ym
    if x.size < 2:
        return float(r), math.nan
    resid = x - r * y
    return float(r), float(resid.std(ddof=1) / math.sqrt(x.size) / abs(ym))


def pooled_homogeneity(a, b, min_expected=5.0):
    """Chi-square homogeneity p-value for two integer samples.

    Adjacent values are merged, left to right, until every merged cell has an
    expected count of at least ``min_expected`` in both samples.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    top = int(max(a.max(), b.max())) + 1
    ca = np.bincount(a, minlength=top)
    cb = np.bincount(b, minlength=top)
    share = min(a.size, b.size) / (a.size + b.size)
    cells, cur = [], np.zeros(2, np.int64)
    for x, y in zip(ca, cb):
        cur += (x, y)
        if cur.sum() * share >= min_expected:
            cells.append(cur)
            cur = np.zeros(2, np.int64)
    if cur.sum():
        if cells:
            cells[-1] = cells[-1] + cur
        else:
            cells.append(cur)
    if len(cells) < 2:
        return 1.0
    return float(stats.chi2_contingency(np.array(cells).T, correction=False)[1])


def _cols(rows, key, cast=float):
    return np.array([cast(r[key]) for r in rows])


def _label_seed(seed):
    return mix64(seed ^ 0x5A5A5A5A5A5A5A5A)


def normalized_snake(n_steps, seed):
    exc = dyck_excursion(n_steps, seed=seed)
    return attach_labels(exc, _label_seed(seed))


class Experiment:
    name = ""
    columns: tuple = ()
    hard_invariant = False

    def groups(self, cfg):
        return [None]

    def n_replicas(self, cfg):
        return cfg.replicas

    def replica(self, cfg, group, i, seed):
        raise NotImplementedError

    def summarize(self, cfg, rows):
        raise NotImplementedError

    def warnings(self, cfg):
        return []

    def failures(self, summary):
        return 0


def _window_warnings(cfg, eps_list):
    floor = cfg.resolution_floor()
    return [f"eps={e:g} is below the resolution window 20*tau^(1/4)={floor:.4g}"
            for e in eps_list if e < floor]


class Constants(Experiment):
    name = "constants"
    columns = ("quantity", "eps", "delta", "value")

    def n_replicas(self, cfg):
        return 1

    def replica(self, cfg, group, i, seed):
        k = analytic.solve_c1()
        c = k.c1
        rows = [("c1", "", "", fmt(c)), ("c1_residual", "", "", fmt(k.residual)),
                ("mu_mean", "", "", fmt(analytic.mu_mean(c)))]
        for e in cfg.eps:
            for d in cfg.delta:
                a = analytic.exit_hit_prob(e, d)
                rows.append(("a_eps_delta", fmt(e), fmt(d), fmt(a)))
                rows.append(("a_over_delta_times_eps3_over_c1", fmt(e), fmt(d), fmt(a / d * e**3 / c)))
        return rows

    def summarize(self, cfg, rows):
        return [(self.name, "", r["eps"], r["quantity"], r["value"], "", "1") for r in rows]


class PoissonCalibration(Experiment):
    name = "poisson-calibration"
    columns = ("replica", "eps", "count")

    def replica(self, cfg, group, i, seed):
        counts = count_high_excursions(cfg.a, cfg.tau, cfg.eps, seed)
        return [(fmt(i), fmt(e), fmt(c)) for e, c in zip(cfg.eps, counts)]

    def summarize(self, cfg, rows):
        out = []
        for e in cfg.eps:
            x = _cols([r for r in rows if float(r["eps"]) == e], "count")
            m, se = mean_se(x)
            target = cfg.a / (2 * e)
            disp = x.var(ddof=1) / m if x.size > 1 and m > 0 else math.nan
            n = fmt(x.size)
            out += [(self.name, "", fmt(e), "mean", fmt(m), fmt(se), n),
                    (self.name, "", fmt(e), "target", fmt(target), "", n),
                    (self.name, "", fmt(e), "ratio", fmt(m / target), fmt(se / target), n),
                    (self.name, "", fmt(e), "dispersion", fmt(disp), "", n)]
        return out


class HittingMass(Experiment):
    name = "hitting-mass"
    columns = ("replica", "h", "count", "steps", "rejected")

    def replica(self, cfg, group, i, seed):
        res = stream_hits(cfg.a, cfg.tau, cfg.h, seed, cfg.max_steps, cfg.redraw)
        return [(fmt(i), fmt(h), fmt(c), fmt(res.steps), fmt(res.rejected))
                for h, c in zip(cfg.h, res.values)]

    def summarize(self, cfg, rows):
        out = []
        for h in cfg.h:
            sub = [r for r in rows if float(r["h"]) == h]
            m, se = mean_se(_cols(sub, "count"))
            target = cfg.a * analytic.hitting_mass(h)
            n = fmt(len(sub))
            out += [(self.name, fmt(h), "", "mean", fmt(m), fmt(se), n),
                    (self.name, fmt(h), "", "target", fmt(target), "", n),
                    (self.name, fmt(h), "", "ratio", fmt(m / target), fmt(se / target), n),
                    (self.name, fmt(h), "", "rejected", fmt(_cols(sub, "rejected", int).sum()), "", n)]
        return out


_FOREST_COLUMNS = FOREST_HEADER + ("rejected",)


class FreshMean(Experiment):
    name = "lemma41-mean"
    columns = _FOREST_COLUMNS

    def warnings(self, cfg):
        return _window_warnings(cfg, cfg.eps)

    def replica(self, cfg, group, i, seed):
        # pruned runs skip part of the forest, so no duration is reported
        res = stream_fresh(cfg.a, cfg.tau, cfg.eps, seed, cfg.max_steps, True, cfg.redraw)
        return [(fmt(i), fmt(cfg.a), fmt(cfg.tau), "", fmt(e), fmt(m), "", "", "", fmt(res.rejected))
                for e, m in zip(cfg.eps, res.values)]

    def summarize(self, cfg, rows):
        out = []
        c = analytic.c1()
        for e in cfg.eps:
            sub = [r for r in rows if float(r["eps"]) == e]
            m, se = mean_se(_cols(sub, "M"))
            target = c * cfg.a / e**2
            n = fmt(len(sub))
            out += [(self.name, "", fmt(e), "mean", fmt(m), fmt(se), n),
                    (self.name, "", fmt(e), "target", fmt(target), "", n),
                    (self.name, "", fmt(e), "ratio", fmt(m / target), fmt(se / target), n),
                    (self.name, "", fmt(e), "rejected", fmt(_cols(sub, "rejected", int).sum()), "", n)]
        return out


def _ratio_rows(name, h, e, num, den, n):
    r, rse = ratio_of_means(num, den)
    pos = den > 0
    per = float(np.mean(num[pos] / den[pos])) if pos.any() else math.nan
    return [(name, fmt(h), fmt(e), "scaled_count_mean", *map(fmt, mean_se(num)), n),
            (name, fmt(h), fmt(e), "local_time_term_mean", *map(fmt, mean_se(den)), n),
            (name, fmt(h), fmt(e), "ratio", fmt(r), fmt(rse), n),
            (name, fmt(h), fmt(e), "replica_ratio_mean", fmt(per), "", fmt(int(pos.sum())))]


class UpcrossSweep(Experiment):
    name = "thm12-sweep"
    columns = _FOREST_COLUMNS

    def groups(self, cfg):
        return list(cfg.h)

    def warnings(self, cfg):
        return _window_warnings(cfg, cfg.eps)

    def _w(self, cfg):
        return cfg.bandwidth if cfg.bandwidth is not None else default_bandwidth(cfg.tau)

    def replica(self, cfg, h, i, seed):
        res = stream_upcross(cfg.a, cfg.tau, h, cfg.eps, self._w(cfg), seed, cfg.max_steps, cfg.redraw)
        lt = res.extra[0]
        dur = res.steps * cfg.tau
        return [(fmt(i), fmt(cfg.a), fmt(cfg.tau), fmt(h), fmt(e), "", fmt(n), fmt(lt), fmt(dur),
                 fmt(res.rejected)) for e, n in zip(cfg.eps, res.values)]

    def summarize(self, cfg, rows):
        out = []
        c = analytic.c1()
        for h in cfg.h:
            for e in cfg.eps:
                sub = [r for r in rows if float(r["h"]) == h and float(r["eps"]) == e]
                num = e**3 * _cols(sub, "script_N")
                den = 0.5 * c * _cols(sub, "local_time")
                out += _ratio_rows(self.name, h, e, num, den, fmt(len(sub)))
                out.append((self.name, fmt(h), fmt(e), "rejected",
                            fmt(_cols(sub, "rejected", int).sum()), "", fmt(len(sub))))
        return out


class CactusSweep(Experiment):
    name = "thm11-map-sweep"
    columns = ("replica", "n_steps", "h", "eps", "count", "local_time")

    def warnings(self, cfg):
        return _window_warnings(cfg.with_overrides(tau=1.0 / cfg.n_steps), cfg.eps)

    def replica(self, cfg, group, i, seed):
        sn = normalized_snake(cfg.n_steps, seed)
        rer = reroot(sn, argmin_label(sn))
        w = cfg.bandwidth if cfg.bandwidth is not None else default_bandwidth(rer.tau)
        rows = []
        for h in cfg.h:
            lt = local_time(rer, h, w).value
            for e in cfg.eps:
                rows.append((fmt(i), fmt(cfg.n_steps), fmt(h), fmt(e),
                             fmt(cactus_vertex_count(rer, h, e)), fmt(lt)))
        return rows

    def summarize(self, cfg, rows):
        out = []
        c = analytic.c1()
        for h in cfg.h:
            for e in cfg.eps:
                sub = [r for r in rows if float(r["h"]) == h and float(r["eps"]) == e]
                num = e**3 * _cols(sub, "count")
                den = 0.5 * c * _cols(sub, "local_time")
                out += _ratio_rows(self.name, h, e, num, den, fmt(len(sub)))
        return out


class RerootInvariance(Experiment):
    name = "reroot-invariance"
    columns = ("replica", "max_height", "label_at_index", "rerooted_max_height",
               "rerooted_label_at_index", "s_star_decile")

    def replica(self, cfg, group, i, seed):
        n = cfg.n_steps
        probe = n // 4
        orig = normalized_snake(n, seed)
        other = normalized_snake(n, mix64(seed))
        rer = reroot(other, n // 2)
        decile = 10 * (argmin_label(orig) % n) // n
        return [(fmt(i), fmt(orig.contour.max_height), fmt(orig.head_labels[probe]),
                 fmt(rer.contour.max_height), fmt(rer.head_labels[probe]), fmt(decile))]

    def summarize(self, cfg, rows):
        n = fmt(len(rows))
        p_h = stats.ks_2samp(_cols(rows, "max_height"), _cols(rows, "rerooted_max_height")).pvalue
        p_l = stats.ks_2samp(_cols(rows, "label_at_index"), _cols(rows, "rerooted_label_at_index")).pvalue
        dec = np.bincount(_cols(rows, "s_star_decile", int), minlength=10)
        # corners 0 .. n-1 need not split evenly into deciles
        expected = np.bincount(10 * np.arange(cfg.n_steps) // cfg.n_steps, minlength=10)
        p_s = stats.chisquare(dec, expected / expected.sum() * dec.sum()).pvalue
        return [(self.name, "", "", "ks_pvalue_max_height", fmt(p_h), "", n),
                (self.name, "", "", "ks_pvalue_label", fmt(p_l), "", n),
                (self.name, "", "", "chi2_pvalue_s_star", fmt(p_s), "", n)]


class BijectionAudit(Experiment):
    name = "bijection-audit"
    columns = ("replica", "seed", "n_steps", "tau", "view", "h", "eps", "scan", "components", "match")
    hard_invariant = True

    def replica(self, cfg, group, i, seed):
        sn = normalized_snake(cfg.n_steps, seed)
        views = (("original", sn), ("rerooted", reroot(sn, argmin_label(sn))))
        rows = []
        for view, s in views:
            for h in cfg.h:
                for e in cfg.eps:
                    a = count_upcrossings(s, h, e).count
                    b = count_components_above(s, h, e)
                    rows.append((fmt(i), fmt(seed), fmt(s.length), fmt(s.tau), view, fmt(h), fmt(e),
                                 fmt(a), fmt(b), fmt(a == b)))
        return rows

    def summarize(self, cfg, rows):
        bad = sum(r["match"] != "1" for r in rows)
        snakes = len({r["replica"] for r in rows})
        return [(self.name, "", "", "mismatches", fmt(bad), "", fmt(snakes)),
                (self.name, "", "", "comparisons", fmt(len(rows)), "", fmt(snakes))]

    def failures(self, summary):
        return sum(int(r[4]) for r in summary if r[3] == "mismatches")


class MuScaling(Experiment):
    name = "mu-scaling"
    columns = ("replica", "eps", "count", "attempts", "steps", "rejected")

    def groups(self, cfg):
        return list(cfg.eps)

    def warnings(self, cfg):
        return _window_warnings(cfg, cfg.eps)

    def replica(self, cfg, eps, i, seed):
        res = stream_conditioned_fresh(eps, cfg.tau, seed, max_steps=cfg.max_steps, redraw=cfg.redraw)
        return [(fmt(i), fmt(eps), fmt(res.values[0]), fmt(res.extra[0]), fmt(res.steps),
                 fmt(res.rejected))]

    def summarize(self, cfg, rows):
        out = []
        samples = {}
        for e in cfg.eps:
            sub = [r for r in rows if float(r["eps"]) == e]
            x = _cols(sub, "count", int)
            samples[e] = x
            m, se = mean_se(x)
            out += [(self.name, "", fmt(e), "mean", fmt(m), fmt(se), fmt(x.size)),
                    (self.name, "", fmt(e), "target", fmt(analytic.mu_mean()), "", fmt(x.size))]
        if len(cfg.eps) >= 2:
            p = pooled_homogeneity(samples[cfg.eps[0]], samples[cfg.eps[-1]])
            out.append((self.name, "", "", "homogeneity_pvalue", fmt(p), "",
                        fmt(samples[cfg.eps[0]].size + samples[cfg.eps[-1]].size)))
        return out


REGISTRY = {cls.name: cls() for cls in (
    Constants, PoissonCalibration, HittingMass, FreshMean, UpcrossSweep, CactusSweep,
    RerootInvariance, BijectionAudit, MuScaling)}


def seed_for(master: int, i: int) -> int:
    return replica_seed(master, i)
