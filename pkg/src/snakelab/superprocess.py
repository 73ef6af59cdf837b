"""Forests of labeled excursions up to local time ``a`` at 0.

:func:`simulate_forest` materializes every excursion.  The ``stream_*``
functions compute the same statistics in one pass without storing the
contour; with equal seeds :func:`stream_upcross` and the unpruned
:func:`stream_fresh` see exactly the forest that :func:`simulate_forest`
returns.  The forest duration has infinite mean, so every stream takes a step
budget; ``redraw`` replaces an over-budget replica by a fresh draw, which
conditions the sample on staying within the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .excursion import (
    DEFAULT_MAX_STEPS,
    ContourExcursion,
    StepBudgetExceeded,
    n_excursions,
)
from .occupation import LocalTimeEstimate
from .seeding import kernel_seed, replica_seed
from .snake import LabeledSnake
from .upcross import count_upcrossings, count_upcrossings_fresh

__all__ = [
    "SnakeForest",
    "StreamResult",
    "CSV_HEADER",
    "simulate_forest",
    "count_M",
    "count_script_N",
    "sbm_local_time",
    "stream_hits",
    "stream_fresh",
    "stream_upcross",
    "stream_conditioned_fresh",
]

CSV_HEADER = ("replica", "a", "tau", "h", "eps", "M", "script_N", "local_time", "duration")


@dataclass(frozen=True, eq=False)
class SnakeForest:
    excursions: tuple
    initial_mass: float
    tau: float
    seed: int

    @property
    def n_steps(self) -> int:
        return sum(s.length for s in self.excursions)

    @property
    def duration(self) -> float:
        return self.n_steps * self.tau

    @property
    def local_time(self) -> float:
        return 2.0 * math.sqrt(self.tau) * len(self.excursions)


def _sd(tau):
    return math.sqrt(math.sqrt(tau))


def simulate_forest(a: float, tau: float, seed: int = 0,
                    max_steps: int = DEFAULT_MAX_STEPS) -> SnakeForest:
    """Labeled excursions of the reflected walk until the local time at 0 exceeds ``a``."""
    k = n_excursions(a, tau)
    steps, labels, ends, truncated = _kernels.walk_forest(kernel_seed(seed), k, _sd(tau), int(max_steps))
    if truncated:
        raise StepBudgetExceeded(f"forest exceeded {max_steps} steps")
    snakes = []
    start = 0
    for end in ends:
        exc = ContourExcursion(steps[start:end], float(tau))
        snakes.append(LabeledSnake(exc, labels[start:end + 1], seed))
        start = end
    return SnakeForest(tuple(snakes), float(a), float(tau), seed)


def count_M(forest: SnakeForest, eps: float) -> int:
    """Fresh upcrossings from 0 to eps, summed over the excursions."""
    return sum(count_upcrossings_fresh(s, eps).count for s in forest.excursions)


def count_script_N(forest: SnakeForest, h: float, eps: float) -> int:
    """Upcrossings from h to h + eps, summed over the excursions."""
    if h == 0:
        raise ValueError("level h = 0 is excluded; use count_M")
    return sum(count_upcrossings(s, h, eps).count for s in forest.excursions)


def sbm_local_time(forest: SnakeForest, h: float, w: float) -> LocalTimeEstimate:
    if not w > 0:
        raise ValueError("bandwidth must be positive")
    hits = sum(int(np.count_nonzero(np.abs(s.head_labels[:-1] - h) <= w)) for s in forest.excursions)
    return LocalTimeEstimate(float(h), float(w), hits * forest.tau / (2.0 * w), forest.duration)


@dataclass(frozen=True)
class StreamResult:
    """One replica of a streamed campaign.

    ``values`` holds the statistic per level; ``rejected`` counts redraws.
    """

    values: np.ndarray
    extra: np.ndarray
    steps: int
    rejected: int


def _draw(run, seed, max_steps, redraw, max_redraws):
    # attempt 0 uses the replica seed itself, so it matches simulate_forest
    for k in range(max_redraws + 1):
        s = kernel_seed(seed if k == 0 else replica_seed(seed, k))
        out = run(s)
        if not out[-1]:
            return out, k
        if not redraw:
            raise StepBudgetExceeded(f"replica exceeded {max_steps} steps")
    raise StepBudgetExceeded(f"{max_redraws} redraws all exceeded {max_steps} steps")


def stream_hits(a, tau, levels, seed=0, max_steps=DEFAULT_MAX_STEPS, redraw=False, max_redraws=1000):
    """Number of excursions whose max label reaches each positive level."""
    levels = np.asarray(levels, dtype=np.float64)
    if np.any(levels <= 0):
        raise ValueError("levels must be positive")
    k = n_excursions(a, tau)
    (counts, steps, _), rej = _draw(
        lambda s: _kernels.forest_hits(s, k, _sd(tau), levels, int(max_steps)),
        seed, max_steps, redraw, max_redraws)
    return StreamResult(counts, np.zeros(0), int(steps), rej)


def stream_fresh(a, tau, eps, seed=0, max_steps=DEFAULT_MAX_STEPS, prune=True, redraw=False,
                 max_redraws=1000):
    """M_eps for each eps in one pass.

    ``prune`` skips subtrees below a vertex whose ancestral labels reached
    ``max(eps)``: no fresh anchor can sit there, so the counts have the same law.
    """
    eps = np.asarray(eps, dtype=np.float64)
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    k = n_excursions(a, tau)
    (counts, steps, _), rej = _draw(
        lambda s: _kernels.forest_fresh(s, k, _sd(tau), eps, int(max_steps), prune),
        seed, max_steps, redraw, max_redraws)
    return StreamResult(counts, np.zeros(0), int(steps), rej)


def stream_upcross(a, tau, h, eps, w, seed=0, max_steps=DEFAULT_MAX_STEPS, redraw=False,
                   max_redraws=1000):
    """Level-h upcrossing counts per eps and box local times per bandwidth w.

    ``extra`` holds the local time estimates; ``steps * tau`` is the duration.
    """
    if h == 0:
        raise ValueError("level h = 0 is excluded")
    eps = np.asarray(eps, dtype=np.float64)
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    if np.any(eps <= 0) or np.any(w <= 0):
        raise ValueError("eps and w must be positive")
    k = n_excursions(a, tau)
    (counts, window, steps, _), rej = _draw(
        lambda s: _kernels.forest_upcross(s, k, _sd(tau), float(h), eps, w, int(max_steps)),
        seed, max_steps, redraw, max_redraws)
    return StreamResult(counts, window * tau / (2.0 * w), int(steps), rej)


def stream_conditioned_fresh(eps, tau, seed=0, max_attempts=10**8, max_steps=DEFAULT_MAX_STEPS,
                             redraw=False, max_redraws=1000):
    """Fresh upcrossing count from 0 to eps of the first excursion whose labels reach eps.

    ``extra`` is ``[attempts]``: excursions tried, including the hitting one.
    """
    if not (eps > 0 and tau > 0):
        raise ValueError("eps and tau must be positive")

    def run(s):
        count, attempts, steps, status = _kernels.conditioned_fresh(
            s, _sd(tau), float(eps), int(max_attempts), int(max_steps))
        if status == 1:
            raise RuntimeError(f"no excursion reached {eps} in {max_attempts} attempts")
        return count, attempts, steps, status == 2

    (count, attempts, steps, _), rej = _draw(run, seed, max_steps, redraw, max_redraws)
    return StreamResult(np.array([count]), np.array([attempts]), int(steps), rej)
