"""Random lifetime processes on the (tau, sqrt(tau)) grid.

A contour step lasts ``tau`` units of time and moves the height by
``sqrt(tau)``.  Each completed excursion of the reflected walk adds
``2 sqrt(tau)`` to the local time at 0, which makes excursions higher than
``eps`` arrive at rate ``1 / (2 eps)`` per unit of local time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .seeding import kernel_seed

__all__ = [
    "ContourExcursion",
    "ReflectedPath",
    "StepBudgetExceeded",
    "AttemptCapExceeded",
    "MARK_DTYPE",
    "DEFAULT_MAX_STEPS",
    "n_excursions",
    "dyck_excursion",
    "reflected_walk_until_local_time",
    "excursion_conditioned_hit",
    "count_high_excursions",
]

MARK_DTYPE = np.dtype([("index", "<i8"), ("local_time", "<f8")])
DEFAULT_MAX_STEPS = 50_000_000


class StepBudgetExceeded(RuntimeError):
    """A walk needed more contour steps than the configured budget."""


class AttemptCapExceeded(RuntimeError):
    """No excursion reached the target level within the attempt cap."""


def _as_steps(steps) -> np.ndarray:
    a = np.ascontiguousarray(steps, dtype=np.int8)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ContourExcursion:
    """A Dyck path: ``steps`` in {+1, -1}, nonnegative partial sums ending at 0."""

    steps: np.ndarray
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "steps", _as_steps(self.steps))
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @property
    def height_step(self) -> float:
        return math.sqrt(self.tau)

    @property
    def length(self) -> int:
        return int(self.steps.shape[0])

    @property
    def sigma(self) -> float:
        return self.length * self.tau

    def walk(self) -> np.ndarray:
        """Integer heights at contour indices 0..length."""
        out = np.zeros(self.length + 1, np.int64)
        np.cumsum(self.steps, out=out[1:])
        return out

    def heights(self) -> np.ndarray:
        return self.walk() * self.height_step

    @property
    def max_height(self) -> float:
        return float(self.walk().max()) * self.height_step

    def is_valid(self) -> bool:
        if self.length % 2 or not np.all(np.abs(self.steps) == 1):
            return False
        w = self.walk()
        return bool(w.min() >= 0 and w[-1] == 0)

    def __eq__(self, other):
        if not isinstance(other, ContourExcursion):
            return NotImplemented
        return self.tau == other.tau and np.array_equal(self.steps, other.steps)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ReflectedPath:
    """Reflected walk stopped at the return to 0 that pushes local time past the target."""

    steps: np.ndarray
    tau: float
    local_time_marks: np.ndarray
    target_local_time: float

    def __post_init__(self):
        object.__setattr__(self, "steps", _as_steps(self.steps))
        marks = np.asarray(self.local_time_marks, dtype=MARK_DTYPE)
        marks.setflags(write=False)
        object.__setattr__(self, "local_time_marks", marks)

    @property
    def height_step(self) -> float:
        return math.sqrt(self.tau)

    @property
    def length(self) -> int:
        return int(self.steps.shape[0])

    @property
    def duration(self) -> float:
        return self.length * self.tau

    @property
    def local_time(self) -> float:
        return float(self.local_time_marks["local_time"][-1])

    def excursion_bounds(self) -> list[tuple[int, int]]:
        """Contour index ranges [start, end] of the successive excursions."""
        ends = self.local_time_marks["index"]
        starts = np.concatenate([[0], ends[:-1]])
        return [(int(a), int(b)) for a, b in zip(starts, ends)]

    def excursions(self) -> list[ContourExcursion]:
        return [ContourExcursion(self.steps[a:b], self.tau) for a, b in self.excursion_bounds()]


def n_excursions(r: float, tau: float) -> int:
    """Smallest k with ``2 k sqrt(tau) > r``: completed excursions until local time exceeds r."""
    if not (r > 0 and tau > 0):
        raise ValueError("r and tau must be positive")
    inc = 2.0 * math.sqrt(tau)
    k = int(math.floor(r / inc)) + 1
    # the float division can land on either side of an exact multiple
    while k > 1 and (k - 1) * inc > r:
        k -= 1
    while k * inc <= r:
        k += 1
    return k


def dyck_excursion(n_steps: int, tau: float | None = None, seed: int = 0) -> ContourExcursion:
    """Uniform Dyck path of ``n_steps`` steps by the cycle lemma.

    A shuffled sequence of ``n/2`` up-steps and ``n/2 + 1`` down-steps has
    exactly one cyclic rotation whose partial sums stay >= 0 until the final
    step; rotating to start just after the first minimum and dropping the last
    down-step gives a uniform Dyck path.  ``tau`` defaults to ``1 / n_steps``.
    """
    if isinstance(n_steps, bool) or int(n_steps) != n_steps or n_steps < 2 or n_steps % 2:
        raise ValueError("n_steps must be a positive even integer")
    n_steps = int(n_steps)
    tau = 1.0 / n_steps if tau is None else float(tau)
    if not tau > 0:
        raise ValueError("tau must be positive")
    m = n_steps // 2
    rng = np.random.default_rng(seed)
    seq = np.concatenate([np.ones(m, np.int8), -np.ones(m + 1, np.int8)])
    rng.shuffle(seq)
    walk = np.cumsum(seq, dtype=np.int64)
    k = int(np.argmin(walk)) + 1
    rotated = np.concatenate([seq[k:], seq[:k]])
    return ContourExcursion(rotated[:-1], tau)


def reflected_walk_until_local_time(r: float, tau: float, seed: int = 0,
                                    max_steps: int = DEFAULT_MAX_STEPS) -> ReflectedPath:
    """Reflected +-1 walk run until the local time at 0 exceeds ``r``.

    Raises :class:`StepBudgetExceeded` if more than ``max_steps`` steps are needed;
    the forest duration has infinite mean, so some budget is mandatory.
    """
    k = n_excursions(r, tau)
    steps, _, ends, truncated = _kernels.walk_forest(
        kernel_seed(seed), k, math.sqrt(math.sqrt(tau)), int(max_steps))
    if truncated:
        raise StepBudgetExceeded(f"reflected walk exceeded {max_steps} steps")
    marks = np.empty(k, MARK_DTYPE)
    marks["index"] = ends
    marks["local_time"] = 2.0 * math.sqrt(tau) * np.arange(1, k + 1)
    return ReflectedPath(steps, float(tau), marks, float(r))


def excursion_conditioned_hit(h: float, tau: float, seed: int = 0, max_attempts: int = 10**7,
                              max_steps: int = DEFAULT_MAX_STEPS):
    """First excursion, in local-time order, whose labels reach ``h``.

    For ``h < 0`` the target is ``min label <= h``.  Non-hitting excursions are
    simulated without storage; ``max_steps`` bounds all steps, ``max_attempts``
    the number of excursions tried.
    """
    from .snake import LabeledSnake

    if h == 0:
        raise ValueError("h must be nonzero")
    if not tau > 0:
        raise ValueError("tau must be positive")
    steps, labels, attempts, status = _kernels.first_hitting_excursion(
        kernel_seed(seed), math.sqrt(math.sqrt(tau)), float(h), int(max_attempts), int(max_steps))
    if status == 1:
        raise AttemptCapExceeded(f"no excursion reached {h} in {max_attempts} attempts")
    if status == 2:
        raise StepBudgetExceeded(f"conditioned sampling exceeded {max_steps} steps")
    return LabeledSnake(ContourExcursion(steps, float(tau)), labels, seed)


def count_high_excursions(r: float, tau: float, eps, seed: int = 0) -> np.ndarray:
    """Number of excursions with max height >= eps before local time r, per eps.

    Streams the walk and stops each excursion once it reaches the largest level,
    so memory and time stay bounded.
    """
    eps = np.atleast_1d(np.asarray(eps, dtype=np.float64))
    if np.any(eps <= 0):
        raise ValueError("eps must be positive")
    m = np.ceil(eps / math.sqrt(tau) - 1e-9).astype(np.int64)
    tops = _kernels.excursion_heights(kernel_seed(seed), n_excursions(r, tau), int(m.max()))
    return (tops[:, None] >= m[None, :]).sum(axis=0)
