"""Occupation densities of the head labels.

Contour indices ``0 .. length - 1`` each carry mass ``tau`` (index ``length``
is the root again), so every estimator here integrates to ``sigma``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .snake import LabeledSnake

__all__ = [
    "LocalTimeEstimate",
    "OccupationHistogram",
    "CSV_HEADER",
    "default_bandwidth",
    "local_time",
    "occupation_histogram",
    "profile",
    "estimate_row",
    "write_estimates",
]

CSV_HEADER = ("h", "w", "estimate", "sigma", "seed")


@dataclass(frozen=True)
class LocalTimeEstimate:
    h: float
    w: float
    value: float
    total_mass: float


def default_bandwidth(tau: float) -> float:
    return 5.0 * tau ** 0.25


def _labels(snake: LabeledSnake) -> np.ndarray:
    return snake.head_labels[:-1]


def local_time(snake: LabeledSnake, h: float, w: float | None = None) -> LocalTimeEstimate:
    """Box-kernel density ``tau * #{i : |W_i - h| <= w} / (2 w)``."""
    w = default_bandwidth(snake.tau) if w is None else float(w)
    if not w > 0:
        raise ValueError("bandwidth must be positive")
    hits = int(np.count_nonzero(np.abs(_labels(snake) - h) <= w))
    sigma = snake.contour.sigma
    return LocalTimeEstimate(float(h), w, hits * snake.tau / (2.0 * w), sigma)


@dataclass
class OccupationHistogram:
    """Occupation counts on the bins ``[k * width, (k + 1) * width)``.

    ``counts[j]`` belongs to bin ``first_bin + j``; each count carries mass
    ``tau``.  Histograms with the same width and tau merge by adding counts.
    """

    width: float
    tau: float
    first_bin: int = 0
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    @property
    def edges(self) -> np.ndarray:
        k = self.first_bin + np.arange(self.counts.shape[0] + 1)
        return k * self.width

    @property
    def masses(self) -> np.ndarray:
        return self.counts * self.tau

    @property
    def total_mass(self) -> float:
        return int(self.counts.sum()) * self.tau

    def density(self) -> np.ndarray:
        return self.masses / self.width

    def density_at(self, h: float) -> float:
        j = math.floor(h / self.width) - self.first_bin
        if 0 <= j < self.counts.shape[0]:
            return float(self.counts[j]) * self.tau / self.width
        return 0.0

    def merge(self, other: "OccupationHistogram") -> "OccupationHistogram":
        if other.width != self.width or other.tau != self.tau:
            raise ValueError("histograms differ in bin width or tau")
        if not other.counts.size:
            return OccupationHistogram(self.width, self.tau, self.first_bin, self.counts.copy())
        if not self.counts.size:
            return OccupationHistogram(other.width, other.tau, other.first_bin, other.counts.copy())
        lo = min(self.first_bin, other.first_bin)
        hi = max(self.first_bin + self.counts.size, other.first_bin + other.counts.size)
        out = np.zeros(hi - lo, np.int64)
        for hst in (self, other):
            out[hst.first_bin - lo:hst.first_bin - lo + hst.counts.size] += hst.counts
        return OccupationHistogram(self.width, self.tau, lo, out)


def occupation_histogram(snake: LabeledSnake, width: float) -> OccupationHistogram:
    if not width > 0:
        raise ValueError("bin width must be positive")
    k = np.floor(_labels(snake) / width).astype(np.int64)
    lo = int(k.min())
    return OccupationHistogram(float(width), snake.tau, lo, np.bincount(k - lo).astype(np.int64))


def profile(snake_rerooted: LabeledSnake, bin_width: float) -> OccupationHistogram:
    """Histogram of distances from the distinguished point of a re-rooted snake."""
    if snake_rerooted.head_labels.min() < 0:
        raise ValueError("negative labels: re-root the snake at its minimum first")
    return occupation_histogram(snake_rerooted, bin_width)


def estimate_row(est: LocalTimeEstimate, seed) -> tuple:
    return (repr(est.h), repr(est.w), repr(est.value), repr(est.total_mass), seed)


def write_estimates(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        w.writerows(rows)
