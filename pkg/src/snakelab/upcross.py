"""Upcrossings of a labeled tree from level h to h + eps.

An anchor is a tree edge whose label goes from ``<= h`` to ``> h``.  The
vertices above the anchor with label ``> h`` form one connected piece of
``{label > h}``; the anchor counts once that piece contains a label ``>= h + eps``.
So the scan count equals the number of such components, which
:func:`count_components_above` recomputes by union-find.

The component holding the root (only possible when the root label is above
``h``) has no anchor and is never counted by the scan.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .snake import LabeledSnake

__all__ = [
    "UpcrossingReport",
    "CSV_HEADER",
    "count_upcrossings",
    "count_upcrossings_fresh",
    "count_components_above",
    "cactus_vertex_count",
    "report_row",
    "write_reports",
]

CSV_HEADER = ("seed", "n_steps", "tau", "h", "eps", "count")


@dataclass(frozen=True, eq=False)
class UpcrossingReport:
    """Counted events with their anchor and witness contour indices.

    ``anchors[k]`` is the contour index of the vertex at or below ``h`` just
    before the crossing edge; ``witnesses[k]`` is the first contour index in
    the component with label ``>= h + eps``.
    """

    count: int
    anchors: np.ndarray
    witnesses: np.ndarray
    h: float
    eps: float
    fresh: bool = False
    anchor_pushes: int = 0


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("eps must be positive")


def _scan(snake, h, eps, fresh):
    _check_eps(eps)
    count, anchors, witnesses, pushes = _kernels.upcross_scan(
        snake.steps, snake.head_labels, float(h), float(eps), fresh)
    return UpcrossingReport(int(count), anchors, witnesses, float(h), float(eps), fresh, int(pushes))


def count_upcrossings(snake: LabeledSnake, h: float, eps: float) -> UpcrossingReport:
    """Linear scan keeping a label stack and an anchor per stack level."""
    return _scan(snake, h, eps, False)


def count_upcrossings_fresh(snake: LabeledSnake, eps: float) -> UpcrossingReport:
    """Upcrossings from 0 to eps whose anchor's ancestral path never reached eps."""
    return _scan(snake, 0.0, eps, True)


def count_components_above(snake: LabeledSnake, h: float, eps: float,
                           include_root: bool = False) -> int:
    """Components of the subtree induced on {label > h} that reach h + eps.

    ``include_root`` also counts the component containing the root.
    """
    _check_eps(eps)
    return int(_kernels.components_above(snake.vertex_labels, snake.parents,
                                         float(h), float(eps), include_root))


def cactus_vertex_count(snake: LabeledSnake, h: float, eps: float) -> int:
    """Cactus vertices at height h with descendants at height h + eps.

    Expects a snake re-rooted at its label minimum, so that labels are distances
    from the distinguished point.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if snake.head_labels.min() < 0:
        raise ValueError("negative labels: re-root the snake at its minimum first")
    return count_upcrossings(snake, h, eps).count


def report_row(snake: LabeledSnake, report: UpcrossingReport) -> tuple:
    return (snake.rng_seed, snake.length, repr(snake.tau), repr(report.h), repr(report.eps), report.count)


def write_reports(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        w.writerows(rows)
