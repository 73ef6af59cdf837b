"""Discrete Brownian snake: tree-indexed Gaussian labels on a contour.

The tree is encoded by its Dyck path.  Vertex ``k >= 1`` is created by the
``k``-th up-step and vertex 0 is the root; contour index ``i`` visits vertex
``vertex_ids[i]``.  Labels are stored per contour index, so every visit of a
vertex carries the same float.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .excursion import ContourExcursion

__all__ = [
    "LabeledSnake",
    "SparseTable",
    "RangeMinIndex",
    "attach_labels",
    "reroot",
    "argmin_label",
    "tree_segment_min",
    "d_circ",
    "dump_snake",
    "load_snake",
    "dumps_snake",
    "loads_snake",
]


@dataclass(frozen=True, eq=False)
class LabeledSnake:
    contour: ContourExcursion
    head_labels: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        lab = np.ascontiguousarray(self.head_labels, dtype=np.float64)
        if lab.shape != (self.contour.length + 1,):
            raise ValueError("need one label per contour index")
        lab.setflags(write=False)
        object.__setattr__(self, "head_labels", lab)

    @property
    def tau(self) -> float:
        return self.contour.tau

    @property
    def length(self) -> int:
        return self.contour.length

    @property
    def steps(self) -> np.ndarray:
        return self.contour.steps

    @cached_property
    def _tree(self):
        return _kernels.decode_tree(self.contour.steps)

    @property
    def vertex_ids(self) -> np.ndarray:
        return self._tree[0]

    @property
    def parents(self) -> np.ndarray:
        return self._tree[1]

    @property
    def depths(self) -> np.ndarray:
        return self._tree[2]

    @cached_property
    def vertex_labels(self) -> np.ndarray:
        out = np.empty(self.parents.shape[0], np.float64)
        out[self.vertex_ids] = self.head_labels
        return out

    def snake_property_violations(self) -> int:
        """Revisits whose label differs from the stored vertex label (0 on valid snakes)."""
        return int(_kernels.replay_snake_property(self.contour.steps, self.head_labels))

    def __eq__(self, other):
        if not isinstance(other, LabeledSnake):
            return NotImplemented
        return (self.contour == other.contour and self.rng_seed == other.rng_seed
                and np.array_equal(self.head_labels, other.head_labels))

    __hash__ = None


def attach_labels(exc: ContourExcursion, seed: int = 0) -> LabeledSnake:
    """Brownian labels along the tree: each edge adds N(0, sqrt(tau))."""
    n_up = int(np.count_nonzero(exc.steps > 0))
    noise = np.random.default_rng(seed).standard_normal(n_up) * exc.tau ** 0.25
    return LabeledSnake(exc, _kernels.labels_from_noise(exc.steps, noise, 0.0), seed)


class SparseTable:
    """O(n log n) range-minimum table with O(1) inclusive queries."""

    def __init__(self, values):
        v = np.asarray(values)
        n = v.shape[0]
        if n == 0:
            raise ValueError("empty array")
        levels = max(1, n.bit_length())
        fill = np.inf if v.dtype.kind == "f" else np.iinfo(v.dtype).max
        table = np.full((levels, n), fill, dtype=v.dtype)
        table[0] = v
        for k in range(1, levels):
            half = 1 << (k - 1)
            width = n - (1 << k) + 1
            if width <= 0:
                table = table[:k]
                break
            np.minimum(table[k - 1, :width], table[k - 1, half:half + width], out=table[k, :width])
        self.table = table
        self.n = n

    def query(self, i, j):
        i, j = int(i), int(j)
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError("query outside the array")
        return _kernels.sparse_query(self.table, i, j)


class RangeMinIndex:
    """Range minima over the height walk and the head labels of one snake.

    Also keeps the visit lists of every vertex, needed by :func:`d_circ`.
    """

    def __init__(self, snake: LabeledSnake):
        self.snake = snake
        self.heights = SparseTable(snake.contour.walk().astype(np.int32))
        self.labels = SparseTable(snake.head_labels)
        vid = snake.vertex_ids
        self.visits = np.argsort(vid, kind="stable")
        self.visit_ptr = np.zeros(snake.parents.shape[0] + 1, np.int64)
        np.cumsum(np.bincount(vid, minlength=snake.parents.shape[0]), out=self.visit_ptr[1:])

    def mrca_depth(self, s, t) -> int:
        return int(self.heights.query(s, t))

    def label_min(self, s, t) -> float:
        return float(self.labels.query(s, t))

    def visits_of(self, s) -> np.ndarray:
        v = self.snake.vertex_ids[s]
        return self.visits[self.visit_ptr[v]:self.visit_ptr[v + 1]]


def reroot(snake: LabeledSnake, r: int, first_visit: bool = False) -> LabeledSnake:
    """Re-root the snake at contour index ``r``.

    Heights become ``z_r + z_q - 2 min(z between r and q)`` with
    ``q = (r + s) mod length`` and labels become ``W_q - W_r``; indices 0 and
    ``length`` are identified.  The map is a bijection on corners, so ``r`` is
    used as given unless ``first_visit`` moves it to the first visit of its vertex.
    """
    n = snake.length
    r = int(r)
    if not 0 <= r <= n:
        raise IndexError("r outside the contour")
    if first_visit:
        vid = snake.vertex_ids
        r = int(np.flatnonzero(vid == vid[r])[0])
    if r in (0, n):
        return snake
    w = snake.contour.walk()
    fwd = np.minimum.accumulate(w[r:n])            # q = r .. n-1
    bwd = np.minimum.accumulate(w[r::-1])[::-1]    # q = 0 .. r, min over [q, r]
    q = (r + np.arange(n + 1)) % n
    m = np.where(q >= r, fwd[np.clip(q - r, 0, n - r - 1)], bwd[np.minimum(q, r)])
    z = w[r] + w[q] - 2 * m
    z[-1] = 0
    labels = snake.head_labels
    new_labels = labels[q] - labels[r]
    new_labels[-1] = 0.0
    steps = np.diff(z).astype(np.int8)
    return LabeledSnake(ContourExcursion(steps, snake.tau), new_labels, snake.rng_seed)


def argmin_label(snake: LabeledSnake) -> int:
    """Index of the smallest head label; ties go to the first index."""
    return int(np.argmin(snake.head_labels))


def tree_segment_min(snake: LabeledSnake, idx: RangeMinIndex, s: int, t: int) -> float:
    """Min label over the tree segment between the vertices visited at s and t."""
    vid = snake.vertex_ids
    return float(_kernels.segment_min(snake.parents, snake.depths, snake.vertex_labels,
                                      vid[s], vid[t], idx.mrca_depth(s, t)))


def d_circ(snake: LabeledSnake, idx: RangeMinIndex, s: int, t: int) -> float:
    """D-circ distance between the vertices visited at contour indices s and t."""
    vid = snake.vertex_ids
    return float(_kernels.d_circ_pairs(snake.head_labels, idx.labels.table,
                                       idx.visit_ptr, idx.visits, vid[s], vid[t]))


# Binary layout, all little-endian:
#   magic b"SNKL" | u32 version | u64 n | f64 tau | u64 seed
#   | n x i8 steps | (n + 1) x f64 head labels
_MAGIC = b"SNKL"
_VERSION = 1
_HEADER = struct.Struct("<4sIQdQ")


def dumps_snake(snake: LabeledSnake) -> bytes:
    head = _HEADER.pack(_MAGIC, _VERSION, snake.length, snake.tau, snake.rng_seed & (2**64 - 1))
    return (head + snake.steps.astype("<i1").tobytes()
            + snake.head_labels.astype("<f8").tobytes())


def loads_snake(data: bytes) -> LabeledSnake:
    magic, version, n, tau, seed = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a snake dump")
    off = _HEADER.size
    if len(data) != off + n + 8 * (n + 1):
        raise ValueError("truncated snake dump")
    steps = np.frombuffer(data, "<i1", n, off)
    labels = np.frombuffer(data, "<f8", n + 1, off + n)
    return LabeledSnake(ContourExcursion(steps.astype(np.int8), tau), labels.astype(np.float64), seed)


def dump_snake(snake: LabeledSnake, path) -> None:
    with open(path, "wb") as f:
        f.write(dumps_snake(snake))


def load_snake(path) -> LabeledSnake:
    with open(path, "rb") as f:
        return loads_snake(f.read())

