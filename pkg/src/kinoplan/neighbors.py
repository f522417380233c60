"""k-nearest-neighbour queries on the (angle-wrapped) state space.

Two interchangeable indexes return identical answers: ``LinearIndex`` scans
every stored state, ``KDTreeIndex`` keeps a periodic ``cKDTree`` over a prefix
of the states and scans only the recently added tail, rebuilding the tree as
the tail grows. Results are ordered by distance with ties broken by lower id.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .statespace import TWO_PI, State


class _GrowableStates:
    def __init__(self, n_dof: int, capacity: int = 1024):
        self.n_dof = n_dof
        self._q = np.empty((capacity, n_dof))
        self._qd = np.empty((capacity, n_dof))
        self.size = 0

    def append(self, q, qd):
        if self.size == self._q.shape[0]:
            self._q = np.concatenate([self._q, np.empty_like(self._q)])
            self._qd = np.concatenate([self._qd, np.empty_like(self._qd)])
        self._q[self.size] = q
        self._qd[self.size] = qd
        self.size += 1

    @property
    def q(self):
        return self._q[:self.size]

    @property
    def qd(self):
        return self._qd[:self.size]


def _distances(q, qd, x: State, w: float):
    dq = np.mod(q - x.q + np.pi, TWO_PI) - np.pi
    dv = qd - x.qd
    return np.sqrt(np.sum(dq * dq, axis=1) + (w * w) * np.sum(dv * dv, axis=1))


def _take_k(dist, ids, k):
    order = np.lexsort((ids, dist))[:k]
    return ids[order]


class LinearIndex:
    def __init__(self, n_dof: int, velocity_weight: float = 1.0):
        self.states = _GrowableStates(n_dof)
        self.velocity_weight = float(velocity_weight)

    def __len__(self):
        return self.states.size

    def add(self, q, qd):
        self.states.append(q, qd)

    def query(self, x: State, k: int) -> np.ndarray:
        dist = _distances(self.states.q, self.states.qd, x, self.velocity_weight)
        ids = np.arange(dist.shape[0])
        if k < dist.shape[0]:
            part = np.argpartition(dist, k - 1)[:k]
            # keep every node tied with the k-th distance so id tie-breaking is exact
            cutoff = dist[part].max()
            ids = np.flatnonzero(dist <= cutoff)
        return _take_k(dist[ids], ids, k)


class KDTreeIndex(LinearIndex):
    def __init__(self, n_dof: int, velocity_weight: float = 1.0, min_tail: int = 256,
                 tail_fraction: float = 0.125):
        super().__init__(n_dof, velocity_weight)
        self.min_tail = int(min_tail)
        self.tail_fraction = float(tail_fraction)
        self._tree = None
        self._tree_size = 0
        self._boxsize = np.r_[np.full(n_dof, TWO_PI), np.zeros(n_dof)]

    def _coords(self, q, qd):
        return np.hstack([np.mod(q + np.pi, TWO_PI), self.velocity_weight * qd])

    def add(self, q, qd):
        super().add(q, qd)
        tail = self.states.size - self._tree_size
        if tail > max(self.min_tail, self.tail_fraction * self._tree_size):
            self._tree = cKDTree(self._coords(self.states.q, self.states.qd), boxsize=self._boxsize)
            self._tree_size = self.states.size

    def query(self, x: State, k: int) -> np.ndarray:
        n = self.states.size
        if self._tree is None or n <= k:
            return super().query(x, k)
        kk = min(k, self._tree_size)
        point = self._coords(x.q[None, :], x.qd[None, :])[0]
        d, _ = self._tree.query(point, k=kk)
        # ball query picks up every node tied with the k-th (duplicate states are common)
        radius = float(np.atleast_1d(d)[-1]) * (1.0 + 1e-9) + 1e-12
        tree_ids = np.asarray(self._tree.query_ball_point(point, radius), dtype=np.intp)
        ids = np.concatenate([tree_ids, np.arange(self._tree_size, n)])
        dist = _distances(self.states.q[ids], self.states.qd[ids], x, self.velocity_weight)
        return _take_k(dist, ids, k)


def make_index(kind: str, n_dof: int, velocity_weight: float = 1.0):
    if kind == "kdtree":
        return KDTreeIndex(n_dof, velocity_weight)
    if kind == "linear":
        return LinearIndex(n_dof, velocity_weight)
    raise ValueError(f"unknown neighbour index {kind!r} (expected kdtree or linear)")
