"""Max-norm spatial index: k-th neighbour distances and strict radius counts.

Every kNN statistic in the package goes through :class:`SpatialIndex`. The
index wraps a balanced ``scipy.spatial.cKDTree`` and always measures with the
maximum (Chebyshev) norm, so no unit-ball volume term appears in estimates.
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import EstimatorError

MAX_NORM = np.inf

PointIds = Union[int, np.integer, np.ndarray]


class SpatialIndex:
    """Immutable kd-tree over an m x d point matrix (read-only queries are thread safe)."""

    def __init__(self, points: np.ndarray, leafsize: int = 16):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise EstimatorError(f"cannot index an empty point set (shape {pts.shape})")
        if not np.all(np.isfinite(pts)):
            raise EstimatorError("points must be finite")
        self.points = np.ascontiguousarray(pts)
        self.points.setflags(write=False)
        self._tree = cKDTree(self.points, leafsize=leafsize, balanced_tree=True, compact_nodes=True)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.size

    def kth_neighbor_distance(self, query_point_id: PointIds, k: int):
        """Max-norm distance from each query point to its k-th nearest *other* point.

        The query point itself sits at distance 0 in its own result list, so the
        (k+1)-th smallest distance over all indexed points is the k-th over the
        others, whatever the order among exact duplicates.
        """
        if k < 1 or k >= self.size:
            raise EstimatorError(f"k must satisfy 1 <= k < m (k={k}, m={self.size})")
        ids = np.asarray(query_point_id)
        dist, _ = self._tree.query(self.points[ids.reshape(-1)], k=[k + 1], p=MAX_NORM)
        dist = dist[:, 0]
        return float(dist[0]) if ids.ndim == 0 else dist

    def count_within(self, query_point_id: PointIds, radius):
        """Number of other indexed points at max-norm distance strictly below ``radius``."""
        ids = np.asarray(query_point_id)
        flat_ids = ids.reshape(-1)
        radii = np.broadcast_to(np.asarray(radius, dtype=float), flat_ids.shape)
        if np.any(radii < 0):
            raise EstimatorError("radius must be non-negative")
        # cKDTree counts dist <= r; the largest float below r turns that into dist < r.
        inner = np.nextafter(radii, 0.0)
        counts = self._tree.query_ball_point(
            self.points[flat_ids], r=inner, p=MAX_NORM, return_length=True
        ).astype(np.int64)
        counts = np.where(radii > 0, counts - 1, 0)
        return int(counts[0]) if ids.ndim == 0 else counts


def build_index(points: np.ndarray) -> SpatialIndex:
    return SpatialIndex(points)


def kth_neighbor_distance(index: SpatialIndex, query_point_id: PointIds, k: int):
    return index.kth_neighbor_distance(query_point_id, k)


def count_within(index: SpatialIndex, query_point_id: PointIds, radius):
    return index.count_within(query_point_id, radius)


def brute_force_kth_distance(points: np.ndarray, i: int, k: int) -> float:
    """O(m) reference for a single query; used by tests and debugging."""
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    dist = np.max(np.abs(pts - pts[i]), axis=1)
    dist = np.delete(dist, i)
    return float(np.sort(dist)[k - 1])


def brute_force_count(points: np.ndarray, i: int, radius: float) -> int:
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    dist = np.max(np.abs(pts - pts[i]), axis=1)
    return int(np.count_nonzero(dist < radius)) - (1 if radius > 0 else 0)
