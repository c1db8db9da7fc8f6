"""kNN estimators of entropy, mutual information and conditional mutual information.

All estimates are in nats and use the maximum norm. Mutual information follows
the Kraskov-Stoegbauer-Grassberger construction: the length scale eps(i)/2 is
the k-th neighbour distance in the joint space and marginal spaces contribute
strict counts at that radius. Estimates may be slightly negative on independent
data and are returned unclamped.
"""

from __future__ import annotations

import hashlib
from typing import Optional

import numpy as np
from scipy.special import digamma as _digamma

from .errors import DegenerateSampleError, EstimatorError
from .knn import SpatialIndex


def digamma(x):
    """psi(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise EstimatorError(f"digamma requires positive finite arguments, got {x!r}")
    out = _digamma(arr)
    return float(out) if arr.ndim == 0 else out


def as_matrix(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise EstimatorError(f"expected a vector or an n x d matrix, got shape {arr.shape}")
    return arr


def column_key(col: np.ndarray) -> int:
    """Stable 64-bit key of a column's values, independent of its argument slot."""
    digest = hashlib.blake2b(np.ascontiguousarray(col, dtype=float).tobytes(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def add_jitter(a, scale: float = 1e-10, seed: int = 0) -> np.ndarray:
    """Break exact ties with uniform noise of width ``scale`` x column sd.

    Each column draws from ``default_rng([seed, column_key(column)])``, so a
    variable gets the same noise whether it is passed as x, y or part of z.
    """
    arr = as_matrix(a).copy()
    if scale <= 0:
        return arr
    for j in range(arr.shape[1]):
        col = np.ascontiguousarray(arr[:, j])
        rng = np.random.default_rng([seed, column_key(col)])
        arr[:, j] = col + (rng.random(col.shape[0]) - 0.5) * scale * col.std()
    return arr


def _check_k(n: int, k: int) -> None:
    if k < 1 or k >= n:
        raise EstimatorError(f"k must satisfy 1 <= k < n (k={k}, n={n})")


def _joint_radius(joint: np.ndarray, k: int) -> np.ndarray:
    radius = SpatialIndex(joint).kth_neighbor_distance(np.arange(joint.shape[0]), k)
    if np.any(radius <= 0):
        raise DegenerateSampleError(
            f"{int(np.count_nonzero(radius <= 0))} points have a zero k-th neighbour distance (duplicates)"
        )
    return radius


def entropy(data, k: int = 3, jitter: float = 1e-10, seed: int = 0) -> float:
    """Kozachenko-Leonenko differential entropy, psi(n) - psi(k) + d/n * sum log eps(i)."""
    x = add_jitter(data, jitter, seed)
    n, d = x.shape
    _check_k(n, k)
    eps = 2.0 * _joint_radius(x, k)
    return float(digamma(n) - digamma(k) + d * np.mean(np.log(eps)))


class KSGEstimator:
    """Conditional MI estimator with the fixed half of the problem pre-indexed.

    ``x`` and ``z`` stay fixed while ``estimate`` is called with many ``y``
    (a permutation test shuffles only y), so the (X,Z) and Z indexes (or the X
    index when z is empty) are built once. Inputs are used as given: callers
    apply jitter beforehand.
    """

    def __init__(self, x, z=None, k: int = 3):
        self.x = as_matrix(x)
        self.n = self.x.shape[0]
        self.z = np.empty((self.n, 0)) if z is None else as_matrix(z)
        if self.z.shape[0] != self.n:
            raise EstimatorError(f"x has {self.n} rows but z has {self.z.shape[0]}")
        _check_k(self.n, k)
        self.k = k
        self._ids = np.arange(self.n)
        if self.conditional:
            self._xz_index = SpatialIndex(np.hstack([self.x, self.z]))
            self._z_index = SpatialIndex(self.z)
        else:
            self._x_index = SpatialIndex(self.x)

    @property
    def conditional(self) -> bool:
        return self.z.shape[1] > 0

    def estimate(self, y) -> float:
        y = as_matrix(y)
        if y.shape[0] != self.n:
            raise EstimatorError(f"x has {self.n} rows but y has {y.shape[0]}")
        if not self.conditional:
            radius = _joint_radius(np.hstack([self.x, y]), self.k)
            n_x = self._x_index.count_within(self._ids, radius)
            n_y = SpatialIndex(y).count_within(self._ids, radius)
            return float(
                digamma(self.k) + digamma(self.n) - np.mean(digamma(n_x + 1) + digamma(n_y + 1))
            )
        radius = _joint_radius(np.hstack([self.x, y, self.z]), self.k)
        n_xz = self._xz_index.count_within(self._ids, radius)
        n_yz = SpatialIndex(np.hstack([y, self.z])).count_within(self._ids, radius)
        n_z = self._z_index.count_within(self._ids, radius)
        return float(digamma(self.k) - np.mean(digamma(n_xz + 1) + digamma(n_yz + 1) - digamma(n_z + 1)))


def mutual_information(x, y, k: int = 3, jitter: float = 1e-10, seed: int = 0) -> float:
    """KSG estimate of I(X;Y) in nats."""
    x, y = as_matrix(x), as_matrix(y)
    if x.shape[0] != y.shape[0]:
        raise EstimatorError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
    x = add_jitter(x, jitter, seed)
    y = add_jitter(y, jitter, seed)
    return KSGEstimator(x, None, k).estimate(y)


def conditional_mutual_information(
    x, y, z=None, k: int = 3, jitter: float = 1e-10, seed: int = 0
) -> float:
    """Estimate of I(X;Y|Z) in nats; an empty or missing ``z`` falls back to I(X;Y)."""
    x, y = as_matrix(x), as_matrix(y)
    if z is None or as_matrix(z).shape[1] == 0:
        return mutual_information(x, y, k, jitter, seed)
    z = as_matrix(z)
    if not (x.shape[0] == y.shape[0] == z.shape[0]):
        raise EstimatorError(f"row counts differ: x={x.shape[0]}, y={y.shape[0]}, z={z.shape[0]}")
    x = add_jitter(x, jitter, seed)
    y = add_jitter(y, jitter, seed)
    z = add_jitter(z, jitter, seed)
    return KSGEstimator(x, z, k).estimate(y)


def marginal_counts(x, y, z: Optional[np.ndarray] = None, k: int = 3) -> dict:
    """Per-point marginal counts at the joint k-th neighbour radius (no jitter applied)."""
    x, y = as_matrix(x), as_matrix(y)
    n = x.shape[0]
    _check_k(n, k)
    ids = np.arange(n)
    if z is None or as_matrix(z).shape[1] == 0:
        radius = _joint_radius(np.hstack([x, y]), k)
        return {
            "radius": radius,
            "n_x": SpatialIndex(x).count_within(ids, radius),
            "n_y": SpatialIndex(y).count_within(ids, radius),
        }
    z = as_matrix(z)
    radius = _joint_radius(np.hstack([x, y, z]), k)
    return {
        "radius": radius,
        "n_xz": SpatialIndex(np.hstack([x, z])).count_within(ids, radius),
        "n_yz": SpatialIndex(np.hstack([y, z])).count_within(ids, radius),
        "n_z": SpatialIndex(z).count_within(ids, radius),
    }
