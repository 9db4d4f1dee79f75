"""Jaccard affinity, seeded k-means, normalized spectral clustering and
elbow diagnostics.

All results are deterministic functions of (input, k, seed, restarts). The
functional API (:func:`jaccard_affinity`, :func:`kmeans`,
:func:`spectral_cluster`, :func:`sse_sweep`, :func:`suggest_knee`) is
wrapped by scikit-learn style estimators (:class:`JaccardAffinity`,
:class:`KMeans`, :class:`SpectralClustering`) so the steps compose with
``sklearn.pipeline``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import CurveTooShort, InputError, InvalidK, IsolatedRows
from .validation import (check_affinity, check_binary_matrix, check_k, check_points,
                         n_distinct_rows)


# ---- data types --------------------------------------------------------

@dataclass(frozen=True)
class TouchMatrix:
    """Sparse binary committer x file matrix stored as (row, col) triplets."""

    row_ids: tuple[str, ...]
    columns: tuple[str, ...]
    rows: np.ndarray
    cols: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        if rows.shape != cols.shape:
            raise InputError("triplet arrays differ in length")
        if len({*zip(rows.tolist(), cols.tolist())}) != len(rows):
            raise InputError("duplicate (row, column) entries in touch matrix")
        counts = np.bincount(rows, minlength=len(self.row_ids))
        if len(counts) > len(self.row_ids) or (len(cols) and cols.max() >= len(self.columns)):
            raise InputError("triplet index out of range")
        empty = [self.row_ids[i] for i in np.flatnonzero(counts == 0)]
        if empty:
            raise InputError(f"rows without touches: {empty}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)

    @classmethod
    def from_touches(cls, touches: Mapping[str, Iterable[str]]) -> "TouchMatrix":
        """Build from ``{row_id: touched columns}``; rows and columns sorted."""
        touches = {r: set(c) for r, c in touches.items()}
        row_ids = tuple(sorted(touches))
        columns = tuple(sorted(set().union(*touches.values()))) if touches else ()
        col_index = {c: j for j, c in enumerate(columns)}
        rows, cols = [], []
        for i, r in enumerate(row_ids):
            for c in sorted(touches[r]):
                rows.append(i)
                cols.append(col_index[c])
        return cls(row_ids, columns, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))

    @property
    def shape(self):
        return len(self.row_ids), len(self.columns)

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(len(self.rows), dtype=np.int64)
        return sp.csr_matrix((data, (self.rows, self.cols)), shape=self.shape)

    def row_sets(self) -> dict[str, set[str]]:
        out = {r: set() for r in self.row_ids}
        for i, j in zip(self.rows.tolist(), self.cols.tolist()):
            out[self.row_ids[i]].add(self.columns[j])
        return out


@dataclass(frozen=True)
class ClusterAssignment:
    algorithm: str
    k: int
    seed: int
    labels: dict[str, int]
    restarts: int = 10

    def __post_init__(self):
        if self.algorithm not in ("kmeans", "spectral"):
            raise InputError(f"unknown clustering algorithm {self.algorithm!r}")
        for ident, lab in self.labels.items():
            if not 0 <= lab < self.k:
                raise InputError(f"label {lab} of {ident} is outside [0, {self.k})")

    @classmethod
    def from_labels(cls, ids: Sequence[str], labels, algorithm: str, k: int, seed: int,
                    restarts: int = 10) -> "ClusterAssignment":
        return cls(algorithm, int(k), int(seed),
                   {i: int(l) for i, l in zip(ids, labels)}, int(restarts))

    def members(self, cluster: int) -> list[str]:
        return sorted(i for i, l in self.labels.items() if l == cluster)

    def sizes(self) -> list[int]:
        return [len(self.members(c)) for c in range(self.k)]

    def empty_clusters(self) -> list[int]:
        return [c for c, n in enumerate(self.sizes()) if n == 0]

    def to_json(self) -> dict:
        return {"algorithm": self.algorithm, "k": self.k, "seed": self.seed,
                "restarts": self.restarts,
                "labels": {i: self.labels[i] for i in sorted(self.labels)}}

    @classmethod
    def from_json(cls, d: Mapping) -> "ClusterAssignment":
        return cls(d["algorithm"], int(d["k"]), int(d["seed"]),
                   {i: int(l) for i, l in d["labels"].items()}, int(d.get("restarts", 10)))

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ClusterAssignment":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class SSECurve:
    points: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        ks = [k for k, _ in self.points]
        if ks and ks != list(range(ks[0], ks[0] + len(ks))):
            raise InputError("SSE curve k values must be consecutive and ascending")
        if any(not sse >= 0 for _, sse in self.points):
            raise InputError("SSE values must be nonnegative")

    @property
    def ks(self) -> list[int]:
        return [k for k, _ in self.points]

    @property
    def sse(self) -> list[float]:
        return [s for _, s in self.points]

    def __len__(self):
        return len(self.points)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "sse"])
            for k, s in self.points:
                w.writerow([k, f"{s:.6f}"])


# ---- Jaccard -------------------------------------------------------------

def jaccard_affinity(m) -> np.ndarray:
    """Pairwise Jaccard similarity of the rows of a binary matrix.

    ``m`` may be a :class:`TouchMatrix`, a scipy sparse matrix or a dense
    0/1 array. The diagonal of the returned matrix is 1.
    """
    X = m.to_csr() if isinstance(m, TouchMatrix) else check_binary_matrix(m)
    return _jaccard_between(X, X)


def _jaccard_between(X: sp.csr_matrix, Y: sp.csr_matrix) -> np.ndarray:
    inter = np.asarray((X @ Y.T).todense(), dtype=np.int64)
    sx = np.asarray(X.sum(axis=1)).ravel()
    sy = np.asarray(Y.sum(axis=1)).ravel()
    if np.any(sx == 0) or np.any(sy == 0):
        raise InputError("Jaccard similarity is undefined for rows without touches")
    union = sx[:, None] + sy[None, :] - inter
    return inter / union


# ---- k-means -------------------------------------------------------------

class KMeansResult(NamedTuple):
    labels: np.ndarray
    centroids: np.ndarray
    sse: float
    history: list[float]  # SSE after every assignment step of the winning restart
    n_iter: int
    restart: int


def _sq_distances(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        idx = rng.choice(n, p=d2 / d2.sum())
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _assign(X, C):
    d = _sq_distances(X, C)
    labels = d.argmin(axis=1)  # first minimum: ties go to the lowest index
    return labels, float(d[np.arange(len(X)), labels].sum())


def _lloyd(X, C, max_iter, tol):
    k = len(C)
    labels, sse = _assign(X, C)
    history = [sse]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_c = C.copy()
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j]:
                new_c[j] = X[labels == j].mean(axis=0)
        empty = np.flatnonzero(counts == 0)
        if len(empty):
            spread = ((X - new_c[labels]) ** 2).sum(axis=1)
            order = np.argsort(-spread, kind="stable")
            taken = set()
            for j in empty:
                idx = next(i for i in order if i not in taken)
                taken.add(idx)
                new_c[j] = X[idx]
        C = new_c
        labels, new_sse = _assign(X, C)
        history.append(new_sse)
        converged = sse == 0 or abs(sse - new_sse) / sse < tol
        sse = new_sse
        if converged:
            break
    return labels, C, sse, history, n_iter


def kmeans(points, k, seed=0, restarts=10, max_iter=300, tol=1e-6) -> KMeansResult:
    """Best-of-``restarts`` Lloyd k-means with k-means++ seeding.

    Restart ``r`` draws from ``numpy.random.default_rng([seed, r])``, so the
    result does not depend on the order restarts are evaluated in.
    """
    X = check_points(points)
    k = check_k(k, n_distinct_rows(X))
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        labels, C, sse, history, n_iter = _lloyd(X, _kmeans_pp(X, k, rng), max_iter, tol)
        if best is None or sse < best.sse:
            best = KMeansResult(labels, C, sse, history, n_iter, r)
    return best


# ---- spectral ------------------------------------------------------------

def spectral_embedding(a, k, ids: Sequence[str] | None = None) -> np.ndarray:
    """Row-normalized top-k eigenvectors of D^-1/2 A D^-1/2 (diagonal zeroed)."""
    A = check_affinity(a).copy()
    n = len(A)
    k = check_k(k)
    if k > n:
        raise InvalidK(f"k={k} exceeds the number of rows ({n})")
    np.fill_diagonal(A, 0.0)
    deg = A.sum(axis=1)
    isolated = np.flatnonzero(deg <= 0)
    if len(isolated):
        names = list(ids) if ids is not None else list(range(n))
        raise IsolatedRows([names[i] for i in isolated])
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    L = (L + L.T) / 2
    w, V = np.linalg.eigh(L)
    order = np.argsort(-w, kind="stable")[:k]
    U = V[:, order]
    # fix eigenvector signs so output does not depend on LAPACK's choice
    for j in range(U.shape[1]):
        pivot = np.argmax(np.abs(U[:, j]))
        if U[pivot, j] < 0:
            U[:, j] = -U[:, j]
    norms = np.linalg.norm(U, axis=1)
    nz = norms > 0
    U[nz] = U[nz] / norms[nz, None]
    return U


def spectral_cluster(a, k, seed=0, restarts=10, ids: Sequence[str] | None = None) -> np.ndarray:
    """Cluster labels from k-means on the normalized spectral embedding."""
    k = check_k(k)
    if k == 1:
        A = check_affinity(a)
        return np.zeros(len(A), dtype=np.int64)
    U = spectral_embedding(a, k, ids)
    return kmeans(U, k, seed=seed, restarts=restarts).labels


# ---- elbow -----------------------------------------------------------------

def sse_sweep(data, k_min, k_max, mode="raw_kmeans", seed=0, restarts=10) -> SSECurve:
    """SSE of the k-means stage for each k in ``[k_min, k_max]``.

    ``mode="raw_kmeans"`` clusters ``data`` directly; ``"spectral_embedding"``
    treats ``data`` as an affinity matrix and rebuilds the k-dimensional
    embedding for every k.
    """
    if mode not in ("raw_kmeans", "spectral_embedding"):
        raise InputError(f"unknown sweep mode {mode!r}")
    X = check_affinity(data) if mode == "spectral_embedding" else check_points(data)
    n = len(X)
    if not (isinstance(k_min, (int, np.integer)) and isinstance(k_max, (int, np.integer))
            and 1 <= k_min <= k_max <= n):
        raise InvalidK(f"need 1 <= k_min <= k_max <= {n}, got {k_min}..{k_max}")
    points = []
    for k in range(k_min, k_max + 1):
        Y = spectral_embedding(X, k) if mode == "spectral_embedding" else X
        if k > n_distinct_rows(Y):
            # every distinct point can be its own centroid
            points.append((k, 0.0))
            continue
        points.append((k, kmeans(Y, k, seed=seed, restarts=restarts).sse))
    return SSECurve(tuple(points))


def suggest_knee(curve: SSECurve) -> int:
    """k of the curve point farthest from the first-to-last chord."""
    if len(curve) < 3:
        raise CurveTooShort(f"need at least 3 points, got {len(curve)}")
    pts = np.array(curve.points, dtype=np.float64)
    start, end = pts[0], pts[-1]
    direction = end - start
    norm = np.hypot(*direction)
    rel = pts - start
    dist = np.abs(direction[0] * rel[:, 1] - direction[1] * rel[:, 0]) / norm
    top = dist.max()
    best = np.flatnonzero(dist >= top - 1e-12 * max(1.0, top))[0]
    return int(pts[best, 0])


# ---- estimators --------------------------------------------------------------

class JaccardAffinity(TransformerMixin, BaseEstimator):
    """Jaccard similarity against the rows seen in ``fit``.

    ``fit_transform(X)`` gives the square affinity of X with itself.
    """

    def fit(self, X, y=None):
        self.X_fit_ = check_binary_matrix(X)
        self.n_features_in_ = self.X_fit_.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "X_fit_")
        X = check_binary_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise InputError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return _jaccard_between(X, self.X_fit_)


class KMeans(ClusterMixin, BaseEstimator):
    def __init__(self, n_clusters=3, seed=0, restarts=10, max_iter=300, tol=1e-6):
        self.n_clusters = n_clusters
        self.seed = seed
        self.restarts = restarts
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        res = kmeans(X, self.n_clusters, self.seed, self.restarts, self.max_iter, self.tol)
        self.labels_ = res.labels
        self.cluster_centers_ = res.centroids
        self.inertia_ = res.sse
        self.sse_history_ = res.history
        self.n_iter_ = res.n_iter
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        return _assign(check_points(X), self.cluster_centers_)[0]


class SpectralClustering(ClusterMixin, BaseEstimator):
    """Normalized spectral clustering.

    With ``affinity="jaccard"`` the input is a binary committer x file
    matrix; with ``affinity="precomputed"`` it is a symmetric affinity.
    """

    def __init__(self, n_clusters=5, seed=0, restarts=10, affinity="jaccard"):
        self.n_clusters = n_clusters
        self.seed = seed
        self.restarts = restarts
        self.affinity = affinity

    def fit(self, X, y=None):
        if self.affinity == "jaccard":
            A = jaccard_affinity(X)
        elif self.affinity == "precomputed":
            A = check_affinity(X)
        else:
            raise InputError(f"unknown affinity {self.affinity!r}")
        self.affinity_matrix_ = A
        if self.n_clusters > 1:
            self.embedding_ = spectral_embedding(A, self.n_clusters)
        self.labels_ = spectral_cluster(A, self.n_clusters, self.seed, self.restarts)
        return self
